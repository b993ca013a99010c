#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "bridgelab/cli.hpp"

using namespace bridgelab;
namespace fs = std::filesystem;

namespace {

struct Sandbox {
    fs::path root;
    Sandbox() : root(fs::temp_directory_path() / "bl_cli_test") {
        fs::remove_all(root);
        fs::create_directories(root);
        setenv("BRIDGELAB_RUNS", (root / "runs").c_str(), 1);
    }
    ~Sandbox() {
        fs::remove_all(root);
        unsetenv("BRIDGELAB_RUNS");
    }
    std::string config() {
        Json user = {
            {"data", {{"task", "linear"}, {"n", 24}, {"dim_x", 6}, {"dim_y", 4}}},
            {"model", {{"embed_dim", 8}, {"num_heads", 2}, {"depth", 1}}},
            {"codec", {{"token_count", 3}, {"embed_dim", 8}, {"hidden", 16}}},
            {"train", {{"iterations", 8}, {"batch_size", 4}, {"alt_period", 4}}},
            {"sampler", {{"steps", 8}}},
        };
        fs::path p = root / "config.json";
        std::ofstream(p) << user.dump(2);
        return p.string();
    }
    std::string in(const char* name) { return (root / name).string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("make-data writes a loadable dataset and respects append-only dirs") {
    Sandbox sb;
    std::string out = sb.in("data");
    CHECK(run_cli({"make-data", "--config", sb.config(), "--out", out}) == 0);
    auto ds = load_dataset(out);
    CHECK(ds.xs.size() == 24);
    CHECK(ds.manifest.at("task") == "linear");
    CHECK(run_cli({"make-data", "--config", sb.config(), "--out", out}) == kExitConfigError);
    CHECK(run_cli({"make-data", "--config", sb.config(), "--out", out, "--force"}) == 0);
}

TEST_CASE("train writes a self-describing run directory") {
    Sandbox sb;
    CHECK(run_cli({"train", "--config", sb.config(), "--run", "r1"}) == 0);
    fs::path run = sb.root / "runs" / "r1";
    CHECK(fs::exists(run / "config.json"));
    CHECK(fs::exists(run / "run.json"));
    CHECK(fs::exists(run / "loss_trace.csv"));
    CHECK(fs::exists(run / "checkpoint" / "manifest.json"));
    auto t = Trainer::load((run / "checkpoint").string());
    CHECK(t->iteration() == 8);

    // append-only run dirs
    CHECK(run_cli({"train", "--config", sb.config(), "--run", "r1"}) == kExitConfigError);

    // determinism: a rerun under --force reproduces the loss trace byte for byte
    std::string trace1 = slurp(run / "loss_trace.csv");
    CHECK(run_cli({"train", "--config", sb.config(), "--run", "r1", "--force"}) == 0);
    CHECK(slurp(run / "loss_trace.csv") == trace1);
}

TEST_CASE("config errors exit with code 2 and name the key") {
    Sandbox sb;
    CHECK(run_cli({"train", "--config", sb.config(), "--run", "bad", "--set",
                   "model.depht=2"}) == kExitConfigError);
    CHECK(run_cli({"train", "--config", sb.in("nope.json"), "--run", "bad"}) ==
          kExitConfigError);
    CHECK(run_cli({"eval", "--checkpoint", sb.in("missing_ckpt")}) == kExitRuntimeError);
}

TEST_CASE("sample translates deterministically and records overrides") {
    Sandbox sb;
    REQUIRE(run_cli({"make-data", "--config", sb.config(), "--out", sb.in("data")}) == 0);
    REQUIRE(run_cli({"train", "--config", sb.config(), "--run", "r2"}) == 0);
    std::string ckpt = (sb.root / "runs" / "r2" / "checkpoint").string();

    CHECK(run_cli({"sample", "--checkpoint", ckpt, "--input", sb.in("data"), "--out",
                   sb.in("out1"), "--set", "sampler.steps=10", "--limit", "6"}) == 0);
    CHECK(run_cli({"sample", "--checkpoint", ckpt, "--input", sb.in("data"), "--out",
                   sb.in("out2"), "--set", "sampler.steps=10", "--limit", "6"}) == 0);
    CHECK(slurp(sb.in("out1") + "/arrays.bin") == slurp(sb.in("out2") + "/arrays.bin"));

    auto out = load_dataset(sb.in("out1"));
    CHECK(out.xs.size() == 6);
    CHECK(out.xs[0].shape == std::vector<int>{6});
    CHECK(out.manifest.at("sampler").at("steps") == 10);
}

TEST_CASE("eval emits a JSON-lines report with hash and sample count") {
    Sandbox sb;
    REQUIRE(run_cli({"train", "--config", sb.config(), "--run", "r3"}) == 0);
    std::string ckpt = (sb.root / "runs" / "r3" / "checkpoint").string();
    std::string report = sb.in("report.jsonl");
    CHECK(run_cli({"eval", "--checkpoint", ckpt, "--out", report, "--limit", "8"}) == 0);

    std::ifstream in(report);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        Json row = Json::parse(line);
        CHECK(row.contains("metric"));
        CHECK(row.contains("value"));
        CHECK(row.at("sample_count") == 8);
        CHECK(row.at("config_hash").get<std::string>().size() == 16);
        ++rows;
    }
    CHECK(rows >= 1);
}

TEST_CASE("ablate runs the cross product and writes a summary table") {
    Sandbox sb;
    CHECK(run_cli({"ablate", "--config", sb.config(), "--run", "ab1", "--axis",
                   "loss.mode=ours,basic", "--jobs", "2", "--limit", "4"}) == 0);
    fs::path dir = sb.root / "runs" / "ab1";
    CHECK(fs::exists(dir / "cell_0" / "checkpoint" / "manifest.json"));
    CHECK(fs::exists(dir / "cell_1" / "checkpoint" / "manifest.json"));
    CHECK(!fs::exists(dir / "cell_2"));
    std::istringstream csv(slurp(dir / "summary.csv"));
    std::string line;
    int rows = -1;  // header
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);

    // empty grid = one baseline cell
    CHECK(run_cli({"ablate", "--config", sb.config(), "--run", "ab2", "--limit", "4"}) == 0);
    CHECK(fs::exists(sb.root / "runs" / "ab2" / "cell_0" / "checkpoint"));
    CHECK(!fs::exists(sb.root / "runs" / "ab2" / "cell_1"));

    // invalid axis is a config error
    CHECK(run_cli({"ablate", "--config", sb.config(), "--run", "ab3", "--axis",
                   "model.depth=1,2"}) == kExitConfigError);
}
