#include "bridgelab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "bridgelab/metrics.hpp"

namespace fs = std::filesystem;

namespace bridgelab {

std::string runs_root() {
    const char* env = std::getenv("BRIDGELAB_RUNS");
    return env && *env ? env : "runs";
}

namespace {

ExperimentConfig resolve_config(const std::string& path,
                                const std::vector<std::string>& overrides) {
    ExperimentConfig cfg =
        path.empty() ? ExperimentConfig::resolve(Json::object()) : ExperimentConfig::from_file(path);
    for (const auto& kv : overrides) cfg.apply_override(kv);
    return cfg;
}

// Run directories are append-only: an existing non-empty target needs --force.
void prepare_dir(const fs::path& dir, bool force) {
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!force)
            throw ConfigError("output directory '" + dir.string() +
                              "' already exists; pass --force to overwrite");
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
}

PairedDataset dataset_for(const ExperimentConfig& cfg, const std::string& data_dir,
                          uint64_t seed_shift = 0) {
    std::string path = data_dir.empty() ? cfg.tree["data"]["path"].get<std::string>() : data_dir;
    if (!path.empty()) return load_dataset(path);
    const Json& d = cfg.tree["data"];
    return make_dataset(d["task"], d["n"], d["seed"].get<uint64_t>() + seed_shift, d["dim_x"],
                        d["dim_y"]);
}

std::string normalize_task(std::string task) {
    if (task == "shapes") return "toy_shapes";
    if (task == "sr") return "toy_sr";
    return task;
}

void write_run_stamp(const fs::path& dir, const ExperimentConfig& cfg) {
    std::ofstream cfg_out(dir / "config.json");
    cfg_out << cfg.tree.dump(2) << '\n';
    std::ofstream stamp(dir / "run.json");
    stamp << Json{{"tool", "bridgelab"},
                  {"version", 1},
                  {"config_hash", cfg.hash()},
                  {"seed", cfg.tree["train"]["seed"]}}
                 .dump(2)
          << '\n';
}

int cmd_make_data(const ExperimentConfig& cfg, const std::string& out, bool force) {
    prepare_dir(out, force);
    save_dataset(dataset_for(cfg, ""), out);
    std::cout << "wrote dataset to " << out << "\n";
    return kExitOk;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& run_name,
              const std::string& data_dir, bool force) {
    fs::path dir = fs::path(runs_root()) / run_name;
    prepare_dir(dir, force);
    write_run_stamp(dir, cfg);
    PairedDataset data = dataset_for(cfg, data_dir);
    Trainer trainer(cfg);
    trainer.run(data);
    trainer.save((dir / "checkpoint").string());
    trainer.write_trace_csv((dir / "loss_trace.csv").string());
    std::cout << "trained " << trainer.iteration() << " iterations; final loss "
              << trainer.trace().back().total << "\n";
    return kExitOk;
}

int cmd_sample(const std::string& ckpt_dir, const std::string& input_dir, const std::string& out,
               const std::vector<std::string>& overrides, int limit, bool force) {
    auto trainer = Trainer::load(ckpt_dir);
    ExperimentConfig cfg = trainer->config();
    for (const auto& kv : overrides) cfg.apply_override(kv);
    SamplerConfig scfg = cfg.sampler();

    PairedDataset input = load_dataset(input_dir);
    int n = static_cast<int>(input.ys.size());
    if (limit > 0 && limit < n) n = limit;

    PairedDataset out_ds;
    out_ds.manifest = input.manifest;
    out_ds.manifest["n"] = n;
    out_ds.manifest["sampler"] = cfg.tree["sampler"];
    out_ds.manifest["config_hash"] = cfg.hash();
    for (int i = 0; i < n; ++i) {
        out_ds.xs.push_back(trainer->translate_sample(input.ys[i], scfg));
        out_ds.ys.push_back(input.ys[i]);
    }
    prepare_dir(out, force);
    save_dataset(out_ds, out);
    std::cout << "wrote " << n << " translated samples to " << out << "\n";
    return kExitOk;
}

}  // namespace

Json evaluate_trainer(Trainer& trainer, const PairedDataset& data, int limit,
                      const SamplerConfig& scfg) {
    std::string task = normalize_task(data.manifest.value("task", "linear"));
    int n = static_cast<int>(data.xs.size());
    if (limit > 0 && limit < n) n = limit;
    if (n == 0) throw std::invalid_argument("evaluate_trainer: empty dataset");

    std::vector<NdArray> preds;
    preds.reserve(n);
    for (int i = 0; i < n; ++i) preds.push_back(trainer.translate_sample(data.ys[i], scfg));

    Json metrics;
    if (task == "toy_shapes") {
        double iou_sum = 0.0;
        std::vector<Mat> real, gen;
        for (int i = 0; i < n; ++i) {
            iou_sum += iou(preds[i], data.xs[i]);
            NdArray pb = preds[i];
            for (long k = 0; k < pb.data.size(); ++k) pb.data[k] = pb.data[k] > 0.5 ? 1.0 : 0.0;
            if (pb.data.maxCoeff() > 0.0 && data.xs[i].data.maxCoeff() > 0.0) {
                real.push_back(voxel_to_pointcloud(data.xs[i]));
                gen.push_back(voxel_to_pointcloud(pb));
            }
        }
        metrics["iou"] = iou_sum / n;
        if (real.size() >= 2) metrics["one_nna"] = one_nna_pointclouds(real, gen);
    } else if (task == "toy_sr") {
        double p = 0.0, s = 0.0;
        for (int i = 0; i < n; ++i) {
            p += psnr(data.xs[i], preds[i], 1.0);
            s += ssim(data.xs[i], preds[i], 1.0);
        }
        metrics["psnr"] = p / n;
        metrics["ssim"] = s / n;
    } else {
        double mse = 0.0, scale = 0.0;
        for (int i = 0; i < n; ++i) {
            mse += (data.xs[i].data - preds[i].data).squaredNorm() / data.xs[i].data.size();
            scale = std::max(scale, data.xs[i].data.cwiseAbs().maxCoeff());
        }
        metrics["mse"] = mse / n;
        double peak = scale > 0 ? scale : 1.0;
        metrics["psnr"] = 10.0 * std::log10(peak * peak / std::max(mse / n, 1e-20 * peak * peak));
    }
    metrics["sample_count"] = n;
    return metrics;
}

namespace {

int cmd_eval(const std::string& ckpt_dir, const std::string& data_dir, int limit,
             const std::vector<std::string>& overrides, const std::string& out_path) {
    auto trainer = Trainer::load(ckpt_dir);
    ExperimentConfig cfg = trainer->config();
    for (const auto& kv : overrides) cfg.apply_override(kv);

    PairedDataset data =
        data_dir.empty() ? dataset_for(cfg, "", /*seed_shift=*/9001) : load_dataset(data_dir);
    Json metrics = evaluate_trainer(*trainer, data, limit, cfg.sampler());

    auto now = std::chrono::system_clock::now().time_since_epoch();
    int sample_count = metrics["sample_count"];
    metrics.erase("sample_count");
    std::ostringstream lines;
    for (auto it = metrics.begin(); it != metrics.end(); ++it) {
        Json row{{"metric", it.key()},
                 {"value", it.value()},
                 {"sample_count", sample_count},
                 {"config_hash", cfg.hash()},
                 {"timestamp",
                  std::chrono::duration_cast<std::chrono::seconds>(now).count()}};
        lines << row.dump() << '\n';
    }
    std::cout << lines.str();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << lines.str();
    }
    return kExitOk;
}

struct AblateCell {
    std::string label;
    std::vector<std::string> overrides;
};

int cmd_ablate(const ExperimentConfig& base, const std::vector<std::string>& axes,
               const std::string& run_name, int jobs, int eval_limit, bool force) {
    static const std::vector<std::string> kAllowed = {"loss.mode", "train.regime",
                                                      "sampler.steps"};
    std::vector<std::pair<std::string, std::vector<std::string>>> grid;
    for (const std::string& axis : axes) {
        auto eq = axis.find('=');
        if (eq == std::string::npos)
            throw ConfigError("grid axis '" + axis + "' must look like key=v1,v2,...");
        std::string key = axis.substr(0, eq);
        if (std::find(kAllowed.begin(), kAllowed.end(), key) == kAllowed.end())
            throw ConfigError("grid axis '" + key +
                              "' is not sweepable (allowed: loss.mode, train.regime, "
                              "sampler.steps)");
        std::vector<std::string> values;
        std::stringstream ss(axis.substr(eq + 1));
        std::string v;
        while (std::getline(ss, v, ',')) values.push_back(v);
        if (values.empty()) throw ConfigError("grid axis '" + key + "' has no values");
        grid.emplace_back(key, values);
    }

    std::vector<AblateCell> cells{{"baseline", {}}};
    for (const auto& [key, values] : grid) {
        std::vector<AblateCell> next;
        for (const auto& cell : cells)
            for (const auto& v : values) {
                AblateCell c = cell;
                c.label = cell.label == "baseline" ? key + "=" + v : cell.label + "," + key + "=" + v;
                c.overrides.push_back(key + "=" + v);
                next.push_back(std::move(c));
            }
        cells = std::move(next);
    }

    // Validate every cell before spending any training time.
    std::vector<ExperimentConfig> cfgs;
    for (const auto& cell : cells) {
        ExperimentConfig cfg = base;
        for (const auto& kv : cell.overrides) cfg.apply_override(kv);
        cfgs.push_back(std::move(cfg));
    }

    fs::path dir = fs::path(runs_root()) / run_name;
    prepare_dir(dir, force);
    write_run_stamp(dir, base);

    std::vector<Json> results(cells.size());
    std::atomic<size_t> next_cell{0};
    auto worker = [&]() {
        for (;;) {
            size_t i = next_cell.fetch_add(1);
            if (i >= cells.size()) return;
            fs::path cell_dir = dir / ("cell_" + std::to_string(i));
            fs::create_directories(cell_dir);
            write_run_stamp(cell_dir, cfgs[i]);
            PairedDataset data = dataset_for(cfgs[i], "");
            Trainer trainer(cfgs[i]);
            trainer.run(data);
            trainer.save((cell_dir / "checkpoint").string());
            trainer.write_trace_csv((cell_dir / "loss_trace.csv").string());
            PairedDataset held = dataset_for(cfgs[i], "", /*seed_shift=*/9001);
            results[i] = evaluate_trainer(trainer, held, eval_limit, cfgs[i].sampler());
            results[i]["final_loss"] = trainer.trace().back().total;
        }
    };
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::ofstream csv(dir / "summary.csv");
    csv << "cell,label,final_loss,metrics\n";
    for (size_t i = 0; i < cells.size(); ++i) {
        Json metrics = results[i];
        double final_loss = metrics.value("final_loss", 0.0);
        metrics.erase("final_loss");
        csv << i << ",\"" << cells[i].label << "\"," << final_loss << ",\""
            << metrics.dump() << "\"\n";
    }
    std::cout << "ablation wrote " << cells.size() << " cells to " << dir << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"bridgelab: latent bridge translation experiments"};
    app.require_subcommand(1);

    std::string config_path, run_name = "run", data_dir, out_path, ckpt_dir, input_dir;
    std::vector<std::string> overrides, axes;
    bool force = false;
    int jobs = 1, limit = 64;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON experiment config");
        sub->add_option("--set", overrides, "dotted.key=value config override");
        sub->add_flag("--force", force, "allow overwriting an existing output directory");
    };

    CLI::App* mk = app.add_subcommand("make-data", "generate and save a paired dataset");
    add_common(mk);
    mk->add_option("--out", out_path, "output directory")->required();

    CLI::App* tr = app.add_subcommand("train", "train a model into a run directory");
    add_common(tr);
    tr->add_option("--run", run_name, "run directory name under the run root");
    tr->add_option("--data", data_dir, "pre-generated dataset directory");

    CLI::App* sa = app.add_subcommand("sample", "translate a dataset through a checkpoint");
    sa->add_option("--checkpoint", ckpt_dir, "checkpoint directory")->required();
    sa->add_option("--input", input_dir, "input dataset directory")->required();
    sa->add_option("--out", out_path, "output dataset directory")->required();
    sa->add_option("--set", overrides, "dotted.key=value config override");
    sa->add_option("--limit", limit, "max samples to translate");
    sa->add_flag("--force", force, "allow overwriting an existing output directory");

    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    ev->add_option("--checkpoint", ckpt_dir, "checkpoint directory")->required();
    ev->add_option("--data", data_dir, "evaluation dataset directory");
    ev->add_option("--out", out_path, "JSON-lines report file");
    ev->add_option("--set", overrides, "dotted.key=value config override");
    ev->add_option("--limit", limit, "max samples to evaluate");

    CLI::App* ab = app.add_subcommand("ablate", "grid sweep over loss/regime/steps");
    add_common(ab);
    ab->add_option("--run", run_name, "run directory name under the run root");
    ab->add_option("--axis", axes, "grid axis, e.g. loss.mode=ours,basic");
    ab->add_option("--jobs", jobs, "concurrent cells");
    ab->add_option("--limit", limit, "max samples per cell evaluation");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (mk->parsed()) return cmd_make_data(resolve_config(config_path, overrides), out_path, force);
        if (tr->parsed())
            return cmd_train(resolve_config(config_path, overrides), run_name, data_dir, force);
        if (sa->parsed()) return cmd_sample(ckpt_dir, input_dir, out_path, overrides, limit, force);
        if (ev->parsed()) return cmd_eval(ckpt_dir, data_dir, limit, overrides, out_path);
        if (ab->parsed())
            return cmd_ablate(resolve_config(config_path, overrides), axes, run_name, jobs, limit,
                              force);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    return kExitConfigError;
}

}  // namespace bridgelab
