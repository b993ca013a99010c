#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bridgelab/datasets.hpp"

using namespace bridgelab;

namespace {

struct TmpDir {
    std::filesystem::path path;
    TmpDir(const char* name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
    }
    ~TmpDir() { std::filesystem::remove_all(path); }
    std::string str() const { return path.string(); }
};

// Independent projection oracle: max over the grid along each view axis,
// mirrored for the back views, with 2x pixel doubling.
double oracle_pixel(const NdArray& g, int view, int r, int c) {
    auto at = [&](int i, int j, int k) { return g.data[(i * 16 + j) * 16 + k]; };
    int u = c / 2, vz = r / 2;
    double m = 0.0;
    for (int a = 0; a < 16; ++a) {
        double val = 0.0;
        if (view == 0) val = at(a, u, vz);
        if (view == 1) val = at(15 - u, a, vz);
        if (view == 2) val = at(a, 15 - u, vz);
        if (view == 3) val = at(u, a, vz);
        m = std::max(m, val);
    }
    return m;
}

}  // namespace

TEST_CASE("full grid projects to fully occupied silhouettes") {
    NdArray g({16, 16, 16});
    g.data.setOnes();
    NdArray s = render_silhouettes(g);
    CHECK(s.shape == std::vector<int>{4, 32, 32});
    CHECK(s.data.minCoeff() == 1.0);
}

TEST_CASE("centered ball gives four identical circular silhouettes") {
    NdArray g({16, 16, 16});
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j)
            for (int k = 0; k < 16; ++k) {
                double px = i - 7.5, py = j - 7.5, pz = k - 7.5;
                if (px * px + py * py + pz * pz <= 25.0) g.data[(i * 16 + j) * 16 + k] = 1.0;
            }
    NdArray s = render_silhouettes(g);
    const long per = 32 * 32;
    for (int v = 1; v < 4; ++v)
        CHECK((s.data.segment(v * per, per) - s.data.head(per)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("generated silhouettes match the brute-force projection oracle") {
    auto ds = make_toy_shapes(6, 123);
    REQUIRE(ds.xs.size() == 6);
    for (int s = 0; s < 6; ++s) {
        for (int v = 0; v < 4; ++v)
            for (int r = 0; r < 32; ++r)
                for (int c = 0; c < 32; ++c)
                    REQUIRE(ds.ys[s].data[(v * 32 + r) * 32 + c] ==
                            oracle_pixel(ds.xs[s], v, r, c));
    }
    // the oracle is sensitive: pairing y[0] with x[1] must break it
    bool mismatch = false;
    for (int r = 0; r < 32 && !mismatch; ++r)
        for (int c = 0; c < 32 && !mismatch; ++c)
            if (ds.ys[0].data[r * 32 + c] != oracle_pixel(ds.xs[1], 0, r, c)) mismatch = true;
    CHECK(mismatch);
}

TEST_CASE("sr pairs are exact average pools") {
    auto ds = make_toy_sr(5, 77);
    for (int s = 0; s < 5; ++s) {
        const NdArray& x = ds.xs[s];
        const NdArray& y = ds.ys[s];
        CHECK(x.shape == std::vector<int>{32, 32});
        CHECK(y.shape == std::vector<int>{8, 8});
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 8; ++c) {
                double sum = 0.0;
                for (int dr = 0; dr < 4; ++dr)
                    for (int dc = 0; dc < 4; ++dc) sum += x.data[(r * 4 + dr) * 32 + c * 4 + dc];
                REQUIRE(y.data[r * 8 + c] == doctest::Approx(sum / 16.0).epsilon(1e-12));
            }
        CHECK(y.data.mean() == doctest::Approx(x.data.mean()).epsilon(1e-10));
        CHECK(x.data.maxCoeff() <= 1.0);
        CHECK(x.data.minCoeff() >= 0.0);
    }
}

TEST_CASE("linear gaussian task matches its stored matrix") {
    auto ds = make_linear_gaussian(2000, 3, 2, 9);
    const NdArray& a = ds.extras.get("A");
    REQUIRE(a.shape == std::vector<int>{2, 3});
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(
        a.data.data(), 2, 3);
    for (int i = 0; i < 2000; ++i)
        REQUIRE((ds.ys[i].data - A * ds.xs[i].data).cwiseAbs().maxCoeff() < 1e-12);

    // empirical covariance of y approaches A A^T
    Mat cov = Mat::Zero(2, 2);
    for (const auto& y : ds.ys) cov += y.data * y.data.transpose();
    cov /= 2000.0;
    Mat expect = A * A.transpose();
    CHECK((cov - expect).cwiseAbs().maxCoeff() < 4.0 * expect.cwiseAbs().maxCoeff() / 20.0);

    // pseudoinverse recovery when dim_y >= dim_x
    auto tall = make_linear_gaussian(50, 2, 4, 10);
    const NdArray& ta = tall.extras.get("A");
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> TA(
        ta.data.data(), 4, 2);
    Mat pinv = (TA.transpose() * TA).ldlt().solve(TA.transpose());
    for (int i = 0; i < 50; ++i)
        CHECK((pinv * tall.ys[i].data - tall.xs[i].data).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("generation is byte-deterministic in (task, n, seed)") {
    auto a = make_toy_shapes(3, 5), b = make_toy_shapes(3, 5);
    for (int i = 0; i < 3; ++i) {
        CHECK((a.xs[i].data - b.xs[i].data).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.ys[i].data - b.ys[i].data).cwiseAbs().maxCoeff() == 0.0);
    }
    auto c = make_toy_shapes(3, 6);
    bool differs = false;
    for (int i = 0; i < 3; ++i)
        if ((a.xs[i].data - c.xs[i].data).cwiseAbs().maxCoeff() > 0.0) differs = true;
    CHECK(differs);
}

TEST_CASE("dataset save/load round trip is lossless") {
    TmpDir dir("bridgelab_ds_test");
    auto ds = make_linear_gaussian(20, 3, 5, 42);
    save_dataset(ds, dir.str());
    auto back = load_dataset(dir.str());
    REQUIRE(back.xs.size() == 20);
    CHECK(back.manifest.at("task") == "linear");
    CHECK(back.manifest.at("seed") == 42);
    for (int i = 0; i < 20; ++i) {
        CHECK(back.xs[i].shape == ds.xs[i].shape);
        CHECK((back.xs[i].data - ds.xs[i].data).cwiseAbs().maxCoeff() == 0.0);
        CHECK((back.ys[i].data - ds.ys[i].data).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK((back.extras.get("A").data - ds.extras.get("A").data).cwiseAbs().maxCoeff() == 0.0);

    // regenerating from the recorded manifest reproduces identical pairs
    auto regen = make_dataset(back.manifest.at("task"), back.manifest.at("n"),
                              back.manifest.at("seed"), 3, 5);
    for (int i = 0; i < 20; ++i)
        CHECK((regen.xs[i].data - ds.xs[i].data).cwiseAbs().maxCoeff() == 0.0);

    // save -> load -> save produces byte-identical files
    TmpDir dir2("bridgelab_ds_test2");
    save_dataset(back, dir2.str());
    for (const char* f : {"/manifest.json", "/arrays.bin"}) {
        std::ifstream f1(dir.str() + f, std::ios::binary), f2(dir2.str() + f, std::ios::binary);
        std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
        std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
        CHECK(s1 == s2);
    }
}

TEST_CASE("truncated array file is a corruption error") {
    TmpDir dir("bridgelab_ds_trunc");
    save_dataset(make_toy_sr(4, 1), dir.str());
    auto bin = dir.path / "arrays.bin";
    auto size = std::filesystem::file_size(bin);
    std::filesystem::resize_file(bin, size / 2);
    CHECK_THROWS_AS(load_dataset(dir.str()), CorruptFileError);
}

TEST_CASE("bundle misuse errors") {
    ArrayBundle b;
    b.add("a", NdArray({2}));
    CHECK_THROWS_AS(b.add("a", NdArray({2})), std::invalid_argument);
    CHECK_THROWS_AS(b.get("missing"), std::invalid_argument);
    CHECK_THROWS_AS(make_dataset("imagenet", 1, 0), std::invalid_argument);
}
