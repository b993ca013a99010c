#include "bridgelab/datasets.hpp"

#include <cmath>

namespace bridgelab {

namespace {

constexpr int kGrid = 16;
constexpr int kView = 32;
constexpr int kSr = 32;
constexpr int kSrLow = 8;

Json base_manifest(const std::string& task, int n, uint64_t seed, std::vector<int> x_shape,
                   std::vector<int> y_shape) {
    Json m;
    m["task"] = task;
    m["n"] = n;
    m["seed"] = seed;
    m["x_shape"] = std::move(x_shape);
    m["y_shape"] = std::move(y_shape);
    return m;
}

double& vox(NdArray& g, int i, int j, int k) { return g.data[(i * kGrid + j) * kGrid + k]; }
double voxc(const NdArray& g, int i, int j, int k) {
    return g.data[(i * kGrid + j) * kGrid + k];
}

}  // namespace

NdArray render_silhouettes(const NdArray& grid) {
    if (grid.shape != std::vector<int>{kGrid, kGrid, kGrid})
        throw ShapeMismatchError("render_silhouettes: expected a 16^3 grid");
    // view v at azimuth 90*v degrees; rows are z (vertical), columns the
    // horizontal axis seen from that direction. Each 16x16 projection is
    // pixel-doubled to 32x32.
    NdArray out({4, kView, kView});
    auto proj = [&](int view, int u, int vz) {
        double m = 0.0;
        for (int a = 0; a < kGrid; ++a) {
            double val = 0.0;
            switch (view) {
                case 0: val = voxc(grid, a, u, vz); break;              // +x
                case 1: val = voxc(grid, kGrid - 1 - u, a, vz); break;  // +y
                case 2: val = voxc(grid, a, kGrid - 1 - u, vz); break;  // -x
                case 3: val = voxc(grid, u, a, vz); break;              // -y
            }
            m = std::max(m, val);
        }
        return m;
    };
    for (int v = 0; v < 4; ++v)
        for (int r = 0; r < kView; ++r)
            for (int c = 0; c < kView; ++c)
                out.data[(v * kView + r) * kView + c] = proj(v, c / 2, r / 2);
    return out;
}

PairedDataset make_toy_shapes(int n, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("make_toy_shapes: n must be >= 1");
    PairedDataset ds;
    ds.manifest = base_manifest("shapes", n, seed, {kGrid, kGrid, kGrid}, {4, kView, kView});
    RngStream rng(seed);
    for (int s = 0; s < n; ++s) {
        bool cuboid = rng.uniform() < 0.5;
        double cx = rng.uniform(5.0, 11.0), cy = rng.uniform(5.0, 11.0),
               cz = rng.uniform(5.0, 11.0);
        double rx = rng.uniform(2.0, 5.0), ry = rng.uniform(2.0, 5.0), rz = rng.uniform(2.0, 5.0);
        NdArray g({kGrid, kGrid, kGrid});
        for (int i = 0; i < kGrid; ++i)
            for (int j = 0; j < kGrid; ++j)
                for (int k = 0; k < kGrid; ++k) {
                    double px = i + 0.5 - cx, py = j + 0.5 - cy, pz = k + 0.5 - cz;
                    bool in = cuboid
                                  ? std::abs(px) <= rx && std::abs(py) <= ry && std::abs(pz) <= rz
                                  : (px / rx) * (px / rx) + (py / ry) * (py / ry) +
                                            (pz / rz) * (pz / rz) <=
                                        1.0;
                    if (in) vox(g, i, j, k) = 1.0;
                }
        ds.ys.push_back(render_silhouettes(g));
        ds.xs.push_back(std::move(g));
    }
    return ds;
}

PairedDataset make_toy_sr(int n, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("make_toy_sr: n must be >= 1");
    PairedDataset ds;
    ds.manifest = base_manifest("sr", n, seed, {kSr, kSr}, {kSrLow, kSrLow});
    RngStream rng(seed);
    for (int s = 0; s < n; ++s) {
        NdArray x({kSr, kSr});
        int blobs = 2 + static_cast<int>(rng.integer(4));
        for (int b = 0; b < blobs; ++b) {
            double cx = rng.uniform(0.0, kSr), cy = rng.uniform(0.0, kSr);
            double sig = rng.uniform(2.0, 6.0), amp = rng.uniform(0.3, 1.0);
            for (int r = 0; r < kSr; ++r)
                for (int c = 0; c < kSr; ++c) {
                    double d2 = (r + 0.5 - cy) * (r + 0.5 - cy) + (c + 0.5 - cx) * (c + 0.5 - cx);
                    x.data[r * kSr + c] += amp * std::exp(-d2 / (2.0 * sig * sig));
                }
        }
        for (long i = 0; i < x.data.size(); ++i) x.data[i] = std::min(1.0, x.data[i]);

        NdArray y({kSrLow, kSrLow});
        const int f = kSr / kSrLow;
        for (int r = 0; r < kSrLow; ++r)
            for (int c = 0; c < kSrLow; ++c) {
                double sum = 0.0;
                for (int dr = 0; dr < f; ++dr)
                    for (int dc = 0; dc < f; ++dc) sum += x.data[(r * f + dr) * kSr + c * f + dc];
                y.data[r * kSrLow + c] = sum / (f * f);
            }
        ds.xs.push_back(std::move(x));
        ds.ys.push_back(std::move(y));
    }
    return ds;
}

PairedDataset make_linear_gaussian(int n, int dim_x, int dim_y, uint64_t seed) {
    if (n < 1 || dim_x < 1 || dim_y < 1)
        throw std::invalid_argument("make_linear_gaussian: n and dims must be >= 1");
    PairedDataset ds;
    ds.manifest = base_manifest("linear", n, seed, {dim_x}, {dim_y});
    RngStream rng(seed);
    NdArray a_arr({dim_y, dim_x});
    for (long i = 0; i < a_arr.data.size(); ++i) a_arr.data[i] = rng.normal();
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(
        a_arr.data.data(), dim_y, dim_x);
    for (int s = 0; s < n; ++s) {
        NdArray x({dim_x});
        for (int i = 0; i < dim_x; ++i) x.data[i] = rng.normal();
        NdArray y({dim_y}, A * x.data);
        ds.xs.push_back(std::move(x));
        ds.ys.push_back(std::move(y));
    }
    ds.extras.add("A", std::move(a_arr));
    return ds;
}

void save_dataset(const PairedDataset& ds, const std::string& dir) {
    if (ds.xs.size() != ds.ys.size())
        throw std::invalid_argument("save_dataset: unpaired dataset");
    ArrayBundle bundle;
    bundle.meta = ds.manifest;
    bundle.meta["kind"] = "dataset";
    const long n = static_cast<long>(ds.xs.size());
    const long xs_size = ds.xs.empty() ? 0 : ds.xs[0].data.size();
    const long ys_size = ds.ys.empty() ? 0 : ds.ys[0].data.size();
    NdArray xs({static_cast<int>(n), static_cast<int>(xs_size)});
    NdArray ys({static_cast<int>(n), static_cast<int>(ys_size)});
    for (long i = 0; i < n; ++i) {
        if (ds.xs[i].data.size() != xs_size || ds.ys[i].data.size() != ys_size)
            throw std::invalid_argument("save_dataset: ragged sample sizes");
        xs.data.segment(i * xs_size, xs_size) = ds.xs[i].data;
        ys.data.segment(i * ys_size, ys_size) = ds.ys[i].data;
    }
    bundle.add("x", std::move(xs));
    bundle.add("y", std::move(ys));
    for (const auto& [name, arr] : ds.extras.arrays()) bundle.add("extra." + name, arr);
    save_bundle(bundle, dir);
}

PairedDataset load_dataset(const std::string& dir) {
    ArrayBundle bundle = load_bundle(dir);
    if (bundle.meta.value("kind", "") != "dataset")
        throw CorruptFileError("load_dataset: " + dir + " is not a dataset bundle");
    PairedDataset ds;
    ds.manifest = bundle.meta;
    ds.manifest.erase("kind");
    std::vector<int> x_shape = ds.manifest.at("x_shape").get<std::vector<int>>();
    std::vector<int> y_shape = ds.manifest.at("y_shape").get<std::vector<int>>();
    const NdArray& xs = bundle.get("x");
    const NdArray& ys = bundle.get("y");
    const int n = xs.shape.at(0);
    if (ys.shape.at(0) != n) throw CorruptFileError("load_dataset: x/y count mismatch");
    for (int i = 0; i < n; ++i) {
        ds.xs.emplace_back(x_shape, Vec(xs.data.segment(static_cast<long>(i) * xs.shape[1],
                                                        xs.shape[1])));
        ds.ys.emplace_back(y_shape, Vec(ys.data.segment(static_cast<long>(i) * ys.shape[1],
                                                        ys.shape[1])));
    }
    for (const auto& [name, arr] : bundle.arrays())
        if (name.rfind("extra.", 0) == 0) ds.extras.add(name.substr(6), arr);
    return ds;
}

PairedDataset make_dataset(const std::string& task, int n, uint64_t seed, int dim_x, int dim_y) {
    if (task == "shapes" || task == "toy_shapes") return make_toy_shapes(n, seed);
    if (task == "sr" || task == "toy_sr") return make_toy_sr(n, seed);
    if (task == "linear") return make_linear_gaussian(n, dim_x, dim_y, seed);
    throw std::invalid_argument("unknown dataset task: " + task);
}

}  // namespace bridgelab
