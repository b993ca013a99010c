#ifndef BRIDGELAB_DATASETS_HPP
#define BRIDGELAB_DATASETS_HPP

#include <string>
#include <vector>

#include "bridgelab/rng.hpp"
#include "bridgelab/serialize.hpp"

namespace bridgelab {

// Aligned (x, y) pairs: every y is a deterministic function of the same
// latent object as its x. The manifest records task, seed, count, and the
// per-sample shapes; task-specific extras (like the mixing matrix of the
// linear task) ride along in `extras`.
struct PairedDataset {
    std::vector<NdArray> xs;
    std::vector<NdArray> ys;
    Json manifest;
    ArrayBundle extras;
};

// x: 16^3 occupancy grid of a random axis-aligned cuboid or ellipsoid.
// y: 4 orthographic silhouettes (32x32) from 90-degree-spaced azimuths,
// computed as max-projections of the grid and pixel-doubled.
PairedDataset make_toy_shapes(int n, uint64_t seed);

// Independent re-derivation of one silhouette view used by sanity checks.
NdArray render_silhouettes(const NdArray& grid);

// x: 32x32 grayscale Gaussian-blob mixture; y: 8x8 average-pool downsample.
PairedDataset make_toy_sr(int n, uint64_t seed);

// x ~ N(0, I_dx); y = A x for a fixed random A (dy x dx), stored in extras
// under "A" (row-major).
PairedDataset make_linear_gaussian(int n, int dim_x, int dim_y, uint64_t seed);

void save_dataset(const PairedDataset& ds, const std::string& dir);
PairedDataset load_dataset(const std::string& dir);

PairedDataset make_dataset(const std::string& task, int n, uint64_t seed, int dim_x = 8,
                           int dim_y = 8);

}  // namespace bridgelab

#endif
