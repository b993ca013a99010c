#ifndef BRIDGELAB_METRICS_HPP
#define BRIDGELAB_METRICS_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "bridgelab/nd.hpp"

namespace bridgelab {

// Rows are points. Symmetric mean squared nearest-neighbor distance.
double chamfer(const Mat& P, const Mat& Q);

// Leave-one-out 1-nearest-neighbor accuracy over the union of the two sets;
// 0.5 means the sets are statistically indistinguishable. `distance` returns
// d(i, j) over the concatenated indexing [real..., gen...]. Ties break to the
// first index so results are platform-stable.
double one_nna(size_t n_real, size_t n_gen,
               const std::function<double(size_t, size_t)>& distance);

// Convenience forms: vectors under squared Euclidean distance and point
// clouds under Chamfer.
double one_nna_vectors(const std::vector<Vec>& real, const std::vector<Vec>& gen);
double one_nna_pointclouds(const std::vector<Mat>& real, const std::vector<Mat>& gen);

// Centers of occupied cells of a cubic binary grid, normalized to [0,1]^3.
Mat voxel_to_pointcloud(const NdArray& grid);

double iou(const NdArray& pred, const NdArray& target);

// 10 log10(MAX^2 / MSE), capped at 100 dB for (near-)exact matches.
double psnr(const NdArray& x, const NdArray& x_hat, double max_value);

// Uniform 8x8 windows, C1 = (0.01 L)^2, C2 = (0.03 L)^2, averaged over all
// window positions (stride 8).
double ssim(const NdArray& x, const NdArray& x_hat, double max_value);

}  // namespace bridgelab

#endif
