#include "bridgelab/metrics.hpp"

#include <cmath>

namespace bridgelab {

double chamfer(const Mat& P, const Mat& Q) {
    if (P.rows() == 0 || Q.rows() == 0)
        throw std::invalid_argument("chamfer: point sets must be nonempty");
    if (P.cols() != Q.cols())
        throw ShapeMismatchError("chamfer: point dimensionality mismatch");
    auto one_way = [](const Mat& A, const Mat& B) {
        double total = 0.0;
        for (long i = 0; i < A.rows(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (long j = 0; j < B.rows(); ++j)
                best = std::min(best, (A.row(i) - B.row(j)).squaredNorm());
            total += best;
        }
        return total / static_cast<double>(A.rows());
    };
    return one_way(P, Q) + one_way(Q, P);
}

double one_nna(size_t n_real, size_t n_gen,
               const std::function<double(size_t, size_t)>& distance) {
    if (n_real < 2 || n_gen < 2)
        throw std::invalid_argument("one_nna: need at least 2 samples per set");
    const size_t n = n_real + n_gen;
    size_t correct = 0;
    for (size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        size_t best_j = n;
        for (size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d = distance(i, j);
            if (d < best) {  // strict: ties keep the first index encountered
                best = d;
                best_j = j;
            }
        }
        bool i_real = i < n_real, j_real = best_j < n_real;
        if (i_real == j_real) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

double one_nna_vectors(const std::vector<Vec>& real, const std::vector<Vec>& gen) {
    auto at = [&](size_t i) -> const Vec& {
        return i < real.size() ? real[i] : gen[i - real.size()];
    };
    return one_nna(real.size(), gen.size(),
                   [&](size_t i, size_t j) { return (at(i) - at(j)).squaredNorm(); });
}

double one_nna_pointclouds(const std::vector<Mat>& real, const std::vector<Mat>& gen) {
    auto at = [&](size_t i) -> const Mat& {
        return i < real.size() ? real[i] : gen[i - real.size()];
    };
    return one_nna(real.size(), gen.size(),
                   [&](size_t i, size_t j) { return chamfer(at(i), at(j)); });
}

Mat voxel_to_pointcloud(const NdArray& grid) {
    if (grid.shape.size() != 3)
        throw ShapeMismatchError("voxel_to_pointcloud: grid must be 3-d");
    const int n0 = grid.shape[0], n1 = grid.shape[1], n2 = grid.shape[2];
    std::vector<Eigen::Vector3d> pts;
    long idx = 0;
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j)
            for (int k = 0; k < n2; ++k, ++idx)
                if (grid.data[idx] > 0.5)
                    pts.emplace_back((i + 0.5) / n0, (j + 0.5) / n1, (k + 0.5) / n2);
    if (pts.empty()) throw std::invalid_argument("voxel_to_pointcloud: empty grid");
    Mat out(static_cast<long>(pts.size()), 3);
    for (size_t p = 0; p < pts.size(); ++p) out.row(static_cast<long>(p)) = pts[p].transpose();
    return out;
}

double iou(const NdArray& pred, const NdArray& target) {
    if (pred.shape != target.shape) throw ShapeMismatchError("iou: shape mismatch");
    long inter = 0, uni = 0;
    for (long i = 0; i < pred.data.size(); ++i) {
        bool a = pred.data[i] > 0.5, b = target.data[i] > 0.5;
        inter += a && b;
        uni += a || b;
    }
    if (uni == 0) throw std::invalid_argument("iou: union is empty");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double psnr(const NdArray& x, const NdArray& x_hat, double max_value) {
    if (x.shape != x_hat.shape) throw ShapeMismatchError("psnr: shape mismatch");
    double mse = (x.data - x_hat.data).squaredNorm() / static_cast<double>(x.data.size());
    double floor = 1e-12 * max_value * max_value;
    if (mse < floor) return 100.0;
    return 10.0 * std::log10(max_value * max_value / mse);
}

double ssim(const NdArray& x, const NdArray& x_hat, double max_value) {
    if (x.shape != x_hat.shape) throw ShapeMismatchError("ssim: shape mismatch");
    if (x.shape.size() != 2) throw ShapeMismatchError("ssim: expects 2-d images");
    const int h = x.shape[0], w = x.shape[1], win = 8;
    if (h < win || w < win) throw std::invalid_argument("ssim: image smaller than window");
    const double c1 = 0.01 * max_value * 0.01 * max_value;
    const double c2 = 0.03 * max_value * 0.03 * max_value;
    auto px = [&](const NdArray& img, int r, int c) { return img.data[r * w + c]; };

    double total = 0.0;
    int count = 0;
    for (int r0 = 0; r0 + win <= h; r0 += win)
        for (int c0 = 0; c0 + win <= w; c0 += win) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            const double n = win * win;
            for (int r = r0; r < r0 + win; ++r)
                for (int c = c0; c < c0 + win; ++c) {
                    double a = px(x, r, c), b = px(x_hat, r, c);
                    sx += a;
                    sy += b;
                    sxx += a * a;
                    syy += b * b;
                    sxy += a * b;
                }
            double mx = sx / n, my = sy / n;
            double vx = sxx / n - mx * mx, vy = syy / n - my * my;
            double cov = sxy / n - mx * my;
            total += ((2 * mx * my + c1) * (2 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    return total / count;
}

}  // namespace bridgelab
