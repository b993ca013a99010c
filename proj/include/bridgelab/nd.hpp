#ifndef BRIDGELAB_ND_HPP
#define BRIDGELAB_ND_HPP

#include <Eigen/Dense>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace bridgelab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Shared latent: token_count x embed_dim matrix of finite reals.
using TokenLatent = Mat;

// Dense n-dimensional array with row-major flattening. Raw modality samples
// (voxel grids, multi-view images, vectors) travel through the system in
// this form; shape carries the native layout.
struct NdArray {
    std::vector<int> shape;
    Vec data;

    NdArray() = default;
    NdArray(std::vector<int> s, Vec d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != size())
            throw std::invalid_argument("NdArray: data length does not match shape");
    }
    explicit NdArray(std::vector<int> s) : shape(std::move(s)) {
        data = Vec::Zero(size());
    }

    Eigen::Index size() const {
        long n = 1;
        for (int d : shape) n *= d;
        return n;
    }
};

struct ShapeMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NearSingularError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        out += std::to_string(s[i]);
        if (i + 1 < s.size()) out += ",";
    }
    return out + ")";
}

inline void require_same_shape(const Mat& a, const Mat& b, const char* where) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeMismatchError(std::string(where) + ": shape mismatch " +
                                 std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                                 std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace bridgelab

#endif
