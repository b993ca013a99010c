#ifndef BRIDGELAB_TAPE_HPP
#define BRIDGELAB_TAPE_HPP

#include <functional>
#include <vector>

#include "bridgelab/nd.hpp"

namespace bridgelab {

class Tape;

// Handle into a Tape. Cheap to copy; only valid for the tape that created it.
struct Var {
    int i = -1;
    bool valid() const { return i >= 0; }
};

// Reverse-mode autodiff over dense double matrices. One tape per loss
// evaluation; leaves are created for inputs and parameters, backward()
// accumulates gradients into every node, and callers read them off the
// leaves they kept handles to.
class Tape {
   public:
    Tape() { nodes_.reserve(1024); }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Mat v) { return push(std::move(v), {}); }

    const Mat& val(Var v) const { return nodes_[v.i].val; }
    const Mat& grad(Var v) const { return nodes_[v.i].grad; }

    // --- elementwise / structural ---
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);           // hadamard
    Var scale(Var a, double s);
    Var add_const(Var a, double c);
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var add_rowvec(Var x, Var b);    // b: 1 x cols, broadcast over rows
    Var mul_rowvec(Var x, Var g);    // g: 1 x cols
    Var add_colvec(Var x, Var b);    // b: rows x 1
    Var broadcast_row(Var row, int n_rows);
    Var concat_rows(Var a, Var b);
    Var slice_rows(Var a, int start, int count);
    Var slice_cols(Var a, int start, int count);
    Var concat_cols(const std::vector<Var>& parts);
    Var reshape(Var a, int rows, int cols);  // row-major reinterpretation

    // --- nonlinearities ---
    Var silu(Var a);
    Var sigmoid(Var a);
    Var exp(Var a);
    Var log(Var a);
    Var sqrt(Var a);
    Var softmax_rows(Var a);
    Var layer_norm_rows(Var a, double eps = 1e-6);

    // --- reductions / scalars (1x1 nodes) ---
    Var sum(Var a);
    Var mean(Var a);
    Var mean_rows(Var a);            // 1 x cols
    Var dot(Var a, Var b);           // sum of hadamard, 1x1
    Var mse(Var a, Var b);           // mean squared difference, 1x1
    Var scale_by(Var a, Var s);      // s: 1x1
    Var div(Var a, Var b);           // elementwise, same shape

    // --- convolutions (channels x flattened-spatial layout) ---
    // input (C_in, H*W), weight (C_out, C_in*kh*kw), output (C_out, H_o*W_o)
    Var conv2d(Var x, Var w, int in_ch, int h, int win, int k, int stride, int pad);
    Var conv2d_transpose(Var x, Var w, int in_ch, int h, int win, int k, int stride, int pad);
    // input (C_in, D*H*W)
    Var conv3d(Var x, Var w, int in_ch, int d, int h, int win, int k, int stride, int pad);
    Var conv3d_transpose(Var x, Var w, int in_ch, int d, int h, int win, int k, int stride, int pad);

    // Seeds root grad with 1 and propagates to every node. Root must be 1x1.
    void backward(Var root);

    size_t size() const { return nodes_.size(); }

   private:
    struct Node {
        Mat val;
        Mat grad;
        std::function<void(Tape&)> back;
    };
    std::vector<Node> nodes_;

    Var push(Mat v, std::function<void(Tape&)> back) {
        nodes_.push_back(Node{std::move(v), Mat(), std::move(back)});
        return Var{static_cast<int>(nodes_.size()) - 1};
    }
    Mat& g(int i) { return nodes_[i].grad; }
    const Mat& v(int i) const { return nodes_[i].val; }
};

}  // namespace bridgelab

#endif
