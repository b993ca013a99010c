#include "bridgelab/tape.hpp"

#include <cmath>

namespace bridgelab {

Var Tape::add(Var a, Var b) {
    require_same_shape(v(a.i), v(b.i), "add");
    Mat out = v(a.i) + v(b.i);
    int ai = a.i, bi = b.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, bi, oi](Tape& t) {
        t.g(ai) += t.g(oi);
        t.g(bi) += t.g(oi);
    });
}

Var Tape::sub(Var a, Var b) {
    require_same_shape(v(a.i), v(b.i), "sub");
    Mat out = v(a.i) - v(b.i);
    int ai = a.i, bi = b.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, bi, oi](Tape& t) {
        t.g(ai) += t.g(oi);
        t.g(bi) -= t.g(oi);
    });
}

Var Tape::mul(Var a, Var b) {
    require_same_shape(v(a.i), v(b.i), "mul");
    Mat out = v(a.i).cwiseProduct(v(b.i));
    int ai = a.i, bi = b.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, bi, oi](Tape& t) {
        t.g(ai) += t.g(oi).cwiseProduct(t.v(bi));
        t.g(bi) += t.g(oi).cwiseProduct(t.v(ai));
    });
}

Var Tape::scale(Var a, double s) {
    Mat out = v(a.i) * s;
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi, s](Tape& t) { t.g(ai) += t.g(oi) * s; });
}

Var Tape::add_const(Var a, double c) {
    Mat out = v(a.i).array() + c;
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi](Tape& t) { t.g(ai) += t.g(oi); });
}

Var Tape::matmul(Var a, Var b) {
    if (v(a.i).cols() != v(b.i).rows())
        throw ShapeMismatchError("matmul: inner dimensions differ");
    Mat out = v(a.i) * v(b.i);
    int ai = a.i, bi = b.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, bi, oi](Tape& t) {
        t.g(ai).noalias() += t.g(oi) * t.v(bi).transpose();
        t.g(bi).noalias() += t.v(ai).transpose() * t.g(oi);
    });
}

Var Tape::transpose(Var a) {
    Mat out = v(a.i).transpose();
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi](Tape& t) { t.g(ai) += t.g(oi).transpose(); });
}

Var Tape::add_rowvec(Var x, Var b) {
    if (v(b.i).rows() != 1 || v(b.i).cols() != v(x.i).cols())
        throw ShapeMismatchError("add_rowvec: bias must be 1 x cols");
    Mat out = v(x.i).rowwise() + v(b.i).row(0);
    int xi = x.i, bi = b.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [xi, bi, oi](Tape& t) {
        t.g(xi) += t.g(oi);
        t.g(bi).row(0) += t.g(oi).colwise().sum();
    });
}

Var Tape::mul_rowvec(Var x, Var gvar) {
    if (v(gvar.i).rows() != 1 || v(gvar.i).cols() != v(x.i).cols())
        throw ShapeMismatchError("mul_rowvec: gain must be 1 x cols");
    Mat out = (v(x.i).array().rowwise() * v(gvar.i).row(0).array()).matrix();
    int xi = x.i, gi = gvar.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [xi, gi, oi](Tape& t) {
        t.g(xi) += (t.g(oi).array().rowwise() * t.v(gi).row(0).array()).matrix();
        t.g(gi).row(0) += t.g(oi).cwiseProduct(t.v(xi)).colwise().sum();
    });
}

Var Tape::add_colvec(Var x, Var b) {
    if (v(b.i).cols() != 1 || v(b.i).rows() != v(x.i).rows())
        throw ShapeMismatchError("add_colvec: bias must be rows x 1");
    Mat out = v(x.i).colwise() + v(b.i).col(0);
    int xi = x.i, bi = b.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [xi, bi, oi](Tape& t) {
        t.g(xi) += t.g(oi);
        t.g(bi).col(0) += t.g(oi).rowwise().sum();
    });
}

Var Tape::broadcast_row(Var row, int n_rows) {
    if (v(row.i).rows() != 1) throw ShapeMismatchError("broadcast_row: input must be 1 x cols");
    Mat out = v(row.i).replicate(n_rows, 1);
    int ri = row.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ri, oi](Tape& t) {
        t.g(ri).row(0) += t.g(oi).colwise().sum();
    });
}

Var Tape::concat_rows(Var a, Var b) {
    if (v(a.i).cols() != v(b.i).cols())
        throw ShapeMismatchError("concat_rows: column counts differ");
    Mat out(v(a.i).rows() + v(b.i).rows(), v(a.i).cols());
    out << v(a.i), v(b.i);
    int ai = a.i, bi = b.i, oi = static_cast<int>(nodes_.size());
    long ra = v(a.i).rows();
    return push(std::move(out), [ai, bi, oi, ra](Tape& t) {
        long rb = t.v(bi).rows();
        t.g(ai) += t.g(oi).topRows(ra);
        t.g(bi) += t.g(oi).bottomRows(rb);
    });
}

Var Tape::slice_rows(Var a, int start, int count) {
    Mat out = v(a.i).middleRows(start, count);
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi, start, count](Tape& t) {
        t.g(ai).middleRows(start, count) += t.g(oi);
    });
}

Var Tape::slice_cols(Var a, int start, int count) {
    Mat out = v(a.i).middleCols(start, count);
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi, start, count](Tape& t) {
        t.g(ai).middleCols(start, count) += t.g(oi);
    });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    long rows = v(parts[0].i).rows(), cols = 0;
    for (Var p : parts) cols += v(p.i).cols();
    Mat out(rows, cols);
    long off = 0;
    std::vector<int> idx;
    std::vector<long> offs, widths;
    for (Var p : parts) {
        long w = v(p.i).cols();
        out.middleCols(off, w) = v(p.i);
        idx.push_back(p.i);
        offs.push_back(off);
        widths.push_back(w);
        off += w;
    }
    int oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [idx, offs, widths, oi](Tape& t) {
        for (size_t k = 0; k < idx.size(); ++k)
            t.g(idx[k]) += t.g(oi).middleCols(offs[k], widths[k]);
    });
}

Var Tape::reshape(Var a, int rows, int cols) {
    const Mat& av = v(a.i);
    if (av.size() != static_cast<long>(rows) * cols)
        throw ShapeMismatchError("reshape: element count mismatch");
    // Row-major reinterpretation on top of Eigen's column-major storage.
    Mat rm = av.transpose();
    Eigen::Map<const Mat> view(rm.data(), cols, rows);
    Mat out = view.transpose();
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi](Tape& t) {
        const Mat& go = t.g(oi);
        Mat gorm = go.transpose();
        Eigen::Map<const Mat> gview(gorm.data(), t.v(ai).cols(), t.v(ai).rows());
        t.g(ai) += gview.transpose();
    });
}

Var Tape::silu(Var a) {
    Mat sig = (1.0 / (1.0 + (-v(a.i).array()).exp())).matrix();
    Mat out = v(a.i).cwiseProduct(sig);
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi, sig](Tape& t) {
        Mat d = sig.array() * (1.0 + t.v(ai).array() * (1.0 - sig.array()));
        t.g(ai) += t.g(oi).cwiseProduct(d);
    });
}

Var Tape::sigmoid(Var a) {
    Mat out = (1.0 / (1.0 + (-v(a.i).array()).exp())).matrix();
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi](Tape& t) {
        Mat d = t.v(oi).array() * (1.0 - t.v(oi).array());
        t.g(ai) += t.g(oi).cwiseProduct(d);
    });
}

Var Tape::exp(Var a) {
    Mat out = v(a.i).array().exp();
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi](Tape& t) {
        t.g(ai) += t.g(oi).cwiseProduct(t.v(oi));
    });
}

Var Tape::log(Var a) {
    Mat out = v(a.i).array().log();
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi](Tape& t) {
        t.g(ai) += t.g(oi).cwiseQuotient(t.v(ai));
    });
}

Var Tape::sqrt(Var a) {
    Mat out = v(a.i).array().sqrt();
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi](Tape& t) {
        t.g(ai) += (t.g(oi).array() * 0.5 / t.v(oi).array()).matrix();
    });
}

Var Tape::softmax_rows(Var a) {
    Mat out = v(a.i);
    for (long r = 0; r < out.rows(); ++r) {
        Eigen::RowVectorXd row = out.row(r);
        double m = row.maxCoeff();
        row = (row.array() - m).exp();
        out.row(r) = row / row.sum();
    }
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi](Tape& t) {
        const Mat& y = t.v(oi);
        const Mat& go = t.g(oi);
        Mat gy = y.cwiseProduct(go);
        Vec rowsum = gy.rowwise().sum();
        t.g(ai) += gy - y.cwiseProduct(rowsum.replicate(1, y.cols()));
    });
}

Var Tape::layer_norm_rows(Var a, double eps) {
    const Mat& x = v(a.i);
    long n = x.cols();
    Vec mean = x.rowwise().mean();
    Mat centered = x - mean.replicate(1, n);
    Vec var = centered.array().square().matrix().rowwise().mean();
    Vec inv_std = (var.array() + eps).sqrt().inverse();
    Mat out = (centered.array().colwise() * inv_std.array()).matrix();
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi, inv_std](Tape& t) {
        const Mat& y = t.v(oi);
        const Mat& go = t.g(oi);
        long n = y.cols();
        Vec mg = go.rowwise().mean();
        Vec mgy = go.cwiseProduct(y).rowwise().mean();
        Mat dx = go - mg.replicate(1, n) - y.cwiseProduct(mgy.replicate(1, n));
        t.g(ai) += (dx.array().colwise() * inv_std.array()).matrix();
    });
}

Var Tape::sum(Var a) {
    Mat out(1, 1);
    out(0, 0) = v(a.i).sum();
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi](Tape& t) {
        t.g(ai).array() += t.g(oi)(0, 0);
    });
}

Var Tape::mean(Var a) {
    double inv = 1.0 / static_cast<double>(v(a.i).size());
    Mat out(1, 1);
    out(0, 0) = v(a.i).sum() * inv;
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi, inv](Tape& t) {
        t.g(ai).array() += t.g(oi)(0, 0) * inv;
    });
}

Var Tape::mean_rows(Var a) {
    double inv = 1.0 / static_cast<double>(v(a.i).rows());
    Mat out = v(a.i).colwise().sum() * inv;
    int ai = a.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, oi, inv](Tape& t) {
        t.g(ai) += t.g(oi).replicate(t.v(ai).rows(), 1) * inv;
    });
}

Var Tape::dot(Var a, Var b) {
    require_same_shape(v(a.i), v(b.i), "dot");
    Mat out(1, 1);
    out(0, 0) = v(a.i).cwiseProduct(v(b.i)).sum();
    int ai = a.i, bi = b.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, bi, oi](Tape& t) {
        t.g(ai) += t.v(bi) * t.g(oi)(0, 0);
        t.g(bi) += t.v(ai) * t.g(oi)(0, 0);
    });
}

Var Tape::mse(Var a, Var b) {
    require_same_shape(v(a.i), v(b.i), "mse");
    Mat diff = v(a.i) - v(b.i);
    double inv = 1.0 / static_cast<double>(diff.size());
    Mat out(1, 1);
    out(0, 0) = diff.array().square().sum() * inv;
    int ai = a.i, bi = b.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, bi, oi, diff, inv](Tape& t) {
        Mat d = diff * (2.0 * inv * t.g(oi)(0, 0));
        t.g(ai) += d;
        t.g(bi) -= d;
    });
}

Var Tape::scale_by(Var a, Var s) {
    if (v(s.i).size() != 1) throw ShapeMismatchError("scale_by: scale must be 1x1");
    Mat out = v(a.i) * v(s.i)(0, 0);
    int ai = a.i, si = s.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, si, oi](Tape& t) {
        t.g(ai) += t.g(oi) * t.v(si)(0, 0);
        t.g(si)(0, 0) += t.g(oi).cwiseProduct(t.v(ai)).sum();
    });
}

Var Tape::div(Var a, Var b) {
    require_same_shape(v(a.i), v(b.i), "div");
    Mat out = v(a.i).cwiseQuotient(v(b.i));
    int ai = a.i, bi = b.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [ai, bi, oi](Tape& t) {
        t.g(ai) += t.g(oi).cwiseQuotient(t.v(bi));
        t.g(bi) -= t.g(oi).cwiseProduct(t.v(oi)).cwiseQuotient(t.v(bi));
    });
}

// ---------------------------------------------------------------------------
// Convolutions. Direct loops; all desk-scale shapes are small enough that
// cache behavior dominates and im2col buys nothing.
// ---------------------------------------------------------------------------

namespace {
inline int conv_out(int n, int k, int stride, int pad) {
    return (n + 2 * pad - k) / stride + 1;
}
}  // namespace

Var Tape::conv2d(Var x, Var w, int in_ch, int h, int win, int k, int stride, int pad) {
    const Mat& xv = v(x.i);
    const Mat& wv = v(w.i);
    if (xv.rows() != in_ch || xv.cols() != static_cast<long>(h) * win)
        throw ShapeMismatchError("conv2d: input shape");
    if (wv.cols() != static_cast<long>(in_ch) * k * k)
        throw ShapeMismatchError("conv2d: weight shape");
    int out_ch = static_cast<int>(wv.rows());
    int ho = conv_out(h, k, stride, pad), wo = conv_out(win, k, stride, pad);
    Mat out = Mat::Zero(out_ch, static_cast<long>(ho) * wo);
    for (int oc = 0; oc < out_ch; ++oc)
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
                double acc = 0.0;
                for (int ic = 0; ic < in_ch; ++ic)
                    for (int ky = 0; ky < k; ++ky) {
                        int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            int ix = ox * stride + kx - pad;
                            if (ix < 0 || ix >= win) continue;
                            acc += xv(ic, iy * win + ix) * wv(oc, (ic * k + ky) * k + kx);
                        }
                    }
                out(oc, oy * wo + ox) = acc;
            }
    int xi = x.i, wi = w.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [=](Tape& t) {
        const Mat& go = t.g(oi);
        const Mat& xv2 = t.v(xi);
        const Mat& wv2 = t.v(wi);
        int out_ch2 = static_cast<int>(wv2.rows());
        for (int oc = 0; oc < out_ch2; ++oc)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    double gv = go(oc, oy * wo + ox);
                    if (gv == 0.0) continue;
                    for (int ic = 0; ic < in_ch; ++ic)
                        for (int ky = 0; ky < k; ++ky) {
                            int iy = oy * stride + ky - pad;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                int ix = ox * stride + kx - pad;
                                if (ix < 0 || ix >= win) continue;
                                t.g(xi)(ic, iy * win + ix) += gv * wv2(oc, (ic * k + ky) * k + kx);
                                t.g(wi)(oc, (ic * k + ky) * k + kx) += gv * xv2(ic, iy * win + ix);
                            }
                        }
                }
    });
}

Var Tape::conv2d_transpose(Var x, Var w, int in_ch, int h, int win, int k, int stride, int pad) {
    const Mat& xv = v(x.i);
    const Mat& wv = v(w.i);
    if (xv.rows() != in_ch || xv.cols() != static_cast<long>(h) * win)
        throw ShapeMismatchError("conv2d_transpose: input shape");
    if (wv.rows() != in_ch)
        throw ShapeMismatchError("conv2d_transpose: weight rows must equal in_ch");
    int out_ch = static_cast<int>(wv.cols()) / (k * k);
    int ho = (h - 1) * stride - 2 * pad + k, wo = (win - 1) * stride - 2 * pad + k;
    Mat out = Mat::Zero(out_ch, static_cast<long>(ho) * wo);
    for (int ic = 0; ic < in_ch; ++ic)
        for (int iy = 0; iy < h; ++iy)
            for (int ix = 0; ix < win; ++ix) {
                double xval = xv(ic, iy * win + ix);
                if (xval == 0.0) continue;
                for (int oc = 0; oc < out_ch; ++oc)
                    for (int ky = 0; ky < k; ++ky) {
                        int oy = iy * stride + ky - pad;
                        if (oy < 0 || oy >= ho) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            int ox = ix * stride + kx - pad;
                            if (ox < 0 || ox >= wo) continue;
                            out(oc, oy * wo + ox) += xval * wv(ic, (oc * k + ky) * k + kx);
                        }
                    }
            }
    int xi = x.i, wi = w.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [=](Tape& t) {
        const Mat& go = t.g(oi);
        const Mat& xv2 = t.v(xi);
        const Mat& wv2 = t.v(wi);
        for (int ic = 0; ic < in_ch; ++ic)
            for (int iy = 0; iy < h; ++iy)
                for (int ix = 0; ix < win; ++ix) {
                    double xval = xv2(ic, iy * win + ix);
                    double gacc = 0.0;
                    for (int oc = 0; oc < out_ch; ++oc)
                        for (int ky = 0; ky < k; ++ky) {
                            int oy = iy * stride + ky - pad;
                            if (oy < 0 || oy >= ho) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                int ox = ix * stride + kx - pad;
                                if (ox < 0 || ox >= wo) continue;
                                double gv = go(oc, oy * wo + ox);
                                gacc += gv * wv2(ic, (oc * k + ky) * k + kx);
                                t.g(wi)(ic, (oc * k + ky) * k + kx) += gv * xval;
                            }
                        }
                    t.g(xi)(ic, iy * win + ix) += gacc;
                }
    });
}

Var Tape::conv3d(Var x, Var w, int in_ch, int d, int h, int win, int k, int stride, int pad) {
    const Mat& xv = v(x.i);
    const Mat& wv = v(w.i);
    if (xv.rows() != in_ch || xv.cols() != static_cast<long>(d) * h * win)
        throw ShapeMismatchError("conv3d: input shape");
    if (wv.cols() != static_cast<long>(in_ch) * k * k * k)
        throw ShapeMismatchError("conv3d: weight shape");
    int out_ch = static_cast<int>(wv.rows());
    int d_o = conv_out(d, k, stride, pad), ho = conv_out(h, k, stride, pad), wo = conv_out(win, k, stride, pad);
    Mat out = Mat::Zero(out_ch, static_cast<long>(d_o) * ho * wo);
    for (int oc = 0; oc < out_ch; ++oc)
        for (int oz = 0; oz < d_o; ++oz)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    double acc = 0.0;
                    for (int ic = 0; ic < in_ch; ++ic)
                        for (int kz = 0; kz < k; ++kz) {
                            int iz = oz * stride + kz - pad;
                            if (iz < 0 || iz >= d) continue;
                            for (int ky = 0; ky < k; ++ky) {
                                int iy = oy * stride + ky - pad;
                                if (iy < 0 || iy >= h) continue;
                                for (int kx = 0; kx < k; ++kx) {
                                    int ix = ox * stride + kx - pad;
                                    if (ix < 0 || ix >= win) continue;
                                    acc += xv(ic, (iz * h + iy) * win + ix) *
                                           wv(oc, ((ic * k + kz) * k + ky) * k + kx);
                                }
                            }
                        }
                    out(oc, (oz * ho + oy) * wo + ox) = acc;
                }
    int xi = x.i, wi = w.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [=](Tape& t) {
        const Mat& go = t.g(oi);
        const Mat& xv2 = t.v(xi);
        const Mat& wv2 = t.v(wi);
        int out_ch2 = static_cast<int>(wv2.rows());
        for (int oc = 0; oc < out_ch2; ++oc)
            for (int oz = 0; oz < d_o; ++oz)
                for (int oy = 0; oy < ho; ++oy)
                    for (int ox = 0; ox < wo; ++ox) {
                        double gv = go(oc, (oz * ho + oy) * wo + ox);
                        if (gv == 0.0) continue;
                        for (int ic = 0; ic < in_ch; ++ic)
                            for (int kz = 0; kz < k; ++kz) {
                                int iz = oz * stride + kz - pad;
                                if (iz < 0 || iz >= d) continue;
                                for (int ky = 0; ky < k; ++ky) {
                                    int iy = oy * stride + ky - pad;
                                    if (iy < 0 || iy >= h) continue;
                                    for (int kx = 0; kx < k; ++kx) {
                                        int ix = ox * stride + kx - pad;
                                        if (ix < 0 || ix >= win) continue;
                                        long widx = ((ic * k + kz) * k + ky) * k + kx;
                                        t.g(xi)(ic, (iz * h + iy) * win + ix) += gv * wv2(oc, widx);
                                        t.g(wi)(oc, widx) += gv * xv2(ic, (iz * h + iy) * win + ix);
                                    }
                                }
                            }
                    }
    });
}

Var Tape::conv3d_transpose(Var x, Var w, int in_ch, int d, int h, int win, int k, int stride, int pad) {
    const Mat& xv = v(x.i);
    const Mat& wv = v(w.i);
    if (xv.rows() != in_ch || xv.cols() != static_cast<long>(d) * h * win)
        throw ShapeMismatchError("conv3d_transpose: input shape");
    if (wv.rows() != in_ch)
        throw ShapeMismatchError("conv3d_transpose: weight rows must equal in_ch");
    int out_ch = static_cast<int>(wv.cols()) / (k * k * k);
    int d_o = (d - 1) * stride - 2 * pad + k;
    int ho = (h - 1) * stride - 2 * pad + k;
    int wo = (win - 1) * stride - 2 * pad + k;
    Mat out = Mat::Zero(out_ch, static_cast<long>(d_o) * ho * wo);
    for (int ic = 0; ic < in_ch; ++ic)
        for (int iz = 0; iz < d; ++iz)
            for (int iy = 0; iy < h; ++iy)
                for (int ix = 0; ix < win; ++ix) {
                    double xval = xv(ic, (iz * h + iy) * win + ix);
                    if (xval == 0.0) continue;
                    for (int oc = 0; oc < out_ch; ++oc)
                        for (int kz = 0; kz < k; ++kz) {
                            int oz = iz * stride + kz - pad;
                            if (oz < 0 || oz >= d_o) continue;
                            for (int ky = 0; ky < k; ++ky) {
                                int oy = iy * stride + ky - pad;
                                if (oy < 0 || oy >= ho) continue;
                                for (int kx = 0; kx < k; ++kx) {
                                    int ox = ix * stride + kx - pad;
                                    if (ox < 0 || ox >= wo) continue;
                                    out(oc, (oz * ho + oy) * wo + ox) +=
                                        xval * wv(ic, ((oc * k + kz) * k + ky) * k + kx);
                                }
                            }
                        }
                }
    int xi = x.i, wi = w.i, oi = static_cast<int>(nodes_.size());
    return push(std::move(out), [=](Tape& t) {
        const Mat& go = t.g(oi);
        const Mat& xv2 = t.v(xi);
        const Mat& wv2 = t.v(wi);
        for (int ic = 0; ic < in_ch; ++ic)
            for (int iz = 0; iz < d; ++iz)
                for (int iy = 0; iy < h; ++iy)
                    for (int ix = 0; ix < win; ++ix) {
                        double xval = xv2(ic, (iz * h + iy) * win + ix);
                        double gacc = 0.0;
                        for (int oc = 0; oc < out_ch; ++oc)
                            for (int kz = 0; kz < k; ++kz) {
                                int oz = iz * stride + kz - pad;
                                if (oz < 0 || oz >= d_o) continue;
                                for (int ky = 0; ky < k; ++ky) {
                                    int oy = iy * stride + ky - pad;
                                    if (oy < 0 || oy >= ho) continue;
                                    for (int kx = 0; kx < k; ++kx) {
                                        int ox = ix * stride + kx - pad;
                                        if (ox < 0 || ox >= wo) continue;
                                        double gv = go(oc, (oz * ho + oy) * wo + ox);
                                        long widx = ((oc * k + kz) * k + ky) * k + kx;
                                        gacc += gv * wv2(ic, widx);
                                        t.g(wi)(ic, widx) += gv * xval;
                                    }
                                }
                            }
                        t.g(xi)(ic, (iz * h + iy) * win + ix) += gacc;
                    }
    });
}

void Tape::backward(Var root) {
    if (v(root.i).size() != 1)
        throw std::invalid_argument("backward: root must be a scalar node");
    for (auto& n : nodes_) {
        n.grad.resize(n.val.rows(), n.val.cols());
        n.grad.setZero();
    }
    nodes_[root.i].grad(0, 0) = 1.0;
    for (int i = root.i; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back(*this);
}

}  // namespace bridgelab
