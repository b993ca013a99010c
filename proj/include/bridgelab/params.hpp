#ifndef BRIDGELAB_PARAMS_HPP
#define BRIDGELAB_PARAMS_HPP

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "bridgelab/nd.hpp"
#include "bridgelab/rng.hpp"
#include "bridgelab/tape.hpp"

namespace bridgelab {

// Named parameter tensors with gradient buffers and RAdam state, in a fixed
// insertion order so every traversal (updates, hashing, serialization) is
// deterministic.
class ParamStore {
   public:
    struct Entry {
        std::string name;
        Mat value;
        Mat grad;
        Mat m;   // first moment
        Mat v;   // second moment
    };

    Mat& create(const std::string& name, int rows, int cols) {
        if (index_.count(name))
            throw std::invalid_argument("ParamStore: duplicate parameter " + name);
        index_[name] = entries_.size();
        entries_.push_back(Entry{name, Mat::Zero(rows, cols), Mat::Zero(rows, cols),
                                 Mat::Zero(rows, cols), Mat::Zero(rows, cols)});
        return entries_.back().value;
    }

    bool has(const std::string& name) const { return index_.count(name) > 0; }

    Entry& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end())
            throw std::invalid_argument("ParamStore: unknown parameter " + name);
        return entries_[it->second];
    }
    const Entry& at(const std::string& name) const {
        return const_cast<ParamStore*>(this)->at(name);
    }

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    long scalar_count() const {
        long n = 0;
        for (const auto& e : entries_) n += e.value.size();
        return n;
    }

    void zero_grad() {
        for (auto& e : entries_) e.grad.setZero();
    }

   private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> index_;
};

// Binds tape leaves to store entries for one loss evaluation; after
// backward(), accumulate() folds leaf gradients into the store.
class ParamBinding {
   public:
    explicit ParamBinding(ParamStore& store) : store_(store) {}

    Var use(Tape& tape, const std::string& name) {
        Var v = tape.leaf(store_.at(name).value);
        bound_.push_back({name, v});
        return v;
    }

    void accumulate(const Tape& tape, double scale = 1.0) {
        for (auto& [name, var] : bound_) {
            const Mat& g = tape.grad(var);
            if (g.size() > 0) store_.at(name).grad += g * scale;
        }
    }

   private:
    ParamStore& store_;
    std::vector<std::pair<std::string, Var>> bound_;
};

struct RAdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 1.0;  // global gradient-norm clip; 0 disables
};

// Rectified Adam. `step_count` is owned by the caller (the trainer), so a
// checkpoint resume continues the moment schedule exactly.
class RAdam {
   public:
    explicit RAdam(RAdamConfig cfg = {}) : cfg_(cfg) {}

    // Updates only parameters for which `active(name)` is true (nullptr =
    // all). Gradients of inactive parameters are left untouched.
    template <typename Pred>
    void step(ParamStore& store, long t, Pred active) {
        if (cfg_.clip_norm > 0.0) {
            double sq = 0.0;
            for (auto& e : store.entries())
                if (active(e.name)) sq += e.grad.squaredNorm();
            double norm = std::sqrt(sq);
            if (norm > cfg_.clip_norm) {
                double s = cfg_.clip_norm / norm;
                for (auto& e : store.entries())
                    if (active(e.name)) e.grad *= s;
            }
        }
        double b1t = std::pow(cfg_.beta1, static_cast<double>(t));
        double b2t = std::pow(cfg_.beta2, static_cast<double>(t));
        double rho_inf = 2.0 / (1.0 - cfg_.beta2) - 1.0;
        double rho_t = rho_inf - 2.0 * t * b2t / (1.0 - b2t);
        for (auto& e : store.entries()) {
            if (!active(e.name)) continue;
            e.m = cfg_.beta1 * e.m + (1.0 - cfg_.beta1) * e.grad;
            e.v = cfg_.beta2 * e.v + (1.0 - cfg_.beta2) * e.grad.cwiseProduct(e.grad);
            Mat m_hat = e.m / (1.0 - b1t);
            if (rho_t > 4.0) {
                double r = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                                     ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
                Mat denom = ((e.v / (1.0 - b2t)).array().sqrt() + cfg_.eps).matrix();
                e.value -= cfg_.lr * r * m_hat.cwiseQuotient(denom);
            } else {
                e.value -= cfg_.lr * m_hat;
            }
        }
    }

    const RAdamConfig& config() const { return cfg_; }

   private:
    RAdamConfig cfg_;
};

// Truncated-normal init in [-2, 2] standard deviations.
inline void trunc_normal_init(Mat& w, double stddev, RngStream& rng) {
    for (long c = 0; c < w.cols(); ++c)
        for (long r = 0; r < w.rows(); ++r) {
            double z;
            do { z = rng.normal(); } while (std::abs(z) > 2.0);
            w(r, c) = z * stddev;
        }
}

}  // namespace bridgelab

#endif
