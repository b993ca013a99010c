#include "bridgelab/objectives.hpp"

#include <cmath>

namespace bridgelab {

LossMode parse_loss_mode(const std::string& s) {
    if (s == "ours") return LossMode::ours;
    if (s == "basic") return LossMode::basic;
    if (s == "rec_plus_nce") return LossMode::rec_plus_nce;
    if (s == "pred_only") return LossMode::pred_only;
    if (s == "rec_only") return LossMode::rec_only;
    throw std::invalid_argument("unknown loss mode: " + s);
}

std::string loss_mode_name(LossMode m) {
    switch (m) {
        case LossMode::ours: return "ours";
        case LossMode::basic: return "basic";
        case LossMode::rec_plus_nce: return "rec_plus_nce";
        case LossMode::pred_only: return "pred_only";
        case LossMode::rec_only: return "rec_only";
    }
    throw std::invalid_argument("unknown loss mode");
}

double infonce_value(const Vec& u, const Vec& v, const std::vector<Vec>& negatives, double tau) {
    if (negatives.empty()) throw std::invalid_argument("infonce: negatives must be nonempty");
    auto cosine = [&](const Vec& a, const Vec& b) {
        double na = a.norm(), nb = b.norm();
        if (na < 1e-12 || nb < 1e-12)
            throw std::invalid_argument("infonce: zero-norm vector");
        return a.dot(b) / (na * nb);
    };
    double pos = std::exp(cosine(u, v) / tau);
    double denom = pos;
    for (const Vec& n : negatives) denom += std::exp(cosine(u, n) / tau);
    return -std::log(pos / denom);
}

Var model_score(Tape& tape, Var z0_hat, Var z_t, Var z_T, double t, const BridgeSchedule& sched,
                BridgeVariant variant) {
    double sigma = sched.sigma_of_t(t);
    if (variant == BridgeVariant::paper_literal) {
        // score of the literal marginal N(z_0, sigma_t^2 I) with z_0 -> z0_hat
        double s2 = sigma * sigma;
        if (s2 < kSingularFloor) throw NearSingularError("model_score: sigma_t^2 below floor");
        return tape.scale(tape.sub(z0_hat, z_t), 1.0 / s2);
    }
    BridgeMoments mo = ddbm_moments(sigma, sched.sigma_T());
    if (mo.s2 < kSingularFloor)
        throw NearSingularError("model_score: conditional variance below floor");
    Var mu_hat = tape.add(z0_hat, tape.scale(tape.sub(z_T, z0_hat), mo.ratio));
    return tape.scale(tape.sub(mu_hat, z_t), 1.0 / mo.s2);
}

namespace {

// 1x1 cosine-similarity node between pooled row vectors.
Var cosine_tape(Tape& t, Var a, Var b) {
    Var na = t.sqrt(t.dot(a, a));
    Var nb = t.sqrt(t.dot(b, b));
    if (t.val(na)(0, 0) < 1e-12 || t.val(nb)(0, 0) < 1e-12)
        throw std::invalid_argument("infonce: zero-norm vector");
    return t.div(t.dot(a, b), t.mul(na, nb));
}

Var infonce_direction(Tape& t, const std::vector<Var>& anchors, const std::vector<Var>& others,
                      double tau) {
    const size_t n = anchors.size();
    Var total;
    for (size_t i = 0; i < n; ++i) {
        Var denom;
        Var pos;
        for (size_t j = 0; j < n; ++j) {
            Var phi = t.exp(t.scale(cosine_tape(t, anchors[i], others[j]), 1.0 / tau));
            denom = denom.valid() ? t.add(denom, phi) : phi;
            if (j == i) pos = phi;
        }
        Var term = t.sub(t.log(denom), t.log(pos));
        total = total.valid() ? t.add(total, term) : term;
    }
    return t.scale(total, 1.0 / static_cast<double>(n));
}

}  // namespace

Var infonce_loss_tape(Tape& tape, const std::vector<Var>& z0_pooled,
                      const std::vector<Var>& zT_pooled, double tau) {
    if (z0_pooled.size() != zT_pooled.size() || z0_pooled.size() < 2)
        throw std::invalid_argument("infonce: need >= 2 pooled pairs");
    Var fwd = infonce_direction(tape, z0_pooled, zT_pooled, tau);
    Var bwd = infonce_direction(tape, zT_pooled, z0_pooled, tau);
    return tape.scale(tape.add(fwd, bwd), 0.5);
}

Var autoencoder_loss_tape(Tape& tape, ParamBinding& bind, const Codec& codec, const NdArray& x) {
    Var z = codec.encode(tape, bind, x);
    Var back = codec.decode(tape, bind, z);
    Var flat = tape.reshape(back, 1, static_cast<int>(x.data.size()));
    return tape.mse(flat, tape.leaf(Mat(x.data.transpose())));
}

LossReport total_loss(Tape& tape, ParamBinding& bind, const Dtdit& model, const Codec& codec_x,
                      const Codec& codec_y, const std::vector<NdArray>& xs,
                      const std::vector<NdArray>& ys, const BridgeSchedule& sched,
                      const LossConfig& cfg, RngStream& rng, Var* total_out) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("total_loss: batch must be nonempty and paired");
    const size_t n = xs.size();

    // A zero weight disables its term entirely (skipped, not reported); the
    // trainer's phase schedules rely on this to restrict each phase's terms.
    const bool use_bridge = cfg.w_bridge != 0.0;
    const bool use_pred = (cfg.mode == LossMode::ours || cfg.mode == LossMode::pred_only) &&
                          cfg.w_pred != 0.0;
    const bool use_nce = (cfg.mode == LossMode::ours || cfg.mode == LossMode::rec_plus_nce) &&
                         n >= 2 && cfg.w_infonce != 0.0;
    const bool use_ae = (cfg.mode == LossMode::basic || cfg.mode == LossMode::rec_only ||
                         cfg.mode == LossMode::rec_plus_nce) &&
                        cfg.w_ae != 0.0;
    if (!use_bridge && !use_pred && !use_nce && !use_ae)
        throw std::invalid_argument("total_loss: all loss terms are disabled");

    double t = rng.uniform(sched.t_eps, 1.0 - sched.t_eps);
    double sigma = sched.sigma_of_t(t);

    Var bridge_sum, pred_sum, ae_x_sum, ae_y_sum;
    std::vector<Var> z0_pooled, zT_pooled;
    auto acc = [&tape](Var& sum, Var v) { sum = sum.valid() ? tape.add(sum, v) : v; };

    for (size_t i = 0; i < n; ++i) {
        Var z0 = codec_x.encode(tape, bind, xs[i]);
        Var zT = codec_y.encode(tape, bind, ys[i]);
        const Mat& z0v = tape.val(z0);

        Mat eps(z0v.rows(), z0v.cols());
        for (long c = 0; c < eps.cols(); ++c)
            for (long r = 0; r < eps.rows(); ++r) eps(r, c) = rng.normal();
        Var eps_v = tape.leaf(eps);

        Var z_t, target;
        if (cfg.variant == BridgeVariant::paper_literal) {
            double gap = sched.sigma_T() * sched.sigma_T() - sigma * sigma;
            if (gap < kSingularFloor) throw NearSingularError("total_loss: gap below floor");
            z_t = tape.add(z0, tape.scale(eps_v, sigma));
            target = tape.scale(tape.sub(zT, z_t), 1.0 / gap);
        } else {
            BridgeMoments mo = ddbm_moments(sigma, sched.sigma_T());
            if (mo.s2 < kSingularFloor)
                throw NearSingularError("total_loss: conditional variance below floor");
            Var mu = tape.add(z0, tape.scale(tape.sub(zT, z0), mo.ratio));
            z_t = tape.add(mu, tape.scale(eps_v, std::sqrt(mo.s2)));
            target = tape.scale(tape.sub(mu, z_t), 1.0 / mo.s2);
        }

        if (use_bridge || use_pred) {
            Var mem = model.encode_memory(tape, bind, zT);
            Var z0_hat = model.denoise(tape, bind, z_t, mem, t);
            if (use_bridge) {
                Var score = model_score(tape, z0_hat, z_t, zT, t, sched, cfg.variant);
                acc(bridge_sum,
                    tape.scale(tape.mse(score, target), loss_weight(t, sched, cfg.weighting)));
            }
            if (use_pred) {
                Var xhat = codec_x.decode(tape, bind, z0_hat);
                Var flat = tape.reshape(xhat, 1, static_cast<int>(xs[i].data.size()));
                acc(pred_sum, tape.mse(flat, tape.leaf(Mat(xs[i].data.transpose()))));
            }
        }
        if (use_nce) {
            z0_pooled.push_back(tape.mean_rows(z0));
            zT_pooled.push_back(tape.mean_rows(zT));
        }
        if (use_ae) {
            acc(ae_x_sum, autoencoder_loss_tape(tape, bind, codec_x, xs[i]));
            if (codec_y.has_decoder())
                acc(ae_y_sum, autoencoder_loss_tape(tape, bind, codec_y, ys[i]));
        }
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    LossReport report;
    report.t_sampled = t;
    Var total;
    auto fold = [&](const char* name, Var mean, double weight) {
        if (!mean.valid()) return;
        report.components[name] = tape.val(mean)(0, 0);
        Var weighted = tape.scale(mean, weight);
        total = total.valid() ? tape.add(total, weighted) : weighted;
    };
    auto avg = [&](Var sum) { return sum.valid() ? tape.scale(sum, inv_n) : sum; };
    fold("bridge", avg(bridge_sum), cfg.w_bridge);
    fold("pred", avg(pred_sum), cfg.w_pred);
    if (use_nce)
        fold("infonce", infonce_loss_tape(tape, z0_pooled, zT_pooled, cfg.tau), cfg.w_infonce);
    fold("ae_x", avg(ae_x_sum), cfg.w_ae);
    fold("ae_y", avg(ae_y_sum), cfg.w_ae);

    report.total = tape.val(total)(0, 0);
    if (total_out) *total_out = total;
    return report;
}

}  // namespace bridgelab
