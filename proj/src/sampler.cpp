#include "bridgelab/sampler.hpp"

#include <cmath>

namespace bridgelab {

namespace {

// Drift of the probability-flow ODE in lambda = sigma^2 time,
//   dz/dlambda = h - guidance * score,
// rewritten around the z_0 estimate so the 0/0 at the pinned start
// (z = z_T, sigma = sigma_T) cancels analytically. guidance = 0.5 recovers
// the exact probability-flow coefficient.
Mat drift_lambda(const Mat& z, const Mat& z_T, const Mat& z0_hat, double sigma,
                 const BridgeSchedule& sched, BridgeVariant variant, double guidance) {
    const double sigT2 = sched.sigma_T() * sched.sigma_T();
    const double lambda = sigma * sigma;
    if (variant == BridgeVariant::ddbm_ve) {
        const double r = lambda / sigT2;
        Mat base = (z_T - z0_hat) / sigT2;
        if (1.0 - r < 1e-12) return base;  // start level: v = z - mu_hat = 0 exactly
        Mat mu_hat = z0_hat + r * (z_T - z0_hat);
        Mat v = z - mu_hat;
        double coef = (guidance / lambda - 1.0 / sigT2) / (1.0 - r);
        return base + coef * v;
    }
    // literal VE marginal: h-term plus the guided marginal score (z0_hat - z)/lambda
    const double gap = sigT2 - lambda;
    Mat h;
    if (gap < kSingularFloor) {
        if ((z_T - z).cwiseAbs().maxCoeff() > 1e-9)
            throw NearSingularError("drift: sigma gap below floor away from z_T");
        h = Mat::Zero(z.rows(), z.cols());
    } else {
        h = (z_T - z) / gap;
    }
    if (lambda < kSingularFloor) throw NearSingularError("drift: sigma_t^2 below floor");
    return h - guidance * (z0_hat - z) / lambda;
}

}  // namespace

Mat heun_sample(const Mat& z_T, const DenoiseFn& denoise, const BridgeSchedule& sched,
                const SamplerConfig& cfg, BridgeVariant variant, RngStream& noise) {
    if (cfg.n_steps < 1) throw std::invalid_argument("heun_sample: n_steps must be >= 1");
    BridgeSchedule s = cfg.n_steps == sched.n_steps
                          ? sched
                          : make_schedule(std::max(cfg.n_steps, 2), sched.sigma_min,
                                          sched.sigma_max, sched.rho, sched.t_eps);
    const int n = static_cast<int>(s.levels.size()) - 1;
    const double gamma_cap = std::sqrt(2.0) - 1.0;
    Mat z = z_T;

    for (int i = 0; i < n; ++i) {
        double sigma = s.levels[i];
        double sigma_next = s.levels[i + 1];

        if (cfg.churn_ratio > 0.0) {
            double gamma = std::min(cfg.churn_ratio / n, gamma_cap);
            double sigma_hat = std::min(sigma * (1.0 + gamma), s.sigma_max);
            if (sigma_hat > sigma) {
                double add = std::sqrt(sigma_hat * sigma_hat - sigma * sigma);
                for (long c = 0; c < z.cols(); ++c)
                    for (long r = 0; r < z.rows(); ++r) z(r, c) += add * noise.normal();
                sigma = sigma_hat;
            }
        }

        Mat z0_hat = denoise(z, s.t_of_sigma(sigma));
        Mat d1 = 2.0 * sigma * drift_lambda(z, z_T, z0_hat, sigma, s, variant, cfg.guidance);
        double dsig = sigma_next - sigma;
        Mat z_euler = z + dsig * d1;
        if (sigma_next == 0.0) {
            // single-evaluation final step; stepping in lambda = sigma^2
            // integrates the leading 2*sigma factor of the drift exactly
            z += (sigma_next * sigma_next - sigma * sigma) *
                 drift_lambda(z, z_T, z0_hat, sigma, s, variant, cfg.guidance);
        } else {
            Mat z0_hat2 = denoise(z_euler, s.t_of_sigma(sigma_next));
            Mat d2 = 2.0 * sigma_next *
                     drift_lambda(z_euler, z_T, z0_hat2, sigma_next, s, variant, cfg.guidance);
            z += dsig * 0.5 * (d1 + d2);
        }
        if (!z.allFinite())
            throw NonFiniteError("heun_sample: non-finite state after step " + std::to_string(i));
    }
    return z;
}

Mat heun_sample_model(const Mat& z_T, const Dtdit& model, ParamStore& store,
                      const BridgeSchedule& sched, const SamplerConfig& cfg,
                      BridgeVariant variant, RngStream& noise) {
    Mat memory = model.encode_memory_value(store, z_T);
    DenoiseFn fn = [&](const Mat& z_t, double t) {
        return model.denoise_value(store, z_t, memory, t);
    };
    return heun_sample(z_T, fn, sched, cfg, variant, noise);
}

NdArray translate(const NdArray& y, const Codec& codec_x, const Codec& codec_y,
                  const Dtdit& model, ParamStore& store, const BridgeSchedule& sched,
                  const SamplerConfig& cfg, BridgeVariant variant, RngStream& noise) {
    Mat z_T = codec_y.encode_value(store, y);
    Mat z0 = heun_sample_model(z_T, model, store, sched, cfg, variant, noise);
    return codec_x.decode_value(store, z0);
}

}  // namespace bridgelab
