#ifndef BRIDGELAB_SAMPLER_HPP
#define BRIDGELAB_SAMPLER_HPP

#include <functional>

#include "bridgelab/bridge.hpp"
#include "bridgelab/codec.hpp"
#include "bridgelab/dtdit.hpp"

namespace bridgelab {

struct SamplerConfig {
    int n_steps = 40;
    double guidance = 0.5;    // scales the learned-score term of the drift
    double churn_ratio = 0.0; // forward re-noising per step; 0 = deterministic
    uint64_t seed = 0;
};

// A z_0 estimator: (z_t, z_T at the start, t) -> z0_hat. The network version
// wraps Dtdit with a memory computed once; analytic oracles slot in directly
// for verification.
using DenoiseFn = std::function<Mat(const Mat& z_t, double t)>;

// Probability-flow integration from z = z_T at sigma_max down to sigma = 0
// with Heun steps (Euler only onto the final zero level). The drift is
// parameterized by the z_0 estimate so it stays finite at the pinned start.
Mat heun_sample(const Mat& z_T, const DenoiseFn& denoise, const BridgeSchedule& sched,
                const SamplerConfig& cfg, BridgeVariant variant, RngStream& noise);

// Wraps the trained denoiser: computes memory from z_T exactly once, then
// runs heun_sample with the network as the z_0 estimator.
Mat heun_sample_model(const Mat& z_T, const Dtdit& model, ParamStore& store,
                      const BridgeSchedule& sched, const SamplerConfig& cfg,
                      BridgeVariant variant, RngStream& noise);

// Full translation: encode the source sample, bridge it, decode the target.
NdArray translate(const NdArray& y, const Codec& codec_x, const Codec& codec_y,
                  const Dtdit& model, ParamStore& store, const BridgeSchedule& sched,
                  const SamplerConfig& cfg, BridgeVariant variant, RngStream& noise);

}  // namespace bridgelab

#endif
