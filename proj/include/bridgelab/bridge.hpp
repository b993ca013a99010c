#ifndef BRIDGELAB_BRIDGE_HPP
#define BRIDGELAB_BRIDGE_HPP

#include <string>
#include <vector>

#include "bridgelab/nd.hpp"
#include "bridgelab/rng.hpp"

namespace bridgelab {

// Two readings of the forward corruption:
//   paper_literal : z_t = z_0 + sigma_t * eps, a plain VE marginal that does
//                   not pin the endpoint.
//   ddbm_ve       : endpoint-pinned bridge, z_t ~ N(mu_t, s_t^2 I) with
//                   mu_t = z_0 + (sigma_t^2/sigma_T^2)(z_T - z_0) and
//                   s_t^2 = sigma_t^2 (1 - sigma_t^2/sigma_T^2).
enum class BridgeVariant { paper_literal, ddbm_ve };

BridgeVariant parse_variant(const std::string& s);
std::string variant_name(BridgeVariant v);

enum class LossWeighting { gap_squared, constant };

// Karras-style sigma ladder plus the continuous sigma(t) it interpolates.
// Time runs on [0, 1] with sigma(1) = sigma_max and sigma(0) = sigma_min;
// the discrete level sequence appends a terminal 0 for the last sampler step.
struct BridgeSchedule {
    int n_steps = 40;
    double sigma_min = 0.01;
    double sigma_max = 1.0;
    double rho = 7.0;
    double t_eps = 1e-3;
    std::vector<double> levels;  // n_steps strictly decreasing values + trailing 0

    double sigma_T() const { return sigma_max; }
    double sigma_of_t(double t) const;
    double t_of_sigma(double sigma) const;
};

BridgeSchedule make_schedule(int n_steps, double sigma_min, double sigma_max, double rho,
                             double t_eps = 1e-3);

struct BridgeState {
    TokenLatent z_t;
    double t = 0.0;
    double sigma_t = 0.0;
};

// Denominator floor: anything smaller is treated as a singularity, not
// silently clamped.
inline constexpr double kSingularFloor = 1e-8;

BridgeState sample_bridge_state(const TokenLatent& z_0, const TokenLatent& z_T, double t,
                                const BridgeSchedule& sched, BridgeVariant variant,
                                RngStream& noise);

// Gaussian parameters of q(z_t | z_0, z_T) under ddbm_ve at noise level sigma.
struct BridgeMoments {
    double ratio;   // sigma^2 / sigma_T^2
    double s2;      // conditional variance
};
BridgeMoments ddbm_moments(double sigma, double sigma_T);

TokenLatent score_target(const TokenLatent& z_t, const TokenLatent& z_0, const TokenLatent& z_T,
                         double t, const BridgeSchedule& sched, BridgeVariant variant);

TokenLatent h_transform(const TokenLatent& z_t, const TokenLatent& z_T, double t,
                        const BridgeSchedule& sched);

double loss_weight(double t, const BridgeSchedule& sched, LossWeighting weighting);

}  // namespace bridgelab

#endif
