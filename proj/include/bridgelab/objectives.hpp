#ifndef BRIDGELAB_OBJECTIVES_HPP
#define BRIDGELAB_OBJECTIVES_HPP

#include <map>
#include <string>
#include <vector>

#include "bridgelab/bridge.hpp"
#include "bridgelab/codec.hpp"
#include "bridgelab/dtdit.hpp"

namespace bridgelab {

// Which loss terms train the model. Every mode includes the score-matching
// bridge term; the rest follow the ablation grid: reconstruction (two
// autoencoder losses) vs. predictive (through-the-bridge reconstruction),
// each with or without the contrastive term. `basic` is the two-phase
// baseline objective and trains the same terms as rec_only.
enum class LossMode { ours, basic, rec_plus_nce, pred_only, rec_only };

LossMode parse_loss_mode(const std::string& s);
std::string loss_mode_name(LossMode m);

struct LossConfig {
    LossMode mode = LossMode::ours;
    double tau = 0.5;
    double w_bridge = 1.0;
    double w_pred = 1.0;
    double w_infonce = 1.0;
    double w_ae = 1.0;
    LossWeighting weighting = LossWeighting::gap_squared;
    BridgeVariant variant = BridgeVariant::ddbm_ve;
};

struct LossReport {
    double total = 0.0;
    std::map<std::string, double> components;  // bridge, pred, infonce, ae_x, ae_y
    double t_sampled = 0.0;
};

// Scalar InfoNCE on pooled latent vectors: phi(u, v) = exp(u.v / (tau |u||v|)),
// loss = -log phi(u, v) / (phi(u, v) + sum_j phi(u, neg_j)).
double infonce_value(const Vec& u, const Vec& v, const std::vector<Vec>& negatives, double tau);

// Tape-level pieces. All of them build onto the caller's tape so gradients
// reach codec and denoiser parameters through `bind`.

// Model score at (z_t, t): the closed-form conditional score with z_0
// replaced by the prediction z0_hat.
Var model_score(Tape& tape, Var z0_hat, Var z_t, Var z_T, double t, const BridgeSchedule& sched,
                BridgeVariant variant);

Var infonce_loss_tape(Tape& tape, const std::vector<Var>& z0_pooled,
                      const std::vector<Var>& zT_pooled, double tau);

Var autoencoder_loss_tape(Tape& tape, ParamBinding& bind, const Codec& codec, const NdArray& x);

// Full unified objective over a batch. Returns the differentiable total via
// `total_out` plus a numeric report; one t is drawn per batch and one
// denoiser pass per pair serves both the bridge and predictive terms.
LossReport total_loss(Tape& tape, ParamBinding& bind, const Dtdit& model, const Codec& codec_x,
                      const Codec& codec_y, const std::vector<NdArray>& xs,
                      const std::vector<NdArray>& ys, const BridgeSchedule& sched,
                      const LossConfig& cfg, RngStream& rng, Var* total_out = nullptr);

}  // namespace bridgelab

#endif
