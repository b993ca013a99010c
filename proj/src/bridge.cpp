#include "bridgelab/bridge.hpp"

#include <cmath>

namespace bridgelab {

BridgeVariant parse_variant(const std::string& s) {
    if (s == "paper_literal") return BridgeVariant::paper_literal;
    if (s == "ddbm_ve") return BridgeVariant::ddbm_ve;
    throw std::invalid_argument("unknown bridge variant: " + s);
}

std::string variant_name(BridgeVariant v) {
    return v == BridgeVariant::paper_literal ? "paper_literal" : "ddbm_ve";
}

double BridgeSchedule::sigma_of_t(double t) const {
    double a = std::pow(sigma_min, 1.0 / rho);
    double b = std::pow(sigma_max, 1.0 / rho);
    return std::pow(a + t * (b - a), rho);
}

double BridgeSchedule::t_of_sigma(double sigma) const {
    double a = std::pow(sigma_min, 1.0 / rho);
    double b = std::pow(sigma_max, 1.0 / rho);
    return (std::pow(sigma, 1.0 / rho) - a) / (b - a);
}

BridgeSchedule make_schedule(int n_steps, double sigma_min, double sigma_max, double rho,
                             double t_eps) {
    if (n_steps < 2) throw std::invalid_argument("make_schedule: n_steps must be >= 2");
    if (!(sigma_min > 0.0) || !(sigma_min < sigma_max))
        throw std::invalid_argument("make_schedule: need 0 < sigma_min < sigma_max");
    if (!(rho > 0.0)) throw std::invalid_argument("make_schedule: rho must be positive");
    if (!(t_eps > 0.0) || !(t_eps < 0.5 / n_steps))
        throw std::invalid_argument("make_schedule: t_eps out of range");
    BridgeSchedule s;
    s.n_steps = n_steps;
    s.sigma_min = sigma_min;
    s.sigma_max = sigma_max;
    s.rho = rho;
    s.t_eps = t_eps;
    double a = std::pow(sigma_max, 1.0 / rho);
    double b = std::pow(sigma_min, 1.0 / rho);
    s.levels.resize(n_steps + 1);
    for (int i = 0; i < n_steps; ++i) {
        double frac = static_cast<double>(i) / (n_steps - 1);
        s.levels[i] = std::pow(a + frac * (b - a), rho);
    }
    s.levels[0] = sigma_max;            // endpoint-exact regardless of rounding
    s.levels[n_steps - 1] = sigma_min;
    s.levels[n_steps] = 0.0;
    return s;
}

BridgeMoments ddbm_moments(double sigma, double sigma_T) {
    double ratio = (sigma * sigma) / (sigma_T * sigma_T);
    return BridgeMoments{ratio, sigma * sigma * (1.0 - ratio)};
}

BridgeState sample_bridge_state(const TokenLatent& z_0, const TokenLatent& z_T, double t,
                                const BridgeSchedule& sched, BridgeVariant variant,
                                RngStream& noise) {
    require_same_shape(z_0, z_T, "sample_bridge_state");
    if (t < sched.t_eps || t > 1.0 - sched.t_eps)
        throw std::out_of_range("sample_bridge_state: t outside [t_eps, 1-t_eps]");
    double sigma = sched.sigma_of_t(t);
    Mat eps(z_0.rows(), z_0.cols());
    for (long c = 0; c < eps.cols(); ++c)
        for (long r = 0; r < eps.rows(); ++r) eps(r, c) = noise.normal();

    BridgeState st;
    st.t = t;
    st.sigma_t = sigma;
    if (variant == BridgeVariant::paper_literal) {
        st.z_t = z_0 + sigma * eps;
    } else {
        BridgeMoments mo = ddbm_moments(sigma, sched.sigma_T());
        st.z_t = z_0 + mo.ratio * (z_T - z_0) + std::sqrt(mo.s2) * eps;
    }
    return st;
}

TokenLatent score_target(const TokenLatent& z_t, const TokenLatent& z_0, const TokenLatent& z_T,
                         double t, const BridgeSchedule& sched, BridgeVariant variant) {
    require_same_shape(z_t, z_0, "score_target");
    require_same_shape(z_t, z_T, "score_target");
    double sigma = sched.sigma_of_t(t);
    double sigT = sched.sigma_T();
    if (variant == BridgeVariant::paper_literal) {
        double gap = sigT * sigT - sigma * sigma;
        if (gap < kSingularFloor)
            throw NearSingularError("score_target: sigma_T^2 - sigma_t^2 below floor");
        return (z_T - z_t) / gap;
    }
    BridgeMoments mo = ddbm_moments(sigma, sigT);
    if (mo.s2 < kSingularFloor)
        throw NearSingularError("score_target: conditional variance below floor");
    Mat mu = z_0 + mo.ratio * (z_T - z_0);
    return (mu - z_t) / mo.s2;
}

TokenLatent h_transform(const TokenLatent& z_t, const TokenLatent& z_T, double t,
                        const BridgeSchedule& sched) {
    require_same_shape(z_t, z_T, "h_transform");
    double sigma = sched.sigma_of_t(t);
    double sigT = sched.sigma_T();
    double gap = sigT * sigT - sigma * sigma;
    if (gap < kSingularFloor)
        throw NearSingularError("h_transform: sigma_T^2 - sigma_t^2 below floor");
    return (z_T - z_t) / gap;
}

double loss_weight(double t, const BridgeSchedule& sched, LossWeighting weighting) {
    if (weighting == LossWeighting::constant) return 1.0;
    double sigma = sched.sigma_of_t(t);
    double gap = sched.sigma_T() * sched.sigma_T() - sigma * sigma;
    return gap * gap;
}

}  // namespace bridgelab
