#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bridgelab/sampler.hpp"

using namespace bridgelab;

namespace {

Mat random_mat(int r, int c, RngStream& rng) {
    Mat m(r, c);
    for (int j = 0; j < c; ++j)
        for (int i = 0; i < r; ++i) m(i, j) = rng.normal();
    return m;
}

// Oracle endpoint estimator: returns a fixed z_0 independent of (z_t, t),
// the closed-form optimum for a deterministic pair.
DenoiseFn constant_oracle(const Mat& z0) {
    return [z0](const Mat&, double) { return z0; };
}

double oracle_error(int steps, const Mat& z0, const Mat& zT, const BridgeSchedule& sched,
                    BridgeVariant variant = BridgeVariant::ddbm_ve) {
    SamplerConfig cfg;
    cfg.n_steps = steps;
    RngStream noise(0);
    Mat out = heun_sample(zT, constant_oracle(z0), sched, cfg, variant, noise);
    return (out - z0).norm() / std::max(z0.norm(), 1e-12);
}

}  // namespace

TEST_CASE("constant-oracle sampling recovers z0 and converges with steps") {
    auto sched = make_schedule(40, 0.01, 1.0, 7.0);
    RngStream rng(3);
    double worst40 = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
        Mat z0 = random_mat(4, 6, rng);
        Mat zT = random_mat(4, 6, rng);
        double e10 = oracle_error(10, z0, zT, sched);
        double e20 = oracle_error(20, z0, zT, sched);
        double e40 = oracle_error(40, z0, zT, sched);
        CHECK(e40 <= 1e-2);
        CHECK(e10 > e40);
        CHECK(e20 <= e10);
        CHECK(e40 <= e20);
        worst40 = std::max(worst40, e40);
    }
    CHECK(worst40 <= 1e-2);
}

TEST_CASE("literal variant also lands near the oracle endpoint") {
    auto sched = make_schedule(40, 0.01, 1.0, 7.0);
    RngStream rng(5);
    Mat z0 = random_mat(3, 4, rng);
    Mat zT = random_mat(3, 4, rng);
    double e = oracle_error(40, z0, zT, sched, BridgeVariant::paper_literal);
    double baseline = (zT - z0).norm() / z0.norm();
    CHECK(std::isfinite(e));
    CHECK(e < 0.25 * baseline);
}

TEST_CASE("zero churn is bitwise deterministic") {
    auto sched = make_schedule(20, 0.01, 1.0, 7.0);
    RngStream rng(7);
    Mat z0 = random_mat(2, 5, rng);
    Mat zT = random_mat(2, 5, rng);
    SamplerConfig cfg;
    cfg.n_steps = 20;
    RngStream n1(1), n2(99);  // different noise seeds must not matter at churn 0
    Mat a = heun_sample(zT, constant_oracle(z0), sched, cfg, BridgeVariant::ddbm_ve, n1);
    Mat b = heun_sample(zT, constant_oracle(z0), sched, cfg, BridgeVariant::ddbm_ve, n2);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("churn injects noise but keeps the endpoint reasonable") {
    auto sched = make_schedule(20, 0.01, 1.0, 7.0);
    RngStream rng(9);
    Mat z0 = random_mat(2, 5, rng);
    Mat zT = random_mat(2, 5, rng);
    SamplerConfig cfg;
    cfg.n_steps = 20;
    cfg.churn_ratio = 1.0;
    RngStream n1(1), n2(2);
    Mat a = heun_sample(zT, constant_oracle(z0), sched, cfg, BridgeVariant::ddbm_ve, n1);
    Mat b = heun_sample(zT, constant_oracle(z0), sched, cfg, BridgeVariant::ddbm_ve, n2);
    CHECK((a - b).cwiseAbs().maxCoeff() > 0.0);  // noise seed now matters
    CHECK((a - z0).norm() / z0.norm() < 0.2);
    CHECK((b - z0).norm() / z0.norm() < 0.2);
}

TEST_CASE("sampler step-count override rebuilds the ladder") {
    auto sched = make_schedule(40, 0.01, 1.0, 7.0);
    RngStream rng(11);
    Mat z0 = random_mat(2, 3, rng);
    Mat zT = random_mat(2, 3, rng);
    int calls = 0;
    DenoiseFn counting = [&](const Mat&, double) {
        ++calls;
        return z0;
    };
    SamplerConfig cfg;
    cfg.n_steps = 10;
    RngStream noise(0);
    heun_sample(zT, counting, sched, cfg, BridgeVariant::ddbm_ve, noise);
    // 10 levels plus terminal zero: 9 Heun steps (2 calls) + 1 Euler step
    CHECK(calls == 2 * 9 + 1);
}

TEST_CASE("non-finite states abort with the step index") {
    auto sched = make_schedule(10, 0.01, 1.0, 7.0);
    RngStream rng(13);
    Mat zT = random_mat(2, 3, rng);
    DenoiseFn bad = [](const Mat& z, double) {
        Mat out = z;
        out(0, 0) = std::numeric_limits<double>::quiet_NaN();
        return out;
    };
    SamplerConfig cfg;
    cfg.n_steps = 10;
    RngStream noise(0);
    CHECK_THROWS_WITH_AS(heun_sample(zT, bad, sched, cfg, BridgeVariant::ddbm_ve, noise),
                         doctest::Contains("step 0"), NonFiniteError);
}

TEST_CASE("model-backed sampling computes memory exactly once") {
    DenoiserConfig dcfg{16, 2, 1, 1, 4, 2.0};
    Dtdit model(dcfg);
    ParamStore store;
    RngStream rng(1);
    model.init_params(store, rng);
    auto sched = make_schedule(10, 0.01, 1.0, 7.0);
    SamplerConfig cfg;
    cfg.n_steps = 10;
    Mat zT = random_mat(4, 16, rng);
    model.reset_encoder_calls();
    RngStream noise(0);
    Mat out = heun_sample_model(zT, model, store, sched, cfg, BridgeVariant::ddbm_ve, noise);
    CHECK(model.encoder_calls() == 1);
    CHECK(out.rows() == 4);
    CHECK(out.cols() == 16);
    CHECK(out.allFinite());
}

TEST_CASE("translate composes codecs around the sampler") {
    DenoiserConfig dcfg{8, 2, 1, 1, 3, 2.0};
    Dtdit model(dcfg);
    ParamStore store;
    RngStream rng(2);
    model.init_params(store, rng);
    CodecConfig cx{"identity", {24}, 3, 8, 0};
    CodecConfig cy{"mlp", {5}, 3, 8, 8};
    auto codec_x = make_codec(cx, "x", store, rng);
    auto codec_y = make_codec(cy, "y", store, rng);
    auto sched = make_schedule(10, 0.01, 1.0, 7.0);
    SamplerConfig cfg;
    cfg.n_steps = 10;

    NdArray y({5});
    for (int i = 0; i < 5; ++i) y.data[i] = rng.normal();
    model.reset_encoder_calls();
    RngStream noise(0);
    NdArray out = translate(y, *codec_x, *codec_y, model, store, sched, cfg,
                            BridgeVariant::ddbm_ve, noise);
    CHECK(out.shape == std::vector<int>{24});
    CHECK(model.encoder_calls() == 1);
    RngStream noise2(0);
    NdArray again = translate(y, *codec_x, *codec_y, model, store, sched, cfg,
                              BridgeVariant::ddbm_ve, noise2);
    CHECK((out.data - again.data).cwiseAbs().maxCoeff() == 0.0);
}
