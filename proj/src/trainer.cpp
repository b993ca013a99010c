#include "bridgelab/trainer.hpp"

#include <cmath>
#include <fstream>

namespace bridgelab {

namespace {

NdArray mat_to_nd(const Mat& m) {
    NdArray out({static_cast<int>(m.rows()), static_cast<int>(m.cols())});
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        out.data.data(), m.rows(), m.cols()) = m;
    return out;
}

Mat nd_to_mat(const NdArray& a) {
    if (a.shape.size() != 2) throw CorruptFileError("checkpoint array is not a matrix");
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(a.data.data(), a.shape[0],
                                                            a.shape[1]);
}

}  // namespace

Trainer::Trainer(const ExperimentConfig& cfg) : Trainer(cfg, true) {}

Trainer::Trainer(ExperimentConfig cfg, bool init)
    : cfg_(std::move(cfg)),
      train_(cfg_.train()),
      schedule_(cfg_.schedule()),
      opt_(RAdamConfig{cfg_.train().lr, 0.9, 0.999, 1e-8, 1.0}),
      rng_(cfg_.train().seed) {
    model_ = std::make_unique<Dtdit>(cfg_.denoiser(), "model");
    if (init) {
        RngStream init_rng(train_.seed);
        codec_x_ = make_codec(cfg_.codec_x(), "x", params_, init_rng);
        codec_y_ = make_codec(cfg_.codec_y(), "y", params_, init_rng);
        model_->init_params(params_, init_rng);
    } else {
        // load() fills params_ afterwards; codecs only need their configs.
        RngStream dummy(0);
        ParamStore scratch;
        codec_x_ = make_codec(cfg_.codec_x(), "x", scratch, dummy);
        codec_y_ = make_codec(cfg_.codec_y(), "y", scratch, dummy);
    }
}

bool Trainer::model_active(long iter, const std::string& name) const {
    if (train_.regime != TrainRegime::iterative) return true;
    bool phase_b = (iter / train_.alt_period) % 2 == 1;
    bool is_model = name.rfind("model.", 0) == 0;
    return phase_b ? is_model : !is_model;
}

LossConfig Trainer::phase_loss(long iter) const {
    LossConfig lc = cfg_.loss();
    switch (train_.regime) {
        case TrainRegime::end_to_end:
            return lc;
        case TrainRegime::two_step:
            if (iter < train_.pretrain_iterations) {
                lc.mode = LossMode::rec_only;
                lc.w_bridge = 0.0;
            }
            return lc;
        case TrainRegime::iterative:
            if ((iter / train_.alt_period) % 2 == 0) {
                lc.w_bridge = 0.0;  // phase (a): codecs learn from recon/pred (+ contrastive)
            } else {
                lc.w_pred = 0.0;  // phase (b): denoiser learns from bridge (+ contrastive)
                lc.w_ae = 0.0;
            }
            return lc;
    }
    return lc;
}

LossReport Trainer::step(const PairedDataset& data) {
    if (data.xs.empty()) throw std::invalid_argument("Trainer: empty dataset");
    std::vector<NdArray> xs, ys;
    for (int b = 0; b < train_.batch_size; ++b) {
        size_t i = rng_.integer(data.xs.size());
        xs.push_back(data.xs[i]);
        ys.push_back(data.ys[i]);
    }

    Tape tape;
    ParamBinding bind(params_);
    Var total{};
    LossConfig lc = phase_loss(iteration_);
    LossReport report =
        total_loss(tape, bind, *model_, *codec_x_, *codec_y_, xs, ys, schedule_, lc, rng_, &total);

    if (!std::isfinite(report.total)) {
        std::string bad = "total";
        for (const auto& [name, v] : report.components)
            if (!std::isfinite(v)) { bad = name; break; }
        throw NonFiniteLossError("non-finite loss at iteration " + std::to_string(iteration_) +
                                 " (component: " + bad + ")");
    }

    params_.zero_grad();
    tape.backward(total);
    bind.accumulate(tape);

    long iter = iteration_;
    opt_.step(params_, iter + 1,
              [&](const std::string& name) { return model_active(iter, name); });

    ++iteration_;
    trace_.push_back(report);
    return report;
}

void Trainer::run(const PairedDataset& data, int count) {
    long stop = count < 0 ? train_.iterations : iteration_ + count;
    while (iteration_ < stop) step(data);
}

void Trainer::save(const std::string& dir) const {
    ArrayBundle bundle;
    bundle.meta["kind"] = "checkpoint";
    bundle.meta["checkpoint_schema"] = kCheckpointSchemaVersion;
    bundle.meta["config"] = cfg_.tree;
    bundle.meta["config_hash"] = cfg_.hash();
    bundle.meta["iteration"] = iteration_;
    bundle.meta["rng"] = rng_.serialize();
    for (const auto& e : params_.entries()) {
        bundle.add("param." + e.name, mat_to_nd(e.value));
        bundle.add("opt_m." + e.name, mat_to_nd(e.m));
        bundle.add("opt_v." + e.name, mat_to_nd(e.v));
    }
    Vec totals(static_cast<long>(trace_.size()));
    for (size_t i = 0; i < trace_.size(); ++i) totals[static_cast<long>(i)] = trace_[i].total;
    bundle.add("trace.total", NdArray({static_cast<int>(trace_.size())}, totals));
    save_bundle(bundle, dir);
}

std::unique_ptr<Trainer> Trainer::load(const std::string& dir) {
    ArrayBundle bundle = load_bundle(dir);
    if (!bundle.meta.contains("checkpoint_schema"))
        throw SchemaVersionError("not a checkpoint: missing schema field in " + dir);
    int ver = bundle.meta["checkpoint_schema"];
    if (ver != kCheckpointSchemaVersion)
        throw SchemaVersionError("unsupported checkpoint schema version " + std::to_string(ver));

    ExperimentConfig cfg = ExperimentConfig::resolve(bundle.meta["config"]);
    auto trainer = std::unique_ptr<Trainer>(new Trainer(cfg, false));
    // Recreate parameter entries in canonical order, then overwrite values.
    RngStream init_rng(trainer->train_.seed);
    trainer->codec_x_->init_params(trainer->params_, init_rng);
    trainer->codec_y_->init_params(trainer->params_, init_rng);
    trainer->model_->init_params(trainer->params_, init_rng);
    for (auto& e : trainer->params_.entries()) {
        e.value = nd_to_mat(bundle.get("param." + e.name));
        e.m = nd_to_mat(bundle.get("opt_m." + e.name));
        e.v = nd_to_mat(bundle.get("opt_v." + e.name));
    }
    trainer->iteration_ = bundle.meta["iteration"];
    trainer->rng_.deserialize(bundle.meta["rng"]);
    const NdArray& totals = bundle.get("trace.total");
    trainer->trace_.clear();
    for (long i = 0; i < totals.data.size(); ++i) {
        LossReport r;
        r.total = totals.data[i];
        trainer->trace_.push_back(r);
    }
    return trainer;
}

void Trainer::write_trace_csv(const std::string& path) const {
    std::ofstream out(path);
    out << "iteration,total,bridge,pred,infonce,ae_x,ae_y,t\n";
    for (size_t i = 0; i < trace_.size(); ++i) {
        const LossReport& r = trace_[i];
        auto comp = [&](const char* k) {
            auto it = r.components.find(k);
            return it == r.components.end() ? 0.0 : it->second;
        };
        out << i << ',' << r.total << ',' << comp("bridge") << ',' << comp("pred") << ','
            << comp("infonce") << ',' << comp("ae_x") << ',' << comp("ae_y") << ','
            << r.t_sampled << '\n';
    }
}

uint64_t Trainer::param_hash(const std::string& prefix) const {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& e : params_.entries()) {
        if (!prefix.empty() && e.name.rfind(prefix, 0) != 0) continue;
        mix(e.name.data(), e.name.size());
        for (long c = 0; c < e.value.cols(); ++c)
            mix(e.value.col(c).data(), sizeof(double) * e.value.rows());
    }
    return h;
}

NdArray Trainer::translate_sample(const NdArray& y, const SamplerConfig& scfg) const {
    RngStream noise(scfg.seed);
    Trainer* self = const_cast<Trainer*>(this);
    return translate(y, *self->codec_x_, *self->codec_y_, *self->model_, self->params_, schedule_,
                     scfg, cfg_.variant(), noise);
}

}  // namespace bridgelab
