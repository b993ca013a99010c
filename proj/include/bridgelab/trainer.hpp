#ifndef BRIDGELAB_TRAINER_HPP
#define BRIDGELAB_TRAINER_HPP

#include <memory>
#include <string>
#include <vector>

#include "bridgelab/config.hpp"
#include "bridgelab/datasets.hpp"
#include "bridgelab/sampler.hpp"

namespace bridgelab {

struct NonFiniteLossError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaVersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointSchemaVersion = 1;

// Owns one experiment's mutable state: parameters, optimizer moments, RNG
// stream, and the loss trace. Checkpoints capture all of it, so a resumed run
// replays the uninterrupted one bitwise on the same platform.
class Trainer {
   public:
    explicit Trainer(const ExperimentConfig& cfg);

    // Runs `count` iterations (count < 0 = the remainder of the configured
    // budget). Throws NonFiniteLossError naming the iteration and the first
    // non-finite component.
    void run(const PairedDataset& data, int count = -1);
    LossReport step(const PairedDataset& data);  // a single iteration

    void save(const std::string& dir) const;
    static std::unique_ptr<Trainer> load(const std::string& dir);

    void write_trace_csv(const std::string& path) const;

    long iteration() const { return iteration_; }
    const std::vector<LossReport>& trace() const { return trace_; }
    const ExperimentConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const Dtdit& model() const { return *model_; }
    const Codec& codec_x() const { return *codec_x_; }
    const Codec& codec_y() const { return *codec_y_; }
    const BridgeSchedule& schedule() const { return schedule_; }

    // Stable digest of the current values of the parameters matching
    // `prefix` (empty = all); used to assert phase freezes.
    uint64_t param_hash(const std::string& prefix = "") const;

    // Translate one source sample with the current parameters.
    NdArray translate_sample(const NdArray& y, const SamplerConfig& scfg) const;

   private:
    explicit Trainer(ExperimentConfig cfg, bool init);
    bool model_active(long iter, const std::string& name) const;
    LossConfig phase_loss(long iter) const;

    ExperimentConfig cfg_;
    TrainConfig train_;
    BridgeSchedule schedule_;
    std::unique_ptr<Dtdit> model_;
    std::unique_ptr<Codec> codec_x_, codec_y_;
    ParamStore params_;
    RAdam opt_;
    RngStream rng_;
    long iteration_ = 0;
    std::vector<LossReport> trace_;
};

}  // namespace bridgelab

#endif
