#ifndef BRIDGELAB_CONFIG_HPP
#define BRIDGELAB_CONFIG_HPP

#include <string>
#include <vector>

#include "bridgelab/bridge.hpp"
#include "bridgelab/codec.hpp"
#include "bridgelab/dtdit.hpp"
#include "bridgelab/objectives.hpp"
#include "bridgelab/sampler.hpp"
#include "bridgelab/serialize.hpp"

namespace bridgelab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TrainRegime { two_step, end_to_end, iterative };
TrainRegime parse_regime(const std::string& s);
std::string regime_name(TrainRegime r);

struct TrainConfig {
    TrainRegime regime = TrainRegime::iterative;
    int iterations = 2000;
    int batch_size = 8;
    double lr = 1e-3;
    int alt_period = 100;         // iterative phase length
    uint64_t seed = 0;
    int pretrain_iterations = 500;  // two_step phase 1
};

// The full experiment configuration as a resolved key/value tree. Every key
// has a documented default (see defaults()); user files and --set overrides
// may only touch keys that exist there, anything else fails fast with the
// offending dotted path. The resolved tree is embedded verbatim in
// checkpoints and metric reports.
struct ExperimentConfig {
    Json tree;

    static Json defaults();
    static ExperimentConfig resolve(const Json& user);
    static ExperimentConfig from_file(const std::string& path);

    // Applies a "dotted.key=value" override, coercing the value to the type
    // of the corresponding default.
    void apply_override(const std::string& kv);

    void validate() const;

    // Typed views.
    BridgeSchedule schedule() const;
    BridgeVariant variant() const;
    DenoiserConfig denoiser() const;
    CodecConfig codec_x() const;
    CodecConfig codec_y() const;
    LossConfig loss() const;
    SamplerConfig sampler() const;
    TrainConfig train() const;

    // Native modality shapes implied by data.task.
    std::vector<int> shape_x() const;
    std::vector<int> shape_y() const;

    std::string hash() const;  // stable hex digest of the resolved tree
};

}  // namespace bridgelab

#endif
