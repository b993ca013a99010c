#ifndef BRIDGELAB_DTDIT_HPP
#define BRIDGELAB_DTDIT_HPP

#include <string>

#include "bridgelab/nd.hpp"
#include "bridgelab/params.hpp"
#include "bridgelab/tape.hpp"

namespace bridgelab {

struct DenoiserConfig {
    int embed_dim = 32;
    int num_heads = 4;
    int depth_encoder = 2;
    int depth_decoder = 2;
    int token_count = 16;
    double ffn_multiplier = 2.0;

    void validate() const {
        if (embed_dim <= 0 || num_heads <= 0 || depth_encoder <= 0 || depth_decoder <= 0 ||
            token_count <= 0 || ffn_multiplier <= 0.0)
            throw std::invalid_argument("DenoiserConfig: all fields must be positive");
        if (embed_dim % num_heads != 0)
            throw std::invalid_argument("DenoiserConfig: embed_dim must divide by num_heads");
    }
    int ffn_hidden() const { return static_cast<int>(embed_dim * ffn_multiplier); }
};

// Distribution-translation transformer: an encoder turns the source tokens
// z_T into a memory sequence, and a decoder runs timestep-modulated
// self-attention / cross-attention / FFN sublayers over [z_t tokens ||
// learnable output tokens], returning the output-token half as the z_0
// estimate. Per decoder block the modulation MLP emits 9 vectors (shift,
// scale, gate for each of the three sublayers); gates start at zero so every
// block is the identity at init.
class Dtdit {
   public:
    explicit Dtdit(DenoiserConfig cfg, std::string prefix = "model")
        : cfg_(cfg), prefix_(std::move(prefix)) {
        cfg_.validate();
    }

    void init_params(ParamStore& store, RngStream& rng) const;

    Var timestep_embedding(Tape& tape, ParamBinding& bind, double t) const;
    Var encode_memory(Tape& tape, ParamBinding& bind, Var z_T) const;
    Var denoise(Tape& tape, ParamBinding& bind, Var z_t, Var memory, double t) const;

    // Evaluation paths (no gradient bookkeeping kept by the caller).
    Mat encode_memory_value(ParamStore& store, const Mat& z_T) const;
    Mat denoise_value(ParamStore& store, const Mat& z_t, const Mat& memory, double t) const;

    long encoder_calls() const { return encoder_calls_; }
    void reset_encoder_calls() const { encoder_calls_ = 0; }

    const DenoiserConfig& config() const { return cfg_; }
    const std::string& prefix() const { return prefix_; }

   private:
    Var attention(Tape& t, ParamBinding& bind, Var q_in, Var kv_in, const std::string& name) const;
    Var modulated(Tape& t, Var x, Var shift, Var scale) const;

    DenoiserConfig cfg_;
    std::string prefix_;
    mutable long encoder_calls_ = 0;
};

}  // namespace bridgelab

#endif
