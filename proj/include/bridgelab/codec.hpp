#ifndef BRIDGELAB_CODEC_HPP
#define BRIDGELAB_CODEC_HPP

#include <memory>
#include <string>
#include <vector>

#include "bridgelab/nd.hpp"
#include "bridgelab/params.hpp"
#include "bridgelab/tape.hpp"

namespace bridgelab {

struct MissingDecoderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CodecConfig {
    std::string kind;              // identity | mlp | conv2d_multiview | conv3d_voxel
    std::vector<int> input_shape;  // native modality shape
    int token_count = 16;
    int embed_dim = 32;
    int hidden = 128;              // mlp hidden width
};

// A modality encoder/decoder pair mapping raw samples to and from the shared
// (token_count x embed_dim) latent. Parameters live in the ParamStore under
// this codec's prefix; encode/decode build onto the caller's tape so training
// gradients flow through them.
class Codec {
   public:
    Codec(CodecConfig cfg, std::string prefix) : cfg_(std::move(cfg)), prefix_(std::move(prefix)) {}
    virtual ~Codec() = default;

    virtual void init_params(ParamStore& store, RngStream& rng) = 0;
    virtual Var encode(Tape& tape, ParamBinding& bind, const NdArray& x) const = 0;
    virtual Var decode(Tape& tape, ParamBinding& bind, Var z) const {
        (void)tape; (void)bind; (void)z;
        throw MissingDecoderError("codec '" + prefix_ + "' (" + cfg_.kind + ") has no decoder");
    }
    virtual bool has_decoder() const { return false; }

    const CodecConfig& config() const { return cfg_; }
    const std::string& prefix() const { return prefix_; }

    // Convenience paths for evaluation (no gradients kept).
    TokenLatent encode_value(ParamStore& store, const NdArray& x) const;
    NdArray decode_value(ParamStore& store, const TokenLatent& z) const;

    // Turns a flattened decode output back into the native modality shape.
    NdArray to_sample(const Mat& flat) const;

   protected:
    void check_input(const NdArray& x) const;
    CodecConfig cfg_;
    std::string prefix_;
};

std::unique_ptr<Codec> make_codec(const CodecConfig& cfg, const std::string& prefix,
                                  ParamStore& store, RngStream& rng);

}  // namespace bridgelab

#endif
