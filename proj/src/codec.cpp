#include "bridgelab/codec.hpp"

#include <cmath>

namespace bridgelab {

namespace {

// y = x W + b, W is (in x out), b is (1 x out).
Var linear(Tape& t, ParamBinding& bind, Var x, const std::string& w, const std::string& b) {
    return t.add_rowvec(t.matmul(x, bind.use(t, w)), bind.use(t, b));
}

void init_linear(ParamStore& store, RngStream& rng, const std::string& w, const std::string& b,
                 int in, int out) {
    Mat& wv = store.create(w, in, out);
    trunc_normal_init(wv, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    store.create(b, 1, out);
}

void init_conv_weight(ParamStore& store, RngStream& rng, const std::string& name, int rows,
                      int cols, int fan_in) {
    Mat& wv = store.create(name, rows, cols);
    trunc_normal_init(wv, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

}  // namespace

void Codec::check_input(const NdArray& x) const {
    if (x.shape != cfg_.input_shape)
        throw ShapeMismatchError("codec '" + prefix_ + "': input shape " + shape_str(x.shape) +
                                 " does not match " + shape_str(cfg_.input_shape));
}

TokenLatent Codec::encode_value(ParamStore& store, const NdArray& x) const {
    Tape tape;
    ParamBinding bind(store);
    return tape.val(encode(tape, bind, x));
}

NdArray Codec::decode_value(ParamStore& store, const TokenLatent& z) const {
    Tape tape;
    ParamBinding bind(store);
    Var zv = tape.leaf(z);
    return to_sample(tape.val(decode(tape, bind, zv)));
}

NdArray Codec::to_sample(const Mat& flat) const {
    NdArray out(cfg_.input_shape);
    if (out.size() != flat.size())
        throw ShapeMismatchError("codec '" + prefix_ + "': decode output size mismatch");
    // flat is row-major over the native shape
    long idx = 0;
    for (long r = 0; r < flat.rows(); ++r)
        for (long c = 0; c < flat.cols(); ++c) out.data[idx++] = flat(r, c);
    return out;
}

// ---------------------------------------------------------------------------

class IdentityCodec final : public Codec {
   public:
    using Codec::Codec;

    void init_params(ParamStore&, RngStream&) override {}

    Var encode(Tape& tape, ParamBinding&, const NdArray& x) const override {
        check_input(x);
        Mat row = x.data.transpose();
        Var v = tape.leaf(row);
        return tape.reshape(v, cfg_.token_count, cfg_.embed_dim);
    }

    Var decode(Tape& tape, ParamBinding&, Var z) const override {
        return tape.reshape(z, 1, cfg_.token_count * cfg_.embed_dim);
    }

    bool has_decoder() const override { return true; }
};

// ---------------------------------------------------------------------------

class MlpCodec final : public Codec {
   public:
    using Codec::Codec;

    void init_params(ParamStore& store, RngStream& rng) override {
        int in = static_cast<int>(NdArray(cfg_.input_shape).size());
        int lat = cfg_.token_count * cfg_.embed_dim;
        init_linear(store, rng, prefix_ + ".enc.w0", prefix_ + ".enc.b0", in, cfg_.hidden);
        init_linear(store, rng, prefix_ + ".enc.w1", prefix_ + ".enc.b1", cfg_.hidden, lat);
        init_linear(store, rng, prefix_ + ".dec.w0", prefix_ + ".dec.b0", lat, cfg_.hidden);
        init_linear(store, rng, prefix_ + ".dec.w1", prefix_ + ".dec.b1", cfg_.hidden, in);
    }

    Var encode(Tape& tape, ParamBinding& bind, const NdArray& x) const override {
        check_input(x);
        Var h = tape.leaf(Mat(x.data.transpose()));
        h = tape.silu(linear(tape, bind, h, prefix_ + ".enc.w0", prefix_ + ".enc.b0"));
        h = linear(tape, bind, h, prefix_ + ".enc.w1", prefix_ + ".enc.b1");
        return tape.reshape(h, cfg_.token_count, cfg_.embed_dim);
    }

    Var decode(Tape& tape, ParamBinding& bind, Var z) const override {
        Var h = tape.reshape(z, 1, cfg_.token_count * cfg_.embed_dim);
        h = tape.silu(linear(tape, bind, h, prefix_ + ".dec.w0", prefix_ + ".dec.b0"));
        return linear(tape, bind, h, prefix_ + ".dec.w1", prefix_ + ".dec.b1");
    }

    bool has_decoder() const override { return true; }
};

// ---------------------------------------------------------------------------

// Three strided conv layers with SiLU, channel ladder 16 -> 32 -> 64, then a
// linear head to the token latent; the decoder mirrors with transposed convs.
class Conv3dVoxelCodec final : public Codec {
   public:
    Conv3dVoxelCodec(CodecConfig cfg, std::string prefix) : Codec(std::move(cfg), std::move(prefix)) {
        if (cfg_.input_shape.size() != 3 || cfg_.input_shape[0] != cfg_.input_shape[1] ||
            cfg_.input_shape[1] != cfg_.input_shape[2])
            throw std::invalid_argument("conv3d_voxel: input must be a cubic grid");
        n_ = cfg_.input_shape[0];
        if (n_ % 8 != 0) throw std::invalid_argument("conv3d_voxel: grid side must be divisible by 8");
    }

    void init_params(ParamStore& store, RngStream& rng) override {
        const int k3 = kK * kK * kK;
        for (int l = 0; l < 3; ++l) {
            int cin = chan(l), cout = chan(l + 1);
            init_conv_weight(store, rng, lname("enc.conv", l), cout, cin * k3, cin * k3);
            store.create(lname("enc.bias", l), cout, 1);
        }
        int flat = chan(3) * (n_ / 8) * (n_ / 8) * (n_ / 8);
        int lat = cfg_.token_count * cfg_.embed_dim;
        init_linear(store, rng, prefix_ + ".enc.proj.w", prefix_ + ".enc.proj.b", flat, lat);
        init_linear(store, rng, prefix_ + ".dec.proj.w", prefix_ + ".dec.proj.b", lat, flat);
        for (int l = 0; l < 3; ++l) {
            int cin = chan(3 - l), cout = chan(2 - l);
            init_conv_weight(store, rng, lname("dec.conv", l), cin, cout * k3, cin * k3);
            store.create(lname("dec.bias", l), cout, 1);
        }
    }

    Var encode(Tape& tape, ParamBinding& bind, const NdArray& x) const override {
        check_input(x);
        Var h = tape.leaf(Mat(x.data.transpose()));  // (1, n^3)
        int side = n_;
        for (int l = 0; l < 3; ++l) {
            h = tape.conv3d(h, bind.use(tape, lname("enc.conv", l)), chan(l), side, side, side,
                            kK, 2, 1);
            side /= 2;
            h = tape.silu(tape.add_colvec(h, bind.use(tape, lname("enc.bias", l))));
        }
        Var flat = tape.reshape(h, 1, chan(3) * side * side * side);
        Var lat = linear(tape, bind, flat, prefix_ + ".enc.proj.w", prefix_ + ".enc.proj.b");
        return tape.reshape(lat, cfg_.token_count, cfg_.embed_dim);
    }

    Var decode(Tape& tape, ParamBinding& bind, Var z) const override {
        int side = n_ / 8;
        Var flat = tape.reshape(z, 1, cfg_.token_count * cfg_.embed_dim);
        Var h = linear(tape, bind, flat, prefix_ + ".dec.proj.w", prefix_ + ".dec.proj.b");
        h = tape.reshape(h, chan(3), side * side * side);
        for (int l = 0; l < 3; ++l) {
            h = tape.conv3d_transpose(h, bind.use(tape, lname("dec.conv", l)), chan(3 - l), side,
                                      side, side, kK, 2, 1);
            side *= 2;
            h = tape.add_colvec(h, bind.use(tape, lname("dec.bias", l)));
            if (l < 2) h = tape.silu(h);
        }
        return tape.reshape(h, 1, side * side * side);
    }

    bool has_decoder() const override { return true; }

   private:
    static constexpr int kK = 4;
    static int chan(int level) {
        static const int ladder[4] = {1, 16, 32, 64};
        return ladder[level];
    }
    std::string lname(const char* part, int l) const {
        return prefix_ + "." + part + std::to_string(l);
    }
    int n_ = 0;
};

// ---------------------------------------------------------------------------

// Shared per-view conv stack, concatenation across views, linear projection.
// Encoder-only: multi-view silhouettes are a source modality.
class Conv2dMultiviewCodec final : public Codec {
   public:
    Conv2dMultiviewCodec(CodecConfig cfg, std::string prefix)
        : Codec(std::move(cfg), std::move(prefix)) {
        if (cfg_.input_shape.size() != 3)
            throw std::invalid_argument("conv2d_multiview: input must be (views, h, w)");
        views_ = cfg_.input_shape[0];
        h_ = cfg_.input_shape[1];
        w_ = cfg_.input_shape[2];
        if (h_ != w_ || h_ % 8 != 0)
            throw std::invalid_argument("conv2d_multiview: views must be square, side divisible by 8");
    }

    void init_params(ParamStore& store, RngStream& rng) override {
        const int k2 = kK * kK;
        for (int l = 0; l < 3; ++l) {
            int cin = chan(l), cout = chan(l + 1);
            init_conv_weight(store, rng, lname("enc.conv", l), cout, cin * k2, cin * k2);
            store.create(lname("enc.bias", l), cout, 1);
        }
        int per_view = chan(3) * (h_ / 8) * (w_ / 8);
        int lat = cfg_.token_count * cfg_.embed_dim;
        init_linear(store, rng, prefix_ + ".enc.proj.w", prefix_ + ".enc.proj.b",
                    views_ * per_view, lat);
    }

    Var encode(Tape& tape, ParamBinding& bind, const NdArray& x) const override {
        check_input(x);
        long per_view = static_cast<long>(h_) * w_;
        std::vector<Var> feats;
        for (int vi = 0; vi < views_; ++vi) {
            Mat view = x.data.segment(vi * per_view, per_view).transpose();
            Var h = tape.leaf(view);
            int side = h_;
            for (int l = 0; l < 3; ++l) {
                h = tape.conv2d(h, bind.use(tape, lname("enc.conv", l)), chan(l), side, side, kK,
                                2, 1);
                side /= 2;
                h = tape.silu(tape.add_colvec(h, bind.use(tape, lname("enc.bias", l))));
            }
            feats.push_back(tape.reshape(h, 1, chan(3) * side * side));
        }
        Var cat = tape.concat_cols(feats);
        Var lat = linear(tape, bind, cat, prefix_ + ".enc.proj.w", prefix_ + ".enc.proj.b");
        return tape.reshape(lat, cfg_.token_count, cfg_.embed_dim);
    }

   private:
    static constexpr int kK = 4;
    static int chan(int level) {
        static const int ladder[4] = {1, 16, 32, 64};
        return ladder[level];
    }
    std::string lname(const char* part, int l) const {
        return prefix_ + "." + part + std::to_string(l);
    }
    int views_ = 0, h_ = 0, w_ = 0;
};

// ---------------------------------------------------------------------------

std::unique_ptr<Codec> make_codec(const CodecConfig& cfg, const std::string& prefix,
                                  ParamStore& store, RngStream& rng) {
    std::unique_ptr<Codec> codec;
    if (cfg.kind == "identity") {
        long expect = static_cast<long>(cfg.token_count) * cfg.embed_dim;
        if (NdArray(cfg.input_shape).size() != expect)
            throw std::invalid_argument("identity codec: input size must equal token_count*embed_dim");
        codec = std::make_unique<IdentityCodec>(cfg, prefix);
    } else if (cfg.kind == "mlp") {
        codec = std::make_unique<MlpCodec>(cfg, prefix);
    } else if (cfg.kind == "conv3d_voxel") {
        codec = std::make_unique<Conv3dVoxelCodec>(cfg, prefix);
    } else if (cfg.kind == "conv2d_multiview") {
        codec = std::make_unique<Conv2dMultiviewCodec>(cfg, prefix);
    } else {
        throw std::invalid_argument("unknown codec kind: " + cfg.kind);
    }
    codec->init_params(store, rng);
    return codec;
}

}  // namespace bridgelab
