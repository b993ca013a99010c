#include "bridgelab/dtdit.hpp"

#include <cmath>

namespace bridgelab {

namespace {

Var linear(Tape& t, ParamBinding& bind, Var x, const std::string& w, const std::string& b) {
    return t.add_rowvec(t.matmul(x, bind.use(t, w)), bind.use(t, b));
}

void init_linear(ParamStore& store, RngStream& rng, const std::string& w, const std::string& b,
                 int in, int out, double stddev_scale = 1.0) {
    Mat& wv = store.create(w, in, out);
    trunc_normal_init(wv, stddev_scale / std::sqrt(static_cast<double>(in)), rng);
    store.create(b, 1, out);
}

void init_layernorm(ParamStore& store, const std::string& base, int dim) {
    store.create(base + ".g", 1, dim).setOnes();
    store.create(base + ".b", 1, dim);
}

Var affine_ln(Tape& t, ParamBinding& bind, Var x, const std::string& base) {
    Var y = t.layer_norm_rows(x);
    return t.add_rowvec(t.mul_rowvec(y, bind.use(t, base + ".g")), bind.use(t, base + ".b"));
}

// Fixed sinusoidal features for t in [0, 1]; half sines, half cosines over
// log-spaced periods.
Mat sinusoid_base(double t, int dim) {
    int half = dim / 2;
    Mat out(1, dim);
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
        out(0, i) = std::sin(1000.0 * t * freq);
        out(0, half + i) = std::cos(1000.0 * t * freq);
    }
    if (dim % 2 == 1) out(0, dim - 1) = 0.0;
    return out;
}

}  // namespace

void Dtdit::init_params(ParamStore& store, RngStream& rng) const {
    int d = cfg_.embed_dim;
    int h = cfg_.ffn_hidden();
    const std::string p = prefix_ + ".";

    Mat& pos = store.create(p + "pos", cfg_.token_count, d);
    trunc_normal_init(pos, 0.02, rng);
    Mat& mask = store.create(p + "mask", 1, d);
    trunc_normal_init(mask, 0.02, rng);

    init_linear(store, rng, p + "temb.w0", p + "temb.b0", d, d);
    init_linear(store, rng, p + "temb.w1", p + "temb.b1", d, d);

    auto init_attn = [&](const std::string& base) {
        init_linear(store, rng, base + ".wq", base + ".bq", d, d);
        init_linear(store, rng, base + ".wk", base + ".bk", d, d);
        init_linear(store, rng, base + ".wv", base + ".bv", d, d);
        init_linear(store, rng, base + ".wo", base + ".bo", d, d);
    };

    for (int i = 0; i < cfg_.depth_encoder; ++i) {
        std::string b = p + "enc" + std::to_string(i);
        init_layernorm(store, b + ".ln1", d);
        init_attn(b + ".attn");
        init_layernorm(store, b + ".ln2", d);
        init_linear(store, rng, b + ".ffn.w0", b + ".ffn.b0", d, h);
        init_linear(store, rng, b + ".ffn.w1", b + ".ffn.b1", h, d);
    }
    init_layernorm(store, p + "enc.ln_f", d);

    for (int i = 0; i < cfg_.depth_decoder; ++i) {
        std::string b = p + "dec" + std::to_string(i);
        init_attn(b + ".self");
        init_attn(b + ".cross");
        init_linear(store, rng, b + ".ffn.w0", b + ".ffn.b0", d, h);
        init_linear(store, rng, b + ".ffn.w1", b + ".ffn.b1", h, d);
        // adaLN-Zero: the 9-vector modulation head starts at exactly zero.
        store.create(b + ".mod.w", d, 9 * d);
        store.create(b + ".mod.b", 1, 9 * d);
    }

    init_layernorm(store, p + "final.ln", d);
    init_linear(store, rng, p + "final.w", p + "final.b", d, d);
}

Var Dtdit::timestep_embedding(Tape& tape, ParamBinding& bind, double t) const {
    const std::string p = prefix_ + ".";
    Var base = tape.leaf(sinusoid_base(t, cfg_.embed_dim));
    Var h = tape.silu(linear(tape, bind, base, p + "temb.w0", p + "temb.b0"));
    return linear(tape, bind, h, p + "temb.w1", p + "temb.b1");
}

Var Dtdit::attention(Tape& t, ParamBinding& bind, Var q_in, Var kv_in,
                     const std::string& name) const {
    int d = cfg_.embed_dim;
    int heads = cfg_.num_heads;
    int dh = d / heads;
    Var q = linear(t, bind, q_in, name + ".wq", name + ".bq");
    Var k = linear(t, bind, kv_in, name + ".wk", name + ".bk");
    Var v = linear(t, bind, kv_in, name + ".wv", name + ".bv");
    std::vector<Var> outs;
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int hd = 0; hd < heads; ++hd) {
        Var qh = t.slice_cols(q, hd * dh, dh);
        Var kh = t.slice_cols(k, hd * dh, dh);
        Var vh = t.slice_cols(v, hd * dh, dh);
        Var scores = t.scale(t.matmul(qh, t.transpose(kh)), inv_sqrt);
        outs.push_back(t.matmul(t.softmax_rows(scores), vh));
    }
    return linear(t, bind, t.concat_cols(outs), name + ".wo", name + ".bo");
}

Var Dtdit::modulated(Tape& t, Var x, Var shift, Var scale) const {
    return t.add_rowvec(t.mul_rowvec(x, t.add_const(scale, 1.0)), shift);
}

Var Dtdit::encode_memory(Tape& tape, ParamBinding& bind, Var z_T) const {
    if (tape.val(z_T).rows() != cfg_.token_count || tape.val(z_T).cols() != cfg_.embed_dim)
        throw ShapeMismatchError("encode_memory: z_T shape does not match config");
    ++encoder_calls_;
    const std::string p = prefix_ + ".";
    Var x = tape.add(z_T, bind.use(tape, p + "pos"));
    for (int i = 0; i < cfg_.depth_encoder; ++i) {
        std::string b = p + "enc" + std::to_string(i);
        Var h = affine_ln(tape, bind, x, b + ".ln1");
        x = tape.add(x, attention(tape, bind, h, h, b + ".attn"));
        h = affine_ln(tape, bind, x, b + ".ln2");
        h = tape.silu(linear(tape, bind, h, b + ".ffn.w0", b + ".ffn.b0"));
        x = tape.add(x, linear(tape, bind, h, b + ".ffn.w1", b + ".ffn.b1"));
    }
    return affine_ln(tape, bind, x, p + "enc.ln_f");
}

Var Dtdit::denoise(Tape& tape, ParamBinding& bind, Var z_t, Var memory, double t) const {
    const Mat& zv = tape.val(z_t);
    if (zv.rows() != cfg_.token_count || zv.cols() != cfg_.embed_dim)
        throw ShapeMismatchError("denoise: z_t shape does not match config");
    const std::string p = prefix_ + ".";
    int d = cfg_.embed_dim;
    int tc = cfg_.token_count;

    Var temb = timestep_embedding(tape, bind, t);
    Var pos = bind.use(tape, p + "pos");
    Var x_in = tape.add(z_t, pos);
    Var out_tokens = tape.add(tape.broadcast_row(bind.use(tape, p + "mask"), tc), pos);
    Var s = tape.concat_rows(x_in, out_tokens);

    for (int i = 0; i < cfg_.depth_decoder; ++i) {
        std::string b = p + "dec" + std::to_string(i);
        Var mod = tape.add_rowvec(tape.matmul(tape.silu(temb), bind.use(tape, b + ".mod.w")),
                                  bind.use(tape, b + ".mod.b"));
        auto chunk = [&](int j) { return tape.slice_cols(mod, j * d, d); };
        // chunks: (shift, scale, gate) x (self, cross, ffn)
        Var h = modulated(tape, tape.layer_norm_rows(s), chunk(0), chunk(1));
        s = tape.add(s, tape.mul_rowvec(attention(tape, bind, h, h, b + ".self"), chunk(2)));

        h = modulated(tape, tape.layer_norm_rows(s), chunk(3), chunk(4));
        s = tape.add(s, tape.mul_rowvec(attention(tape, bind, h, memory, b + ".cross"), chunk(5)));

        h = modulated(tape, tape.layer_norm_rows(s), chunk(6), chunk(7));
        h = tape.silu(linear(tape, bind, h, b + ".ffn.w0", b + ".ffn.b0"));
        h = linear(tape, bind, h, b + ".ffn.w1", b + ".ffn.b1");
        s = tape.add(s, tape.mul_rowvec(h, chunk(8)));
    }

    Var out = tape.slice_rows(s, tc, tc);
    out = affine_ln(tape, bind, out, p + "final.ln");
    return linear(tape, bind, out, p + "final.w", p + "final.b");
}

Mat Dtdit::encode_memory_value(ParamStore& store, const Mat& z_T) const {
    Tape tape;
    ParamBinding bind(store);
    return tape.val(encode_memory(tape, bind, tape.leaf(z_T)));
}

Mat Dtdit::denoise_value(ParamStore& store, const Mat& z_t, const Mat& memory, double t) const {
    Tape tape;
    ParamBinding bind(store);
    return tape.val(denoise(tape, bind, tape.leaf(z_t), tape.leaf(memory), t));
}

}  // namespace bridgelab
