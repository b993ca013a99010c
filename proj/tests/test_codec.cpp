#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bridgelab/codec.hpp"

using namespace bridgelab;

namespace {

NdArray random_sample(const std::vector<int>& shape, RngStream& rng) {
    NdArray x(shape);
    for (long i = 0; i < x.data.size(); ++i) x.data[i] = rng.normal();
    return x;
}

}  // namespace

TEST_CASE("identity codec is an exact inverse pair") {
    CodecConfig cfg{"identity", {12}, 4, 3, 0};
    ParamStore store;
    RngStream rng(0);
    auto codec = make_codec(cfg, "x", store, rng);
    CHECK(store.scalar_count() == 0);
    CHECK(codec->has_decoder());

    NdArray x = random_sample({12}, rng);
    TokenLatent z = codec->encode_value(store, x);
    CHECK(z.rows() == 4);
    CHECK(z.cols() == 3);
    CHECK(z(0, 0) == x.data[0]);
    CHECK(z(1, 0) == x.data[3]);  // row-major token layout
    NdArray back = codec->decode_value(store, z);
    CHECK((back.data - x.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identity codec rejects incompatible sizes") {
    CodecConfig cfg{"identity", {10}, 4, 3, 0};
    ParamStore store;
    RngStream rng(0);
    CHECK_THROWS_AS(make_codec(cfg, "x", store, rng), std::invalid_argument);
}

TEST_CASE("mlp codec shape contract and determinism") {
    CodecConfig cfg{"mlp", {7}, 5, 4, 16};
    ParamStore store;
    RngStream rng(1);
    auto codec = make_codec(cfg, "y", store, rng);
    NdArray x = random_sample({7}, rng);
    TokenLatent z1 = codec->encode_value(store, x);
    TokenLatent z2 = codec->encode_value(store, x);
    CHECK(z1.rows() == 5);
    CHECK(z1.cols() == 4);
    CHECK((z1 - z2).cwiseAbs().maxCoeff() == 0.0);
    NdArray d = codec->decode_value(store, z1);
    CHECK(d.shape == std::vector<int>{7});
    NdArray bad = random_sample({8}, rng);
    CHECK_THROWS_AS(codec->encode_value(store, bad), ShapeMismatchError);
}

TEST_CASE("voxel codec round trips shapes on a 16^3 grid") {
    CodecConfig cfg{"conv3d_voxel", {16, 16, 16}, 8, 16, 0};
    ParamStore store;
    RngStream rng(2);
    auto codec = make_codec(cfg, "x", store, rng);
    NdArray grid = random_sample({16, 16, 16}, rng);
    TokenLatent z = codec->encode_value(store, grid);
    CHECK(z.rows() == 8);
    CHECK(z.cols() == 16);
    NdArray out = codec->decode_value(store, z);
    CHECK(out.shape == grid.shape);
    for (long i = 0; i < out.data.size(); ++i) CHECK(std::isfinite(out.data[i]));
}

TEST_CASE("voxel codec validates grid geometry") {
    ParamStore store;
    RngStream rng(0);
    CodecConfig bad1{"conv3d_voxel", {16, 16, 8}, 8, 16, 0};
    CHECK_THROWS_AS(make_codec(bad1, "x", store, rng), std::invalid_argument);
    CodecConfig bad2{"conv3d_voxel", {12, 12, 12}, 8, 16, 0};
    CHECK_THROWS_AS(make_codec(bad2, "x2", store, rng), std::invalid_argument);
}

TEST_CASE("multiview codec fuses views and has no decoder") {
    CodecConfig cfg{"conv2d_multiview", {4, 16, 16}, 8, 16, 0};
    ParamStore store;
    RngStream rng(3);
    auto codec = make_codec(cfg, "y", store, rng);
    CHECK_FALSE(codec->has_decoder());
    NdArray views = random_sample({4, 16, 16}, rng);
    TokenLatent z = codec->encode_value(store, views);
    CHECK(z.rows() == 8);
    CHECK(z.cols() == 16);
    // changing a single view changes the fused latent
    NdArray views2 = views;
    views2.data[3 * 16 * 16 + 5] += 1.0;
    TokenLatent z2 = codec->encode_value(store, views2);
    CHECK((z - z2).cwiseAbs().maxCoeff() > 0.0);
    CHECK_THROWS_AS(codec->decode_value(store, z), MissingDecoderError);
}

TEST_CASE("shared-space contract across a codec pair") {
    ParamStore store;
    RngStream rng(4);
    CodecConfig cx{"mlp", {20}, 6, 8, 32};
    CodecConfig cy{"mlp", {11}, 6, 8, 32};
    auto x_codec = make_codec(cx, "x", store, rng);
    auto y_codec = make_codec(cy, "y", store, rng);
    TokenLatent zx = x_codec->encode_value(store, random_sample({20}, rng));
    TokenLatent zy = y_codec->encode_value(store, random_sample({11}, rng));
    CHECK(zx.rows() == zy.rows());
    CHECK(zx.cols() == zy.cols());
}

TEST_CASE("unknown codec kind is rejected") {
    ParamStore store;
    RngStream rng(0);
    CodecConfig cfg{"resnet", {8}, 2, 4, 0};
    CHECK_THROWS_AS(make_codec(cfg, "x", store, rng), std::invalid_argument);
}

TEST_CASE("encode/decode gradients flow into codec parameters") {
    CodecConfig cfg{"mlp", {6}, 2, 3, 8};
    ParamStore store;
    RngStream rng(5);
    auto codec = make_codec(cfg, "x", store, rng);
    NdArray x = random_sample({6}, rng);

    Tape tape;
    ParamBinding bind(store);
    Var z = codec->encode(tape, bind, x);
    Var back = codec->decode(tape, bind, z);
    Var loss = tape.mse(back, tape.leaf(Mat(x.data.transpose())));
    tape.backward(loss);
    store.zero_grad();
    bind.accumulate(tape);
    double gnorm = 0.0;
    for (const auto& e : store.entries()) gnorm += e.grad.squaredNorm();
    CHECK(gnorm > 0.0);
}
