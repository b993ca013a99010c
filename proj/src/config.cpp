#include "bridgelab/config.hpp"

#include <fstream>
#include <sstream>

namespace bridgelab {

TrainRegime parse_regime(const std::string& s) {
    if (s == "two_step") return TrainRegime::two_step;
    if (s == "end_to_end") return TrainRegime::end_to_end;
    if (s == "iterative") return TrainRegime::iterative;
    throw ConfigError("unknown train.regime '" + s + "'");
}

std::string regime_name(TrainRegime r) {
    switch (r) {
        case TrainRegime::two_step: return "two_step";
        case TrainRegime::end_to_end: return "end_to_end";
        case TrainRegime::iterative: return "iterative";
    }
    return "?";
}

Json ExperimentConfig::defaults() {
    return Json{
        {"data",
         {{"task", "toy_sr"},  // toy_shapes | toy_sr | linear
          {"n", 2000},
          {"seed", 0},
          {"dim_x", 8},    // linear task only
          {"dim_y", 8},    // linear task only
          {"path", ""}}},  // pre-generated dataset directory; empty = generate
        {"bridge",
         {{"n_steps", 40},
          {"sigma_min", 0.05},
          {"sigma_max", 2.0},
          {"rho", 7.0},
          {"t_eps", 1e-3},
          {"variant", "ddbm_ve"},  // ddbm_ve | paper_literal
          {"weighting", "gap_squared"}}},  // gap_squared | constant
        {"model",
         {{"embed_dim", 32}, {"num_heads", 4}, {"depth", 2}, {"ffn_multiplier", 2.0}}},
        {"codec",
         {{"token_count", 16},
          {"embed_dim", 32},
          {"hidden", 128},
          {"x", {{"kind", "auto"}}},    // auto | identity | mlp | conv3d_voxel
          {"y", {{"kind", "auto"}}}}},  // auto | identity | mlp | conv2d_multiview
        {"loss",
         {{"mode", "ours"},  // ours | basic | rec_plus_nce | pred_only | rec_only
          {"tau", 0.5},
          {"distance", "mse"},
          {"weights",
           {{"bridge", 1.0}, {"pred", 1.0}, {"infonce", 1.0}, {"ae", 1.0}}}}},
        {"sampler",
         {{"steps", 40}, {"guidance", 0.5}, {"churn_ratio", 0.0}, {"seed", 0}}},
        {"train",
         {{"regime", "iterative"},  // two_step | end_to_end | iterative
          {"iterations", 2000},
          {"batch_size", 8},
          {"lr", 1e-3},
          {"alt_period", 100},
          {"seed", 0},
          {"pretrain_iterations", 500}}},
    };
}

namespace {

void merge_checked(Json& base, const Json& user, const std::string& path) {
    if (!user.is_object())
        throw ConfigError("config node '" + (path.empty() ? "<root>" : path) +
                          "' must be an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        std::string full = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) throw ConfigError("unknown config key '" + full + "'");
        Json& slot = base[it.key()];
        if (slot.is_object()) {
            merge_checked(slot, it.value(), full);
        } else {
            const Json& v = it.value();
            bool num_ok = slot.is_number() && v.is_number();
            if (!num_ok && slot.type() != v.type())
                throw ConfigError("config key '" + full + "' has the wrong type");
            if (slot.is_number_integer() && !v.is_number_integer())
                throw ConfigError("config key '" + full + "' must be an integer");
            slot = v;
        }
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::resolve(const Json& user) {
    ExperimentConfig cfg{defaults()};
    merge_checked(cfg.tree, user, "");
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    Json user;
    try {
        in >> user;
    } catch (const Json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return resolve(user);
}

void ExperimentConfig::apply_override(const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + kv + "' must look like key.path=value");
    std::string key = kv.substr(0, eq), raw = kv.substr(eq + 1);

    Json* node = &tree;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (size_t i = 0; i < parts.size(); ++i) {
        if (!node->is_object() || !node->contains(parts[i]))
            throw ConfigError("unknown config key '" + key + "'");
        node = &(*node)[parts[i]];
    }
    if (node->is_object()) throw ConfigError("config key '" + key + "' is not a leaf");

    try {
        if (node->is_string())
            *node = raw;
        else if (node->is_boolean())
            *node = (raw == "true" || raw == "1");
        else if (node->is_number_integer())
            *node = static_cast<int64_t>(std::stoll(raw));
        else
            *node = std::stod(raw);
    } catch (const std::exception&) {
        throw ConfigError("cannot parse value '" + raw + "' for key '" + key + "'");
    }
    validate();
}

void ExperimentConfig::validate() const {
    const Json& t = tree;
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    std::string task = t["data"]["task"];
    require(task == "toy_shapes" || task == "toy_sr" || task == "linear",
            "data.task must be toy_shapes, toy_sr, or linear");
    require(t["data"]["n"].get<int>() > 0, "data.n must be positive");
    require(t["bridge"]["n_steps"].get<int>() >= 2, "bridge.n_steps must be at least 2");
    double smin = t["bridge"]["sigma_min"], smax = t["bridge"]["sigma_max"];
    require(smin > 0 && smax > smin, "bridge sigmas must satisfy 0 < sigma_min < sigma_max");
    require(t["bridge"]["rho"].get<double>() > 0, "bridge.rho must be positive");
    double teps = t["bridge"]["t_eps"];
    require(teps > 0 && teps < 0.5, "bridge.t_eps must lie in (0, 0.5)");
    parse_variant(t["bridge"]["variant"]);
    std::string w = t["bridge"]["weighting"];
    require(w == "gap_squared" || w == "constant",
            "bridge.weighting must be gap_squared or constant");
    require(t["model"]["embed_dim"].get<int>() == t["codec"]["embed_dim"].get<int>(),
            "model.embed_dim must equal codec.embed_dim (shared latent space)");
    denoiser();  // runs the denoiser's own invariants
    parse_loss_mode(t["loss"]["mode"]);
    require(t["loss"]["tau"].get<double>() > 0, "loss.tau must be positive");
    require(t["loss"]["distance"] == "mse", "loss.distance only supports mse");
    require(t["sampler"]["steps"].get<int>() >= 2, "sampler.steps must be at least 2");
    require(t["sampler"]["churn_ratio"].get<double>() >= 0,
            "sampler.churn_ratio must be non-negative");
    parse_regime(t["train"]["regime"]);
    require(t["train"]["iterations"].get<int>() > 0, "train.iterations must be positive");
    require(t["train"]["batch_size"].get<int>() > 0, "train.batch_size must be positive");
    require(t["train"]["lr"].get<double>() > 0, "train.lr must be positive");
    require(t["train"]["alt_period"].get<int>() >= 1, "train.alt_period must be at least 1");
    require(t["train"]["pretrain_iterations"].get<int>() >= 0,
            "train.pretrain_iterations must be non-negative");
    std::string kx = t["codec"]["x"]["kind"], ky = t["codec"]["y"]["kind"];
    for (const std::string& k : {kx, ky})
        require(k == "auto" || k == "identity" || k == "mlp" || k == "conv3d_voxel" ||
                    k == "conv2d_multiview",
                "unknown codec kind '" + k + "'");
}

BridgeSchedule ExperimentConfig::schedule() const {
    const Json& b = tree["bridge"];
    return make_schedule(b["n_steps"], b["sigma_min"], b["sigma_max"], b["rho"], b["t_eps"]);
}

BridgeVariant ExperimentConfig::variant() const {
    return parse_variant(tree["bridge"]["variant"]);
}

DenoiserConfig ExperimentConfig::denoiser() const {
    const Json& m = tree["model"];
    DenoiserConfig d;
    d.embed_dim = m["embed_dim"];
    d.num_heads = m["num_heads"];
    d.depth_encoder = m["depth"];
    d.depth_decoder = m["depth"];
    d.token_count = tree["codec"]["token_count"];
    d.ffn_multiplier = m["ffn_multiplier"];
    d.validate();
    return d;
}

std::vector<int> ExperimentConfig::shape_x() const {
    std::string task = tree["data"]["task"];
    if (task == "toy_shapes") return {16, 16, 16};
    if (task == "toy_sr") return {32, 32};
    return {tree["data"]["dim_x"].get<int>()};
}

std::vector<int> ExperimentConfig::shape_y() const {
    std::string task = tree["data"]["task"];
    if (task == "toy_shapes") return {4, 32, 32};
    if (task == "toy_sr") return {8, 8};
    return {tree["data"]["dim_y"].get<int>()};
}

namespace {
CodecConfig codec_common(const Json& tree, const std::string& kind_raw,
                         const std::vector<int>& shape, bool is_x) {
    CodecConfig c;
    c.kind = kind_raw;
    if (c.kind == "auto") {
        std::string task = tree["data"]["task"];
        if (task == "toy_shapes")
            c.kind = is_x ? "conv3d_voxel" : "conv2d_multiview";
        else
            c.kind = "mlp";
    }
    c.input_shape = shape;
    c.token_count = tree["codec"]["token_count"];
    c.embed_dim = tree["codec"]["embed_dim"];
    c.hidden = tree["codec"]["hidden"];
    return c;
}
}  // namespace

CodecConfig ExperimentConfig::codec_x() const {
    return codec_common(tree, tree["codec"]["x"]["kind"], shape_x(), true);
}

CodecConfig ExperimentConfig::codec_y() const {
    return codec_common(tree, tree["codec"]["y"]["kind"], shape_y(), false);
}

LossConfig ExperimentConfig::loss() const {
    const Json& l = tree["loss"];
    LossConfig c;
    c.mode = parse_loss_mode(l["mode"]);
    c.tau = l["tau"];
    c.w_bridge = l["weights"]["bridge"];
    c.w_pred = l["weights"]["pred"];
    c.w_infonce = l["weights"]["infonce"];
    c.w_ae = l["weights"]["ae"];
    c.weighting = tree["bridge"]["weighting"] == "constant" ? LossWeighting::constant
                                                            : LossWeighting::gap_squared;
    c.variant = variant();
    return c;
}

SamplerConfig ExperimentConfig::sampler() const {
    const Json& s = tree["sampler"];
    return SamplerConfig{s["steps"], s["guidance"], s["churn_ratio"],
                         s["seed"].get<uint64_t>()};
}

TrainConfig ExperimentConfig::train() const {
    const Json& t = tree["train"];
    TrainConfig c;
    c.regime = parse_regime(t["regime"]);
    c.iterations = t["iterations"];
    c.batch_size = t["batch_size"];
    c.lr = t["lr"];
    c.alt_period = t["alt_period"];
    c.seed = t["seed"].get<uint64_t>();
    c.pretrain_iterations = t["pretrain_iterations"];
    return c;
}

std::string ExperimentConfig::hash() const {
    std::string dump = tree.dump();
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace bridgelab
