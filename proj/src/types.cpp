#include "ffmkit/types.hpp"

namespace ffm {

void ModelConfig::validate() const {
    if (num_fields < 1) throw ConfigError("num_fields must be >= 1");
    if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
    if (kind == ModelKind::LrCross && latent_dim != 1)
        throw ConfigError("latent_dim must be 1 for lr-cross");
    if (hash_space < 1) throw ConfigError("hash_space must be >= 1");
    if (hash_space > (std::uint64_t(1) << 32))
        throw ConfigError("hash_space too large");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!(l2_lambda >= 0.0)) throw ConfigError("l2_lambda must be >= 0");
    if (!(init_scale > 0.0)) throw ConfigError("init_scale must be > 0");
}

const char* to_string(ModelKind kind) {
    return kind == ModelKind::Ffm ? "ffm" : "lr-cross";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "ffm") return ModelKind::Ffm;
    if (s == "lr-cross" || s == "lr_cross") return ModelKind::LrCross;
    throw ConfigError("unknown model kind: " + s);
}

} // namespace ffm
