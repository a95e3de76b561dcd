#include "ffmkit/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "ffmkit/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts are unsupported");

namespace ffm {

namespace {

// Fixed hashing keys: phi is part of the model definition, so these never
// depend on rng_seed.
constexpr std::uint64_t kPhiKey = 0x8f1bbcdcbfa53e0bULL;
constexpr std::uint64_t kCrossKey = 0xd6e8feb86659fd93ULL;

inline void check_fields(const FeatureVector& x, std::uint32_t num_fields) {
    for (const Slot& s : x.slots) {
        if (s.field >= num_fields)
            throw DataError("field id " + std::to_string(s.field) +
                            " out of range (F=" + std::to_string(num_fields) + ")");
    }
}

// Per-example gradient scratch. Touched rows are few (2 per field pair), so a
// linear scan beats a hash map here.
struct GradScratch {
    std::vector<std::uint64_t> rows;
    std::vector<double> grads;  // rows.size() * k entries

    std::size_t find_or_add(std::uint64_t row, std::uint32_t k) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rows[i] == row) return i;
        rows.push_back(row);
        grads.resize(rows.size() * k, 0.0);
        return rows.size() - 1;
    }

    void clear() {
        rows.clear();
        grads.clear();
    }
};

// Accumulates d(loss)/dw for every touched row at the current weights.
// kappa = weight * (p - y); each pair side also contributes lambda * w.
void gather_gradients(const FfmModel& m, const FeatureVector& x, double kappa,
                      GradScratch& s) {
    const std::uint32_t k = m.config.latent_dim;
    const std::uint64_t d = m.config.hash_space;
    const double lambda = m.config.l2_lambda;
    const auto& slots = x.slots;

    if (m.config.kind == ModelKind::LrCross) {
        for (std::size_t i = 0; i < slots.size(); ++i) {
            for (std::size_t j = i + 1; j < slots.size(); ++j) {
                const std::uint64_t r = phi_cross(slots[i].field, slots[i].value,
                                                  slots[j].field, slots[j].value, d);
                const std::size_t at = s.find_or_add(r, 1);
                s.grads[at] += kappa + lambda * m.weights[r];
            }
        }
        return;
    }

    for (std::size_t i = 0; i < slots.size(); ++i) {
        for (std::size_t j = i + 1; j < slots.size(); ++j) {
            const std::uint64_t r1 = phi(slots[i].value, slots[i].field, slots[j].field, d);
            const std::uint64_t r2 = phi(slots[j].value, slots[j].field, slots[i].field, d);
            const std::size_t a1 = s.find_or_add(r1, k);
            const std::size_t a2 = s.find_or_add(r2, k);
            const double* w1 = m.row(r1);
            const double* w2 = m.row(r2);
            for (std::uint32_t t = 0; t < k; ++t) {
                s.grads[a1 * k + t] += lambda * w1[t] + kappa * w2[t];
                s.grads[a2 * k + t] += lambda * w2[t] + kappa * w1[t];
            }
        }
    }
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("model file: truncated");
}

} // namespace

std::uint64_t phi(std::uint64_t value, std::uint32_t own_field,
                  std::uint32_t other_field, std::uint64_t hash_space) {
    const std::uint64_t fields =
        (static_cast<std::uint64_t>(own_field) << 32) | other_field;
    return mix_seed(kPhiKey, value, fields) % hash_space;
}

std::uint64_t phi_cross(std::uint32_t f1, std::uint64_t v1, std::uint32_t f2,
                        std::uint64_t v2, std::uint64_t hash_space) {
    const std::uint64_t a = mix_seed(kPhiKey, v1, f1);
    const std::uint64_t b = mix_seed(kPhiKey, v2, f2);
    // commutative combine so (f1,v1),(f2,v2) and (f2,v2),(f1,v1) agree
    return mix_seed(kCrossKey, a + b, a ^ b) % hash_space;
}

FfmModel FfmModel::init(ModelConfig config) {
    if (config.kind == ModelKind::LrCross) config.latent_dim = 1;
    config.validate();

    FfmModel m;
    m.config = config;
    const std::size_t n =
        static_cast<std::size_t>(config.hash_space) * config.latent_dim;
    m.weights.resize(n);
    m.adagrad.assign(n, 1.0);

    Rng rng(mix_seed(config.rng_seed, 0x57e16877));
    const double hi = config.init_scale / std::sqrt(static_cast<double>(config.latent_dim));
    for (double& w : m.weights) w = rng.uniform() * hi;
    return m;
}

bool bitwise_equal(const FfmModel& a, const FfmModel& b) {
    if (!(a.config == b.config)) return false;
    if (a.trained_epochs != b.trained_epochs) return false;
    if (a.weights.size() != b.weights.size()) return false;
    if (a.adagrad.size() != b.adagrad.size()) return false;
    return std::memcmp(a.weights.data(), b.weights.data(),
                       a.weights.size() * sizeof(double)) == 0 &&
           std::memcmp(a.adagrad.data(), b.adagrad.data(),
                       a.adagrad.size() * sizeof(double)) == 0;
}

double raw_score(const FfmModel& m, const FeatureVector& x) {
    check_fields(x, m.config.num_fields);
    const std::uint32_t k = m.config.latent_dim;
    const std::uint64_t d = m.config.hash_space;
    const auto& slots = x.slots;
    double score = 0.0;

    if (m.config.kind == ModelKind::LrCross) {
        for (std::size_t i = 0; i < slots.size(); ++i)
            for (std::size_t j = i + 1; j < slots.size(); ++j)
                score += m.weights[phi_cross(slots[i].field, slots[i].value,
                                             slots[j].field, slots[j].value, d)];
        return score;
    }

    for (std::size_t i = 0; i < slots.size(); ++i) {
        for (std::size_t j = i + 1; j < slots.size(); ++j) {
            const double* w1 = m.row(phi(slots[i].value, slots[i].field, slots[j].field, d));
            const double* w2 = m.row(phi(slots[j].value, slots[j].field, slots[i].field, d));
            double dot = 0.0;
            for (std::uint32_t t = 0; t < k; ++t) dot += w1[t] * w2[t];
            score += dot;
        }
    }
    return score;
}

double clamp_proba(double p) {
    if (p < kProbaClamp) return kProbaClamp;
    if (p > 1.0 - kProbaClamp) return 1.0 - kProbaClamp;
    return p;
}

double predict_proba(const FfmModel& m, const FeatureVector& x) {
    const double s = raw_score(m, x);
    const double p = s >= 0.0 ? 1.0 / (1.0 + std::exp(-s))
                              : std::exp(s) / (1.0 + std::exp(s));
    return clamp_proba(p);
}

double log_loss(double p, std::uint8_t label) {
    return label ? -std::log(p) : -std::log(1.0 - p);
}

std::vector<RowGrad> loss_gradient(const FfmModel& m, const FeatureVector& x) {
    const double p = predict_proba(m, x);
    const double kappa = x.weight * (p - static_cast<double>(x.label));
    GradScratch s;
    gather_gradients(m, x, kappa, s);

    const std::uint32_t k = m.config.latent_dim;
    std::vector<RowGrad> out(s.rows.size());
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        out[i].row = s.rows[i];
        out[i].g.assign(s.grads.begin() + i * k, s.grads.begin() + (i + 1) * k);
    }
    return out;
}

double sgd_step(FfmModel& m, const FeatureVector& x) {
    const double p = predict_proba(m, x);
    const double kappa = x.weight * (p - static_cast<double>(x.label));

    thread_local GradScratch scratch;
    scratch.clear();
    gather_gradients(m, x, kappa, scratch);

    const std::uint32_t k = m.config.latent_dim;
    const double eta = m.config.learning_rate;
    for (std::size_t i = 0; i < scratch.rows.size(); ++i) {
        double* w = m.row(scratch.rows[i]);
        double* G = m.adagrad.data() + scratch.rows[i] * k;
        for (std::uint32_t t = 0; t < k; ++t) {
            const double g = scratch.grads[i * k + t];
            if (!std::isfinite(g)) throw NumericalError("non-finite gradient");
            G[t] += g * g;
            w[t] -= eta * g / std::sqrt(G[t]);
        }
    }
    return x.weight * log_loss(p, x.label);
}

void save_model(const FfmModel& m, std::ostream& out) {
    out.write("FFMF", 4);
    write_pod(out, kModelFormatVersion);
    write_pod(out, static_cast<std::uint8_t>(m.config.kind));
    write_pod(out, m.config.num_fields);
    write_pod(out, m.config.latent_dim);
    write_pod(out, m.config.hash_space);
    write_pod(out, m.config.learning_rate);
    write_pod(out, m.config.l2_lambda);
    write_pod(out, m.config.init_scale);
    write_pod(out, m.config.rng_seed);
    write_pod(out, m.trained_epochs);
    out.write(reinterpret_cast<const char*>(m.weights.data()),
              static_cast<std::streamsize>(m.weights.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(m.adagrad.data()),
              static_cast<std::streamsize>(m.adagrad.size() * sizeof(double)));
    if (!out) throw DataError("model file: write failed");
}

void save_model(const FfmModel& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    save_model(m, f);
}

FfmModel load_model(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FFMF", 4) != 0)
        throw DataError("model file: bad magic");
    std::uint32_t version;
    read_pod(in, version);
    if (version != kModelFormatVersion)
        throw DataError("model file: unsupported version " + std::to_string(version));

    FfmModel m;
    std::uint8_t kind;
    read_pod(in, kind);
    if (kind > 1) throw DataError("model file: bad model kind");
    m.config.kind = static_cast<ModelKind>(kind);
    read_pod(in, m.config.num_fields);
    read_pod(in, m.config.latent_dim);
    read_pod(in, m.config.hash_space);
    read_pod(in, m.config.learning_rate);
    read_pod(in, m.config.l2_lambda);
    read_pod(in, m.config.init_scale);
    read_pod(in, m.config.rng_seed);
    read_pod(in, m.trained_epochs);
    try {
        m.config.validate();
    } catch (const ConfigError& e) {
        throw DataError(std::string("model file: ") + e.what());
    }

    const std::size_t n =
        static_cast<std::size_t>(m.config.hash_space) * m.config.latent_dim;
    m.weights.resize(n);
    m.adagrad.resize(n);
    in.read(reinterpret_cast<char*>(m.weights.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    in.read(reinterpret_cast<char*>(m.adagrad.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in || in.gcount() != static_cast<std::streamsize>(n * sizeof(double)))
        throw DataError("model file: truncated");
    return m;
}

FfmModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    return load_model(f);
}

} // namespace ffm
