#include "doctest.h"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <sstream>

#include "ffmkit/model.hpp"
#include "ffmkit/rng.hpp"
#include "test_util.hpp"

using namespace ffm;
using namespace ffm::testing;

namespace {

ModelConfig tiny_config(std::uint32_t fields, std::uint32_t k, std::uint64_t d,
                        ModelKind kind = ModelKind::Ffm) {
    ModelConfig c;
    c.num_fields = fields;
    c.latent_dim = k;
    c.hash_space = d;
    c.learning_rate = 0.1;
    c.rng_seed = 42;
    c.kind = kind;
    return c;
}

} // namespace

TEST_SUITE("phi") {

TEST_CASE("deterministic across calls") {
    const std::uint64_t a = phi(12345, 2, 7, 1 << 20);
    for (int i = 0; i < 10; ++i) CHECK(phi(12345, 2, 7, 1 << 20) == a);
    const std::uint64_t b = phi_cross(0, 11, 1, 22, 1 << 20);
    CHECK(phi_cross(0, 11, 1, 22, 1 << 20) == b);
}

TEST_CASE("degenerate hash space maps everything to zero") {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
        CHECK(phi(rng.next_u64(), 1, 2, 1) == 0);
        CHECK(phi_cross(0, rng.next_u64(), 1, rng.next_u64(), 1) == 0);
    }
}

TEST_CASE("cross hashing is orientation independent") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const std::uint32_t f1 = static_cast<std::uint32_t>(rng.below(16));
        const std::uint32_t f2 = static_cast<std::uint32_t>(rng.below(16));
        const std::uint64_t v1 = rng.next_u64();
        const std::uint64_t v2 = rng.next_u64();
        CHECK(phi_cross(f1, v1, f2, v2, 1 << 18) == phi_cross(f2, v2, f1, v1, 1 << 18));
    }
}

TEST_CASE("bucket load stays near uniform") {
    // 1e6 seeded tokens into 2^20 buckets: mean load ~0.95, so a sound hash
    // keeps the max under 10x mean.
    const std::uint64_t d = 1 << 20;
    std::vector<std::uint16_t> load(d, 0);
    Rng rng(20260808);
    std::uint16_t max_load = 0;
    for (int i = 0; i < 1'000'000; ++i) {
        const std::uint64_t r = phi(rng.next_u64(), 0, 1, d);
        max_load = std::max(max_load, ++load[r]);
    }
    const double mean = 1'000'000.0 / static_cast<double>(d);
    CHECK(max_load <= 10.0 * mean);
}

} // TEST_SUITE

TEST_SUITE("raw_score") {

TEST_CASE("zero weights give zero score") {
    FfmModel m = FfmModel::init(tiny_config(4, 3, 64));
    std::fill(m.weights.begin(), m.weights.end(), 0.0);
    const FeatureVector x = make_example(1, {{0, 5}, {1, 6}, {2, 7}, {3, 8}});
    CHECK(raw_score(m, x) == 0.0);
}

TEST_CASE("single present field has no pairs") {
    const FfmModel m = FfmModel::init(tiny_config(4, 2, 64));
    CHECK(raw_score(m, make_example(0, {{2, 99}})) == 0.0);
    CHECK(raw_score(m, make_example(0, {})) == 0.0);
}

TEST_CASE("matches the exhaustive pairwise oracle") {
    // F=3, k=2, d large enough that the six touched rows never collide.
    FfmModel m = FfmModel::init(tiny_config(3, 2, 1 << 16));
    Rng rng(3);
    for (double& w : m.weights) w = rng.uniform(-1.0, 1.0);
    const FeatureVector x = make_example(1, {{0, 10}, {1, 20}, {2, 30}});
    CHECK(raw_score(m, x) == doctest::Approx(brute_force_score(m, x)).epsilon(1e-12));

    // three-term structure: knocking out one field removes two dot products
    const FeatureVector x2 = make_example(1, {{0, 10}, {1, 20}});
    CHECK(raw_score(m, x2) == doctest::Approx(brute_force_score(m, x2)).epsilon(1e-12));
}

TEST_CASE("pair count: all-ones weights count F(F-1)/2 dots") {
    for (std::uint32_t f_present = 2; f_present <= 6; ++f_present) {
        FfmModel m = FfmModel::init(tiny_config(8, 3, 1 << 16));
        std::fill(m.weights.begin(), m.weights.end(), 1.0);
        FeatureVector x;
        for (std::uint32_t f = 0; f < f_present; ++f) x.slots.push_back({f, f + 100});
        const double expect = 0.5 * f_present * (f_present - 1) * 3;  // k=3 per dot
        CHECK(raw_score(m, x) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("out-of-range field id raises a data error") {
    const FfmModel m = FfmModel::init(tiny_config(3, 2, 64));
    CHECK_THROWS_AS(raw_score(m, make_example(0, {{3, 1}})), DataError);
}

TEST_CASE("lr-cross equals a sum of conjunction weights") {
    FfmModel m = FfmModel::init(tiny_config(4, 1, 1 << 12, ModelKind::LrCross));
    Rng rng(5);
    for (double& w : m.weights) w = rng.uniform(-0.5, 0.5);
    const FeatureVector x = make_example(0, {{0, 1}, {1, 2}, {3, 9}});
    double expect = 0.0;
    expect += m.weights[phi_cross(0, 1, 1, 2, m.config.hash_space)];
    expect += m.weights[phi_cross(0, 1, 3, 9, m.config.hash_space)];
    expect += m.weights[phi_cross(1, 2, 3, 9, m.config.hash_space)];
    CHECK(raw_score(m, x) == doctest::Approx(expect).epsilon(1e-12));

    // slot order never matters
    const FeatureVector xr = make_example(0, {{3, 9}, {0, 1}, {1, 2}});
    CHECK(raw_score(m, xr) == raw_score(m, x));
}

} // TEST_SUITE

TEST_SUITE("predict_proba") {

TEST_CASE("zero score gives one half") {
    FfmModel m = FfmModel::init(tiny_config(3, 2, 64));
    std::fill(m.weights.begin(), m.weights.end(), 0.0);
    CHECK(predict_proba(m, make_example(1, {{0, 1}, {1, 2}})) == 0.5);
}

TEST_CASE("huge scores clamp to the epsilon boundary") {
    // k=1, two fields, rows forced by hand so the score is exactly 50
    FfmModel m = FfmModel::init(tiny_config(2, 1, 1 << 10));
    std::fill(m.weights.begin(), m.weights.end(), 0.0);
    const FeatureVector x = make_example(1, {{0, 3}, {1, 4}});
    const std::uint64_t r1 = phi(3, 0, 1, m.config.hash_space);
    const std::uint64_t r2 = phi(4, 1, 0, m.config.hash_space);
    REQUIRE(r1 != r2);
    m.weights[r1] = 50.0;
    m.weights[r2] = 1.0;
    CHECK(predict_proba(m, x) == 1.0 - 1e-9);
    m.weights[r1] = -50.0;
    CHECK(predict_proba(m, x) == 1e-9);
}

TEST_CASE("matches sigmoid of the oracle score") {
    FfmModel m = FfmModel::init(tiny_config(3, 2, 1 << 16));
    Rng rng(17);
    for (double& w : m.weights) w = rng.uniform(-0.7, 0.7);
    const FeatureVector x = make_example(1, {{0, 10}, {1, 20}, {2, 30}});
    CHECK(predict_proba(m, x) ==
          doctest::Approx(sigmoid(brute_force_score(m, x))).epsilon(1e-12));
}

} // TEST_SUITE

TEST_SUITE("sgd_step") {

TEST_CASE("zero gradient leaves the model untouched") {
    // All-zero weights with lambda = 0: every pair gradient is exactly zero.
    FfmModel m = FfmModel::init(tiny_config(3, 2, 64));
    std::fill(m.weights.begin(), m.weights.end(), 0.0);
    const FfmModel before = m;
    const double loss = sgd_step(m, make_example(1, {{0, 1}, {1, 2}, {2, 3}}));
    CHECK(loss == doctest::Approx(-std::log(0.5)));
    CHECK(bitwise_equal(before, m));
}

TEST_CASE("single-field example touches nothing") {
    FfmModel m = FfmModel::init(tiny_config(3, 2, 64));
    const FfmModel before = m;
    sgd_step(m, make_example(0, {{1, 7}}));
    CHECK(bitwise_equal(before, m));
}

TEST_CASE("one step matches a scalar AdaGrad oracle") {
    // two fields, k=1, rows chosen collision-free
    ModelConfig cfg = tiny_config(2, 1, 8);
    cfg.learning_rate = 0.3;
    cfg.l2_lambda = 0.05;
    FfmModel m = FfmModel::init(cfg);
    std::uint64_t token1 = 1, token2 = 2;
    while (phi(token1, 0, 1, 8) == phi(token2, 1, 0, 8)) ++token2;
    const std::uint64_t r1 = phi(token1, 0, 1, 8);
    const std::uint64_t r2 = phi(token2, 1, 0, 8);
    m.weights[r1] = 0.4;
    m.weights[r2] = -0.2;
    const FeatureVector x = make_example(1, {{0, token1}, {1, token2}}, 1.7);

    // oracle, computed with plain scalar arithmetic
    const double s = 0.4 * -0.2;
    const double p = sigmoid(s);
    const double kappa = 1.7 * (p - 1.0);
    const double g1 = 0.05 * 0.4 + kappa * -0.2;
    const double g2 = 0.05 * -0.2 + kappa * 0.4;
    const double G1 = 1.0 + g1 * g1;
    const double G2 = 1.0 + g2 * g2;
    const double w1 = 0.4 - 0.3 * g1 / std::sqrt(G1);
    const double w2 = -0.2 - 0.3 * g2 / std::sqrt(G2);

    const double loss = sgd_step(m, x);
    CHECK(loss == doctest::Approx(1.7 * -std::log(p)).epsilon(1e-12));
    CHECK(m.weights[r1] == doctest::Approx(w1).epsilon(1e-12));
    CHECK(m.weights[r2] == doctest::Approx(w2).epsilon(1e-12));
    CHECK(m.adagrad[r1] == doctest::Approx(G1).epsilon(1e-12));
    CHECK(m.adagrad[r2] == doctest::Approx(G2).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint32_t F = 2 + static_cast<std::uint32_t>(rng.below(4));
        const std::uint32_t k = 1 + static_cast<std::uint32_t>(rng.below(4));
        const std::uint64_t d = 4 + rng.below(61);
        ModelConfig cfg = tiny_config(F, k, d, trial % 4 == 3 ? ModelKind::LrCross
                                                              : ModelKind::Ffm);
        cfg.l2_lambda = (trial % 2 == 0) ? 0.0 : 0.1;
        FfmModel m = FfmModel::init(cfg);
        for (double& w : m.weights) w = rng.uniform(-1.0, 1.0);
        for (double& g : m.adagrad) g = 1.0 + rng.uniform();

        FeatureVector x;
        x.label = rng.bernoulli(0.5) ? 1 : 0;
        x.weight = rng.uniform(0.5, 2.0);
        for (std::uint32_t f = 0; f < F; ++f)
            if (rng.bernoulli(0.8)) x.slots.push_back({f, rng.next_u64()});
        if (x.slots.size() < 2) x.slots = {{0, 1}, {1, 2}};

        const auto grads = loss_gradient(m, x);
        const double h = 1e-5;
        for (const RowGrad& rg : grads) {
            for (std::uint32_t t = 0; t < m.config.latent_dim; ++t) {
                const std::size_t at = rg.row * m.config.latent_dim + t;
                FfmModel probe = m;
                probe.weights[at] = m.weights[at] + h;
                const double up = regularized_example_loss(probe, x);
                probe.weights[at] = m.weights[at] - h;
                const double down = regularized_example_loss(probe, x);
                const double fd = (up - down) / (2.0 * h);
                const double denom = std::max({std::abs(rg.g[t]), std::abs(fd), 1e-6});
                CHECK(std::abs(rg.g[t] - fd) / denom < 1e-4);
            }
        }
    }
}

TEST_CASE("adagrad entries never decrease") {
    FfmModel m = FfmModel::init(tiny_config(4, 2, 32));
    Rng rng(123);
    std::vector<double> prev = m.adagrad;
    for (int step = 0; step < 50; ++step) {
        FeatureVector x;
        x.label = rng.bernoulli(0.4) ? 1 : 0;
        for (std::uint32_t f = 0; f < 4; ++f) x.slots.push_back({f, rng.below(30)});
        sgd_step(m, x);
        for (std::size_t i = 0; i < prev.size(); ++i) {
            REQUIRE(m.adagrad[i] >= prev[i]);
            REQUIRE(m.adagrad[i] >= 1.0);
        }
        prev = m.adagrad;
    }
}

TEST_CASE("identical seeds give identical update sequences") {
    const ModelConfig cfg = tiny_config(4, 2, 256);
    FfmModel a = FfmModel::init(cfg);
    FfmModel b = FfmModel::init(cfg);
    CHECK(bitwise_equal(a, b));
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        FeatureVector x;
        x.label = rng.bernoulli(0.5) ? 1 : 0;
        for (std::uint32_t f = 0; f < 4; ++f) x.slots.push_back({f, rng.below(50)});
        sgd_step(a, x);
        sgd_step(b, x);
    }
    CHECK(bitwise_equal(a, b));
}

TEST_CASE("non-finite gradient aborts with a numerical error") {
    FfmModel m = FfmModel::init(tiny_config(2, 1, 8));
    const std::uint64_t r1 = phi(1, 0, 1, 8);
    m.weights[r1] = std::numeric_limits<double>::infinity();
    FeatureVector x = make_example(0, {{0, 1}, {1, 2}});
    CHECK_THROWS_AS(sgd_step(m, x), NumericalError);
}

} // TEST_SUITE

TEST_SUITE("model serialization") {

TEST_CASE("round trip preserves every bit") {
    ModelConfig cfg = tiny_config(5, 3, 1024);
    cfg.l2_lambda = 0.01;
    cfg.init_scale = 0.7;
    FfmModel m = FfmModel::init(cfg);
    Rng rng(31);
    FeatureVector x;
    for (std::uint32_t f = 0; f < 5; ++f) x.slots.push_back({f, rng.below(100)});
    x.label = 1;
    sgd_step(m, x);
    m.trained_epochs = 3;

    std::stringstream buf;
    save_model(m, buf);
    const FfmModel restored = load_model(buf);
    CHECK(bitwise_equal(m, restored));
}

TEST_CASE("corrupted magic is rejected") {
    const FfmModel m = FfmModel::init(tiny_config(2, 1, 16));
    std::stringstream buf;
    save_model(m, buf);
    std::string bytes = buf.str();
    bytes[0] = 'X';
    std::stringstream bad(bytes);
    CHECK_THROWS_AS(load_model(bad), DataError);
}

TEST_CASE("truncated stream is rejected") {
    const FfmModel m = FfmModel::init(tiny_config(2, 2, 64));
    std::stringstream buf;
    save_model(m, buf);
    std::string bytes = buf.str();
    std::stringstream bad(bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_model(bad), DataError);
}

TEST_CASE("file size is header plus two tables") {
    ModelConfig cfg = tiny_config(10, 2, std::uint64_t(1) << 20);
    const FfmModel m = FfmModel::init(cfg);
    std::stringstream buf;
    save_model(m, buf);
    const std::size_t expect =
        kModelHeaderBytes + cfg.hash_space * cfg.latent_dim * 2 * sizeof(double);
    CHECK(buf.str().size() == expect);
}

} // TEST_SUITE

TEST_SUITE("model config") {

TEST_CASE("lr-cross forces one latent factor") {
    ModelConfig cfg = tiny_config(3, 4, 64, ModelKind::LrCross);
    const FfmModel m = FfmModel::init(cfg);
    CHECK(m.config.latent_dim == 1);
    CHECK(m.weights.size() == 64);
}

TEST_CASE("invalid configs are rejected") {
    ModelConfig cfg = tiny_config(3, 2, 64);
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config(0, 2, 64);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config(3, 2, 0);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config(3, 2, 64);
    cfg.l2_lambda = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("weight init spans [0, init_scale/sqrt(k)]") {
    ModelConfig cfg = tiny_config(4, 4, 4096);
    cfg.init_scale = 2.0;
    const FfmModel m = FfmModel::init(cfg);
    const double hi = 2.0 / std::sqrt(4.0);
    double max_seen = 0.0;
    for (const double w : m.weights) {
        REQUIRE(w >= 0.0);
        REQUIRE(w < hi);
        max_seen = std::max(max_seen, w);
    }
    CHECK(max_seen > 0.9 * hi);
    for (const double g : m.adagrad) REQUIRE(g == 1.0);
}

} // TEST_SUITE
