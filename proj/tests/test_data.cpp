#include "doctest.h"

#include <cmath>
#include <sstream>

#include "ffmkit/data.hpp"
#include "ffmkit/metrics.hpp"
#include "ffmkit/rng.hpp"
#include "test_util.hpp"

using namespace ffm;
using namespace ffm::testing;

TEST_SUITE("parse") {

TEST_CASE("basic line") {
    const FeatureVector x = parse_example_line("1 0:12:1 1:7:1", 1, 4);
    CHECK(x.label == 1);
    CHECK(x.weight == 1.0);
    CHECK(x.cost == 0.0);
    CHECK(x.reward == 0.0);
    REQUIRE(x.slots.size() == 2);
    CHECK(x.slots[0] == Slot{0, 12});
    CHECK(x.slots[1] == Slot{1, 7});
}

TEST_CASE("metadata fields") {
    const FeatureVector x =
        parse_example_line("0 weight=2.5 cost=0.125 reward=3 2:9:1", 1, 4);
    CHECK(x.label == 0);
    CHECK(x.weight == 2.5);
    CHECK(x.cost == 0.125);
    CHECK(x.reward == 3.0);
    REQUIRE(x.slots.size() == 1);
}

TEST_CASE("empty stream yields nothing") {
    std::istringstream in("");
    std::size_t count = 0;
    parse_examples(in, 4, [&](FeatureVector&&) { ++count; });
    CHECK(count == 0);
}

TEST_CASE("malformed input names the line") {
    const auto expect_error = [](const char* text, const char* needle) {
        std::istringstream in(text);
        try {
            parse_examples(in, 3, [](FeatureVector&&) {});
            FAIL_CHECK("expected DataError for: " << text);
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_error("1 0:1:1\n2 0:1:1", "line 2");
    expect_error("x 0:1:1", "label");
    expect_error("1 abc", "malformed");
    expect_error("1 0:5:2", "must be 1");
    expect_error("1 3:5:1", "out of range");
    expect_error("1 0:5:1 0:6:1", "duplicate field");
    expect_error("1 weight=0 0:5:1", "weight");
    expect_error("1 0:5:1 weight=2", "precede");
}

TEST_CASE("write and parse round-trip 1000 examples") {
    Rng rng(888);
    Dataset ds;
    ds.num_fields = 6;
    for (int i = 0; i < 1000; ++i) {
        FeatureVector x;
        x.label = rng.bernoulli(0.4) ? 1 : 0;
        if (rng.bernoulli(0.3)) x.weight = rng.uniform(0.1, 5.0);
        if (rng.bernoulli(0.3)) {
            x.cost = rng.uniform(0.0, 2.0);
            x.reward = rng.uniform(0.0, 4.0);
        }
        for (std::uint32_t f = 0; f < 6; ++f)
            if (rng.bernoulli(0.8)) x.slots.push_back({f, rng.next_u64()});
        ds.examples.push_back(std::move(x));
    }

    std::ostringstream out;
    for (const FeatureVector& x : ds.examples) write_example(out, x);
    std::istringstream in(out.str());
    std::vector<FeatureVector> back;
    parse_examples(in, 6, [&](FeatureVector&& x) { back.push_back(std::move(x)); });

    REQUIRE(back.size() == ds.examples.size());
    for (std::size_t i = 0; i < back.size(); ++i) REQUIRE(back[i] == ds.examples[i]);
}

} // TEST_SUITE

TEST_SUITE("blocks") {

TEST_CASE("even split") {
    Dataset ds;
    ds.num_fields = 2;
    ds.examples.resize(90'000, make_example(0, {{0, 1}, {1, 2}}));
    const BlockedDataset b = split_blocks(std::move(ds), 90);
    REQUIRE(b.blocks.size() == 90);
    for (const BlockRange& r : b.blocks) CHECK(r.size() == 1000);
}

TEST_CASE("remainder goes to the leading blocks") {
    Dataset ds;
    ds.num_fields = 2;
    ds.examples.resize(10, make_example(0, {{0, 1}}));
    const BlockedDataset b = split_blocks(std::move(ds), 3);
    REQUIRE(b.blocks.size() == 3);
    CHECK(b.blocks[0].size() == 4);
    CHECK(b.blocks[1].size() == 3);
    CHECK(b.blocks[2].size() == 3);
}

TEST_CASE("partition tiles the sequence exactly") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.below(500);
        const std::uint32_t k = 1 + static_cast<std::uint32_t>(rng.below(n));
        Dataset ds;
        ds.num_fields = 2;
        for (std::size_t i = 0; i < n; ++i) {
            FeatureVector x = make_example(0, {{0, i}});
            ds.examples.push_back(x);
        }
        const BlockedDataset b = split_blocks(std::move(ds), k);
        REQUIRE(b.blocks.size() == k);
        std::size_t at = 0;
        for (const BlockRange& r : b.blocks) {
            REQUIRE(r.begin == at);
            at = r.end;
        }
        REQUIRE(at == n);
        // order preserved
        for (std::size_t i = 0; i < n; ++i) REQUIRE(b.examples[i].slots[0].value == i);
    }
}

TEST_CASE("bad block counts are rejected") {
    Dataset ds;
    ds.num_fields = 2;
    ds.examples.resize(5, make_example(0, {{0, 1}}));
    CHECK_THROWS_AS(split_blocks(std::move(ds), 0), ConfigError);
    Dataset ds2;
    ds2.num_fields = 2;
    ds2.examples.resize(5, make_example(0, {{0, 1}}));
    CHECK_THROWS_AS(split_blocks(std::move(ds2), 6), ConfigError);
}

} // TEST_SUITE

TEST_SUITE("rolling_steps") {

namespace {
BlockedDataset blocks_of(std::uint32_t n_blocks) {
    Dataset ds;
    ds.num_fields = 2;
    ds.examples.resize(n_blocks * 10, make_example(0, {{0, 1}, {1, 2}}));
    return split_blocks(std::move(ds), n_blocks);
}
} // namespace

TEST_CASE("the 90-block protocol") {
    const BlockedDataset b = blocks_of(90);
    RollingWindow w;
    w.train_blocks = 44;
    w.val_blocks = 1;
    w.test_blocks = 1;
    const auto steps = rolling_steps(b, w);
    REQUIRE(steps.size() == 45);
    CHECK(steps.front().test_begin == 45);  // the 46th block
    CHECK(steps.front().test_end == 46);
    CHECK(steps.back().test_begin == 89);   // ends at the 90th block
    CHECK(steps.back().test_end == 90);
}

TEST_CASE("three blocks admit exactly one step") {
    const BlockedDataset b = blocks_of(3);
    const auto steps = rolling_steps(b, RollingWindow{});
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].train_begin == 0);
    CHECK(steps[0].val_begin == 1);
    CHECK(steps[0].test_begin == 2);
}

TEST_CASE("online tiling: consecutive steps do not overlap block roles") {
    const BlockedDataset b = blocks_of(8);
    const auto steps = rolling_steps(b, RollingWindow{});  // 1/1/1, step 1
    REQUIRE(steps.size() == 6);
    for (std::size_t t = 0; t < steps.size(); ++t) {
        CHECK(steps[t].train_begin == t);
        CHECK(steps[t].val_begin == t + 1);
        CHECK(steps[t].test_begin == t + 2);
    }
}

TEST_CASE("window parts never overlap and step arithmetic holds") {
    Rng rng(14);
    for (int trial = 0; trial < 30; ++trial) {
        RollingWindow w;
        w.train_blocks = 1 + static_cast<std::uint32_t>(rng.below(6));
        w.val_blocks = 1 + static_cast<std::uint32_t>(rng.below(3));
        w.test_blocks = 1 + static_cast<std::uint32_t>(rng.below(3));
        const std::uint32_t span = w.train_blocks + w.val_blocks + w.test_blocks;
        const std::uint32_t n = span + static_cast<std::uint32_t>(rng.below(10));
        const auto steps = rolling_steps(blocks_of(n), w);
        REQUIRE(steps.size() == n - span + 1);
        for (const RollingStep& s : steps) {
            REQUIRE(s.train_end == s.val_begin);
            REQUIRE(s.val_end == s.test_begin);
            REQUIRE(s.train_begin < s.train_end);
            REQUIRE(s.test_end <= n);
        }
    }
}

TEST_CASE("insufficient blocks fail") {
    RollingWindow w;
    w.train_blocks = 44;
    CHECK_THROWS_AS(rolling_steps(blocks_of(10), w), ConfigError);
}

} // TEST_SUITE

TEST_SUITE("gen_synthetic") {

TEST_CASE("same seed means the same byte stream") {
    SyntheticSpec spec;
    spec.num_fields = 5;
    spec.cardinality = 20;
    spec.num_blocks = 4;
    spec.block_size = 200;
    spec.drift_rate = 0.05;
    spec.seed = 9;
    spec.with_values = true;
    const SyntheticData a = gen_synthetic(spec);
    const SyntheticData b = gen_synthetic(spec);

    std::ostringstream sa, sb;
    for (const FeatureVector& x : a.data.examples) write_example(sa, x);
    for (const FeatureVector& x : b.data.examples) write_example(sb, x);
    CHECK(sa.str() == sb.str());
    CHECK(a.true_proba == b.true_proba);

    spec.seed = 10;
    const SyntheticData c = gen_synthetic(spec);
    std::ostringstream sc;
    for (const FeatureVector& x : c.data.examples) write_example(sc, x);
    CHECK(sa.str() != sc.str());
}

TEST_CASE("planted model beats the constant predictor on its own data") {
    SyntheticSpec spec;
    spec.num_fields = 6;
    spec.cardinality = 30;
    spec.num_blocks = 1;
    spec.block_size = 20'000;
    spec.seed = 4;
    const SyntheticData d = gen_synthetic(spec);

    std::vector<std::uint8_t> labels(d.data.examples.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = d.data.examples[i].label;
    const LossSummary planted = weighted_log_loss(d.true_proba, labels);
    // the constant predictor's loss, from the same tallies
    const double pbar = planted.base_rate();
    const double const_ll =
        -planted.positive_weight * std::log(pbar) -
        (planted.weight_sum - planted.positive_weight) * std::log(1.0 - pbar);
    CHECK(planted.ll_sum < const_ll);
}

TEST_CASE("no drift keeps blocks statistically alike") {
    SyntheticSpec spec;
    spec.num_fields = 6;
    spec.cardinality = 25;
    spec.num_blocks = 8;
    spec.block_size = 4000;
    spec.drift_rate = 0.0;
    spec.seed = 12;
    const SyntheticData d = gen_synthetic(spec);

    // the planted model stands in for a converged one: per-block NLL should
    // wobble only with sampling noise
    double lo = 1e300, hi = -1e300;
    for (const BlockRange& blk : d.data.blocks) {
        std::vector<double> p(d.true_proba.begin() + blk.begin,
                              d.true_proba.begin() + blk.end);
        std::vector<std::uint8_t> y(blk.size());
        for (std::size_t i = 0; i < blk.size(); ++i)
            y[i] = d.data.examples[blk.begin + i].label;
        const double v = nll(p, y);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(hi - lo < 0.08);
}

TEST_CASE("drift moves the planted model between blocks") {
    SyntheticSpec spec;
    spec.num_fields = 6;
    spec.cardinality = 25;
    spec.num_blocks = 2;
    spec.block_size = 50;
    spec.drift_rate = 0.5;
    spec.seed = 5;
    const SyntheticData with = gen_synthetic(spec);
    spec.drift_rate = 0.0;
    const SyntheticData without = gen_synthetic(spec);
    // identical first blocks, diverging afterwards
    bool first_equal = true, second_equal = true;
    for (std::size_t i = 0; i < 50; ++i)
        first_equal &= with.data.examples[i] == without.data.examples[i];
    for (std::size_t i = 50; i < 100; ++i)
        second_equal &= with.data.examples[i] == without.data.examples[i];
    CHECK(first_equal);
    CHECK(!second_equal);
}

TEST_CASE("spec validation") {
    SyntheticSpec spec;
    spec.num_fields = 1;
    CHECK_THROWS_AS(gen_synthetic(spec), ConfigError);
    spec = SyntheticSpec{};
    spec.base_rate = 0.0;
    CHECK_THROWS_AS(gen_synthetic(spec), ConfigError);
    spec = SyntheticSpec{};
    spec.cardinalities = {10, 10};  // wrong length for 8 fields
    CHECK_THROWS_AS(gen_synthetic(spec), ConfigError);
}

} // TEST_SUITE
