#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ffmkit/types.hpp"

namespace ffm {

struct Dataset {
    std::uint32_t num_fields = 0;
    std::vector<FeatureVector> examples;
};

// Half-open range of example indices.
struct BlockRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool operator==(const BlockRange&) const = default;
};

// Temporally ordered, non-overlapping contiguous blocks over one example
// sequence.
struct BlockedDataset {
    std::uint32_t num_fields = 0;
    std::vector<FeatureVector> examples;
    std::vector<BlockRange> blocks;

    // Examples of blocks [first, last) as one contiguous span.
    std::span<const FeatureVector> block_span(std::uint32_t first, std::uint32_t last) const;
};

struct RollingWindow {
    std::uint32_t train_blocks = 1;
    std::uint32_t val_blocks = 1;
    std::uint32_t test_blocks = 1;
    std::uint32_t step = 1;
};

// Block-index ranges of one rolling step; [begin, end) each, pairwise
// disjoint and adjacent in train/val/test order.
struct RollingStep {
    std::uint32_t train_begin = 0, train_end = 0;
    std::uint32_t val_begin = 0, val_end = 0;
    std::uint32_t test_begin = 0, test_end = 0;
};

// One example per line: `label[ weight=w][ cost=c][ reward=v] f:v:1 ...`.
// Lines are parsed to valid FeatureVectors; malformed input raises DataError
// naming the 1-based line number.
FeatureVector parse_example_line(const std::string& line, std::size_t line_no,
                                 std::uint32_t num_fields);

// Streaming parse; blank lines are skipped.
void parse_examples(std::istream& in, std::uint32_t num_fields,
                    const std::function<void(FeatureVector&&)>& sink);

// Gzip-transparent file read (plain text or .gz, detected by content).
Dataset read_dataset(const std::string& path, std::uint32_t num_fields);

void write_example(std::ostream& out, const FeatureVector& x);
void write_dataset(const std::string& path, const Dataset& ds);

// Contiguous order-preserving partition; sizes differ by at most one, larger
// blocks first. Throws ConfigError when n_blocks < 1 or exceeds the example
// count.
BlockedDataset split_blocks(Dataset ds, std::uint32_t n_blocks);

// Block index sidecar for a dataset file: CSV of
// (block_id, byte_offset, count), offsets into the uncompressed stream.
void write_block_index(const std::string& data_path, std::uint32_t num_fields,
                       std::uint32_t n_blocks, const std::string& csv_path);

// All window positions over the blocks, shifting by window.step; throws
// ConfigError when the dataset has fewer blocks than one window.
std::vector<RollingStep> rolling_steps(const BlockedDataset& data,
                                       const RollingWindow& window);

// Planted-model synthetic stream: latent embeddings per (field, value) drive
// a pairwise-interaction logit, labels are Bernoulli draws, and a per-block
// random walk on the embeddings produces concept drift.
struct SyntheticSpec {
    std::uint32_t num_fields = 8;
    std::uint32_t cardinality = 100;            // default for every field
    std::vector<std::uint32_t> cardinalities;   // optional per-field override
    std::uint32_t num_blocks = 1;
    std::uint32_t block_size = 1000;
    double drift_rate = 0.0;   // embedding walk step per block, relative to init scale
    std::uint64_t seed = 1;
    std::uint32_t planted_dim = 4;
    double target_logit_std = 1.5;
    double base_rate = 0.3;
    bool with_values = false;  // also emit per-example cost and reward
};

struct SyntheticData {
    BlockedDataset data;
    std::vector<double> true_proba;  // the planted model's probabilities
};

SyntheticData gen_synthetic(const SyntheticSpec& spec);

} // namespace ffm
