#include "ffmkit/data.hpp"

#include <zlib.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>

#include "ffmkit/rng.hpp"

namespace ffm {

namespace {

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
    throw DataError("line " + std::to_string(line_no) + ": " + what);
}

// Gzip-transparent line reader (zlib reads plain files as-is). Tracks the
// uncompressed byte offset of each line for block index sidecars.
class LineReader {
public:
    explicit LineReader(const std::string& path) {
        f_ = gzopen(path.c_str(), "rb");
        if (f_ == nullptr) throw DataError("cannot open: " + path);
        gzbuffer(f_, 1 << 17);
    }
    ~LineReader() {
        if (f_ != nullptr) gzclose(f_);
    }
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    bool next(std::string& line) {
        line_offset_ = consumed_;
        line.clear();
        while (true) {
            if (pos_ == len_) {
                const int got = gzread(f_, buf_, sizeof(buf_));
                if (got < 0) throw DataError("read error (corrupt gzip stream?)");
                if (got == 0) return !line.empty();
                pos_ = 0;
                len_ = static_cast<std::size_t>(got);
            }
            const char* nl = static_cast<const char*>(
                std::memchr(buf_ + pos_, '\n', len_ - pos_));
            if (nl == nullptr) {
                line.append(buf_ + pos_, len_ - pos_);
                consumed_ += len_ - pos_;
                pos_ = len_;
                continue;
            }
            const std::size_t span = static_cast<std::size_t>(nl - (buf_ + pos_));
            line.append(buf_ + pos_, span);
            consumed_ += span + 1;
            pos_ += span + 1;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return true;
        }
    }

    std::uint64_t line_offset() const { return line_offset_; }

private:
    gzFile f_ = nullptr;
    char buf_[1 << 16];
    std::size_t pos_ = 0, len_ = 0;
    std::uint64_t consumed_ = 0, line_offset_ = 0;
};

bool parse_u64(const char*& p, std::uint64_t& out) {
    if (*p < '0' || *p > '9') return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtoull(p, &end, 10);
    if (errno != 0 || end == p) return false;
    p = end;
    return true;
}

bool parse_f64(const char*& p, double& out) {
    errno = 0;
    char* end = nullptr;
    out = std::strtod(p, &end);
    if (errno != 0 || end == p) return false;
    p = end;
    return true;
}

void skip_spaces(const char*& p) {
    while (*p == ' ' || *p == '\t') ++p;
}

} // namespace

FeatureVector parse_example_line(const std::string& line, std::size_t line_no,
                                 std::uint32_t num_fields) {
    FeatureVector x;
    const char* p = line.c_str();
    skip_spaces(p);

    if (*p == '0' && (p[1] == ' ' || p[1] == '\t' || p[1] == '\0')) {
        x.label = 0;
        ++p;
    } else if (*p == '1' && (p[1] == ' ' || p[1] == '\t' || p[1] == '\0')) {
        x.label = 1;
        ++p;
    } else {
        line_error(line_no, "label must be 0 or 1");
    }

    bool seen_slot = false;
    while (true) {
        skip_spaces(p);
        if (*p == '\0') break;

        const char* tok = p;
        if (std::strncmp(tok, "weight=", 7) == 0 || std::strncmp(tok, "cost=", 5) == 0 ||
            std::strncmp(tok, "reward=", 7) == 0) {
            if (seen_slot) line_error(line_no, "metadata must precede slots");
            const bool is_weight = tok[0] == 'w';
            const bool is_cost = tok[0] == 'c';
            p += is_weight ? 7 : (is_cost ? 5 : 7);
            double v;
            if (!parse_f64(p, v) || !std::isfinite(v))
                line_error(line_no, "bad numeric value in metadata");
            if (is_weight) {
                if (!(v > 0.0)) line_error(line_no, "weight must be > 0");
                x.weight = v;
            } else if (is_cost) {
                if (v < 0.0) line_error(line_no, "cost must be >= 0");
                x.cost = v;
            } else {
                if (v < 0.0) line_error(line_no, "reward must be >= 0");
                x.reward = v;
            }
            continue;
        }

        // slot: field:value:1
        std::uint64_t field, value, one;
        if (!parse_u64(p, field) || *p != ':') line_error(line_no, "malformed slot");
        ++p;
        if (!parse_u64(p, value) || *p != ':') line_error(line_no, "malformed slot");
        ++p;
        if (!parse_u64(p, one)) line_error(line_no, "malformed slot");
        if (one != 1) line_error(line_no, "slot value must be 1 (categorical data only)");
        if (*p != '\0' && *p != ' ' && *p != '\t') line_error(line_no, "malformed slot");
        if (field >= num_fields)
            line_error(line_no, "field id " + std::to_string(field) + " out of range (F=" +
                                    std::to_string(num_fields) + ")");
        for (const Slot& s : x.slots)
            if (s.field == field)
                line_error(line_no, "duplicate field " + std::to_string(field));
        x.slots.push_back({static_cast<std::uint32_t>(field), value});
        seen_slot = true;
    }
    return x;
}

void parse_examples(std::istream& in, std::uint32_t num_fields,
                    const std::function<void(FeatureVector&&)>& sink) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        sink(parse_example_line(line, line_no, num_fields));
    }
}

Dataset read_dataset(const std::string& path, std::uint32_t num_fields) {
    Dataset ds;
    ds.num_fields = num_fields;
    LineReader reader(path);
    std::string line;
    std::size_t line_no = 0;
    while (reader.next(line)) {
        ++line_no;
        if (line.empty()) continue;
        ds.examples.push_back(parse_example_line(line, line_no, num_fields));
    }
    return ds;
}

void write_example(std::ostream& out, const FeatureVector& x) {
    char buf[64];
    out << (x.label ? '1' : '0');
    if (x.weight != 1.0) {
        std::snprintf(buf, sizeof(buf), " weight=%.17g", x.weight);
        out << buf;
    }
    if (x.cost != 0.0) {
        std::snprintf(buf, sizeof(buf), " cost=%.17g", x.cost);
        out << buf;
    }
    if (x.reward != 0.0) {
        std::snprintf(buf, sizeof(buf), " reward=%.17g", x.reward);
        out << buf;
    }
    for (const Slot& s : x.slots) out << ' ' << s.field << ':' << s.value << ":1";
    out << '\n';
}

void write_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    for (const FeatureVector& x : ds.examples) write_example(f, x);
    if (!f) throw DataError("write failed: " + path);
}

std::span<const FeatureVector> BlockedDataset::block_span(std::uint32_t first,
                                                          std::uint32_t last) const {
    if (first >= last || last > blocks.size())
        throw ConfigError("block range out of bounds");
    const std::size_t lo = blocks[first].begin;
    const std::size_t hi = blocks[last - 1].end;
    return {examples.data() + lo, hi - lo};
}

BlockedDataset split_blocks(Dataset ds, std::uint32_t n_blocks) {
    if (n_blocks < 1) throw ConfigError("split_blocks: n_blocks must be >= 1");
    if (n_blocks > ds.examples.size())
        throw ConfigError("split_blocks: n_blocks exceeds example count");

    BlockedDataset out;
    out.num_fields = ds.num_fields;
    out.examples = std::move(ds.examples);
    const std::size_t n = out.examples.size();
    const std::size_t base = n / n_blocks;
    const std::size_t extra = n % n_blocks;  // first `extra` blocks get one more
    std::size_t at = 0;
    for (std::uint32_t b = 0; b < n_blocks; ++b) {
        const std::size_t len = base + (b < extra ? 1 : 0);
        out.blocks.push_back({at, at + len});
        at += len;
    }
    return out;
}

void write_block_index(const std::string& data_path, std::uint32_t num_fields,
                       std::uint32_t n_blocks, const std::string& csv_path) {
    if (n_blocks < 1) throw ConfigError("write_block_index: n_blocks must be >= 1");

    // pass 1: count examples
    std::size_t count = 0;
    {
        LineReader reader(data_path);
        std::string line;
        while (reader.next(line))
            if (!line.empty()) ++count;
    }
    if (n_blocks > count)
        throw ConfigError("write_block_index: n_blocks exceeds example count");

    // pass 2: validate lines and record block start offsets
    const std::size_t base = count / n_blocks;
    const std::size_t extra = count % n_blocks;
    std::ofstream csv(csv_path);
    if (!csv) throw DataError("cannot open for writing: " + csv_path);
    csv << "block_id,byte_offset,count\n";

    LineReader reader(data_path);
    std::string line;
    std::size_t line_no = 0, seen = 0, block = 0;
    std::size_t block_len = base + (0 < extra ? 1 : 0);
    while (reader.next(line)) {
        ++line_no;
        if (line.empty()) continue;
        parse_example_line(line, line_no, num_fields);
        if (seen == 0) csv << block << ',' << reader.line_offset() << ',' << block_len << '\n';
        ++seen;
        if (seen == block_len) {
            seen = 0;
            ++block;
            block_len = base + (block < extra ? 1 : 0);
        }
    }
    if (!csv) throw DataError("write failed: " + csv_path);
}

std::vector<RollingStep> rolling_steps(const BlockedDataset& data,
                                       const RollingWindow& window) {
    if (window.train_blocks < 1 || window.val_blocks < 1 || window.test_blocks < 1)
        throw ConfigError("rolling window parts must each be >= 1 block");
    if (window.step < 1) throw ConfigError("rolling window step must be >= 1");
    const std::uint32_t span = window.train_blocks + window.val_blocks + window.test_blocks;
    const std::uint32_t n = static_cast<std::uint32_t>(data.blocks.size());
    if (n < span)
        throw ConfigError("rolling_steps: " + std::to_string(n) + " blocks < window of " +
                          std::to_string(span));

    std::vector<RollingStep> steps;
    for (std::uint32_t start = 0; start + span <= n; start += window.step) {
        RollingStep s;
        s.train_begin = start;
        s.train_end = start + window.train_blocks;
        s.val_begin = s.train_end;
        s.val_end = s.val_begin + window.val_blocks;
        s.test_begin = s.val_end;
        s.test_end = s.test_begin + window.test_blocks;
        steps.push_back(s);
    }
    return steps;
}

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
    if (spec.num_fields < 2)
        throw ConfigError("gen_synthetic: need at least 2 fields for pairwise structure");
    if (spec.num_blocks < 1 || spec.block_size < 1)
        throw ConfigError("gen_synthetic: need at least one non-empty block");
    if (!(spec.base_rate > 0.0 && spec.base_rate < 1.0))
        throw ConfigError("gen_synthetic: base_rate in (0,1)");
    if (spec.planted_dim < 1) throw ConfigError("gen_synthetic: planted_dim >= 1");

    std::vector<std::uint32_t> cards = spec.cardinalities;
    if (cards.empty()) cards.assign(spec.num_fields, spec.cardinality);
    if (cards.size() != spec.num_fields)
        throw ConfigError("gen_synthetic: cardinalities size must match num_fields");
    for (std::uint32_t c : cards)
        if (c < 1) throw ConfigError("gen_synthetic: cardinality must be >= 1");

    const std::uint32_t F = spec.num_fields;
    const std::uint32_t kp = spec.planted_dim;
    const double pairs = 0.5 * F * (F - 1);
    // dot of two iid N(0, s^2)^kp vectors has variance kp*s^4; aim the summed
    // logit at target_logit_std
    const double sigma = std::pow(spec.target_logit_std * spec.target_logit_std /
                                      (pairs * kp),
                                  0.25);
    const double bias = std::log(spec.base_rate / (1.0 - spec.base_rate));

    Rng rng(mix_seed(spec.seed, 0x5eed));

    std::vector<std::vector<double>> embed(F);  // per field: card * kp entries
    for (std::uint32_t f = 0; f < F; ++f) {
        embed[f].resize(static_cast<std::size_t>(cards[f]) * kp);
        for (double& e : embed[f]) e = sigma * rng.gaussian();
    }

    SyntheticData out;
    out.data.num_fields = F;
    const std::size_t total = static_cast<std::size_t>(spec.num_blocks) * spec.block_size;
    out.data.examples.reserve(total);
    out.true_proba.reserve(total);

    std::vector<std::uint32_t> vals(F);
    for (std::uint32_t b = 0; b < spec.num_blocks; ++b) {
        const std::size_t block_begin = out.data.examples.size();
        for (std::uint32_t i = 0; i < spec.block_size; ++i) {
            FeatureVector x;
            x.slots.reserve(F);
            for (std::uint32_t f = 0; f < F; ++f) {
                vals[f] = static_cast<std::uint32_t>(rng.below(cards[f]));
                x.slots.push_back({f, vals[f]});
            }
            double score = bias;
            for (std::uint32_t f1 = 0; f1 < F; ++f1) {
                const double* e1 = embed[f1].data() + static_cast<std::size_t>(vals[f1]) * kp;
                for (std::uint32_t f2 = f1 + 1; f2 < F; ++f2) {
                    const double* e2 =
                        embed[f2].data() + static_cast<std::size_t>(vals[f2]) * kp;
                    for (std::uint32_t t = 0; t < kp; ++t) score += e1[t] * e2[t];
                }
            }
            const double p = 1.0 / (1.0 + std::exp(-score));
            x.label = rng.bernoulli(p) ? 1 : 0;
            if (spec.with_values) {
                x.reward = rng.uniform(0.5, 1.5);
                x.cost = rng.uniform(0.0, 0.8) * x.reward;
            }
            out.true_proba.push_back(p);
            out.data.examples.push_back(std::move(x));
        }
        out.data.blocks.push_back({block_begin, out.data.examples.size()});

        if (spec.drift_rate > 0.0 && b + 1 < spec.num_blocks) {
            for (std::uint32_t f = 0; f < F; ++f)
                for (double& e : embed[f]) e += spec.drift_rate * sigma * rng.gaussian();
        }
    }
    return out;
}

} // namespace ffm
