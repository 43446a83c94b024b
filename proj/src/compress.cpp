#include "bbs/compress.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "bbs/error.hpp"

namespace bbs {

namespace {

void check_target(int n_target) {
    if (n_target < 1 || n_target > kMaxPruned) {
        throw ConfigError("number of pruned columns must be in [1, " + std::to_string(kMaxPruned) +
                          "], got " + std::to_string(n_target));
    }
}

void check_group(std::span<const std::int8_t> values) {
    if (values.empty()) throw ConfigError("cannot compress an empty group");
}

// Compares bit b with the sign bit member by member, from bit 6 downwards.
int redundant_columns_of(std::span<const std::int8_t> values) {
    int r = 0;
    for (int b = 6; b >= 7 - kMaxRedundant; --b) {
        const bool same = std::all_of(values.begin(), values.end(), [b](std::int8_t v) {
            const auto u = static_cast<std::uint8_t>(v);
            return ((u >> b) & 1u) == ((u >> 7) & 1u);
        });
        if (!same) break;
        ++r;
    }
    return r;
}

BitMatrix stored_matrix(std::span<const int> high_parts, int width) {
    std::vector<std::int8_t> narrowed(high_parts.begin(), high_parts.end());
    return to_bitplanes(narrowed, width);
}

GroupPruneResult finish(CompressedGroup cg, std::span<const std::int8_t> original, WeightGroup approx) {
    GroupPruneResult r;
    for (std::size_t i = 0; i < original.size(); ++i) {
        const std::int64_t d = static_cast<std::int64_t>(approx[i]) - original[i];
        r.sse += d * d;
    }
    r.mse = static_cast<double>(r.sse) / static_cast<double>(original.size());
    r.compressed = std::move(cg);
    r.approx = std::move(approx);
    return r;
}

}  // namespace

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::Uncompressed: return "none";
        case Strategy::RoundedAvg: return "avg";
        case Strategy::ZeroPoint: return "zp";
    }
    return "unknown";
}

Strategy strategy_from_string(std::string_view s) {
    if (s == "none" || s == "uncompressed") return Strategy::Uncompressed;
    if (s == "avg" || s == "rounded-avg") return Strategy::RoundedAvg;
    if (s == "zp" || s == "zero-point") return Strategy::ZeroPoint;
    throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

int count_redundant_columns(const BitMatrix& g) {
    if (g.width != 8 || g.format != BitFormat::TwosComplement) {
        throw ConfigError("redundant-column detection needs an 8-bit two's complement group");
    }
    int r = 0;
    for (int b = 6; b >= 7 - kMaxRedundant; --b) {
        if (g.columns[static_cast<std::size_t>(b)] != g.columns[7]) break;
        ++r;
    }
    return r;
}

int count_redundant_columns(std::span<const std::int8_t> values) {
    return redundant_columns_of(values);
}

CompressedGroup make_uncompressed(std::span<const std::int8_t> values) {
    CompressedGroup cg;
    cg.stored = to_bitplanes(values, 8);
    cg.strategy = Strategy::Uncompressed;
    return cg;
}

GroupPruneResult compress_rounded_avg(std::span<const std::int8_t> values, int n_target) {
    check_target(n_target);
    check_group(values);

    const int r = std::min(redundant_columns_of(values), n_target);
    const int k = n_target - r;
    const int low_mask = (1 << k) - 1;

    std::int64_t low_sum = 0;
    for (auto v : values) low_sum += static_cast<std::uint8_t>(v) & low_mask;
    const auto len = static_cast<std::int64_t>(values.size());
    // round(mean) with halves going up; the mean is never negative
    const int constant = static_cast<int>(std::min<std::int64_t>((2 * low_sum + len) / (2 * len), low_mask));

    std::vector<int> high(values.size());
    WeightGroup approx(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        high[i] = values[i] >> k;
        approx[i] = static_cast<std::int8_t>((high[i] << k) + constant);
    }

    CompressedGroup cg;
    cg.stored = stored_matrix(high, 8 - n_target);
    cg.num_redundant = r;
    cg.constant = constant;
    cg.strategy = Strategy::RoundedAvg;
    cg.n_pruned = n_target;
    return finish(std::move(cg), values, std::move(approx));
}

int snap_shifted(int shifted, int k, int redundant, int constant) {
    if (k == 0) return shifted;
    const int step = 1 << k;
    const int top = (1 << (7 - redundant)) - step;
    const int lo = (shifted >> k) << k;
    const int hi = lo + step;
    const bool hi_ok = hi <= top && hi - constant <= 127;
    const bool lo_ok = lo - constant >= -128;
    if (hi_ok && lo_ok) return (shifted - lo <= hi - shifted) ? lo : hi;
    return hi_ok ? hi : lo;
}

GroupPruneResult evaluate_zero_point(std::span<const std::int8_t> values, int n_target, int constant) {
    check_target(n_target);
    check_group(values);

    std::vector<std::int8_t> shifted(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        shifted[i] = static_cast<std::int8_t>(std::clamp(values[i] + constant, -128, 127));
    }
    const int r = std::min(redundant_columns_of(shifted), n_target);
    const int k = n_target - r;

    std::vector<int> high(values.size());
    WeightGroup approx(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const int snapped = snap_shifted(shifted[i], k, r, constant);
        high[i] = snapped >> k;
        approx[i] = static_cast<std::int8_t>(snapped - constant);
    }

    CompressedGroup cg;
    cg.stored = stored_matrix(high, 8 - n_target);
    cg.num_redundant = r;
    cg.constant = constant;
    cg.strategy = Strategy::ZeroPoint;
    cg.n_pruned = n_target;
    return finish(std::move(cg), values, std::move(approx));
}

GroupPruneResult compress_zero_point(std::span<const std::int8_t> values, int n_target, int const_bits) {
    check_target(n_target);
    check_group(values);
    if (const_bits < 1 || const_bits > kConstantBits) {
        throw ConfigError("constant precision must be in [1, 6] bits, got " + std::to_string(const_bits));
    }

    // Only the error is needed during the search; the winner is rebuilt once.
    const int c_min = -(1 << (const_bits - 1));
    const int c_max = (1 << (const_bits - 1)) - 1;
    std::vector<std::int8_t> shifted(values.size());
    std::int64_t best_sse = std::numeric_limits<std::int64_t>::max();
    int best_c = c_min;
    for (int c = c_min; c <= c_max; ++c) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            shifted[i] = static_cast<std::int8_t>(std::clamp(values[i] + c, -128, 127));
        }
        const int r = std::min(redundant_columns_of(shifted), n_target);
        const int k = n_target - r;
        std::int64_t sse = 0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const std::int64_t d = snap_shifted(shifted[i], k, r, c) - c - values[i];
            sse += d * d;
        }
        if (sse < best_sse) {
            best_sse = sse;
            best_c = c;
        }
    }
    return evaluate_zero_point(values, n_target, best_c);
}

void validate(const CompressedGroup& cg) {
    const auto fail = [](const std::string& what) { throw FormatError("corrupt compressed group: " + what); };
    if (cg.n_pruned < 0 || cg.n_pruned > kMaxPruned) fail("n_pruned " + std::to_string(cg.n_pruned));
    if (cg.num_redundant < 0 || cg.num_redundant > std::min(kMaxRedundant, cg.n_pruned)) {
        fail("redundant column count " + std::to_string(cg.num_redundant));
    }
    if (cg.stored.format != BitFormat::TwosComplement || cg.stored.width != 8 - cg.n_pruned ||
        cg.stored.columns.size() != static_cast<std::size_t>(cg.stored.width)) {
        fail("stored width does not match n_pruned");
    }
    for (const auto& col : cg.stored.columns) {
        if (col.size() != cg.stored.group_size) fail("column length mismatch");
    }
    const int k = cg.generated_columns();
    switch (cg.strategy) {
        case Strategy::Uncompressed:
            if (cg.n_pruned != 0 || cg.constant != 0) fail("uncompressed group carries metadata");
            break;
        case Strategy::RoundedAvg:
            if (cg.constant < 0 || cg.constant >= (1 << k)) {
                fail("rounded-average constant " + std::to_string(cg.constant) + " out of range for " +
                     std::to_string(k) + " generated columns");
            }
            break;
        case Strategy::ZeroPoint:
            if (cg.constant < -(1 << (kConstantBits - 1)) || cg.constant >= (1 << (kConstantBits - 1))) {
                fail("zero-point constant " + std::to_string(cg.constant) + " out of range");
            }
            break;
        default: fail("unknown strategy tag");
    }
}

WeightGroup decompress(const CompressedGroup& cg) {
    validate(cg);
    const auto high = from_bitplanes(cg.stored);
    const int k = cg.generated_columns();
    const int offset = cg.strategy == Strategy::ZeroPoint ? -cg.constant : cg.constant;
    WeightGroup out(high.size());
    for (std::size_t i = 0; i < high.size(); ++i) {
        const int v = high[i] * (1 << k) + offset;
        if (v < -128 || v > 127) {
            throw FormatError("compressed group reconstructs " + std::to_string(v) + " outside int8");
        }
        out[i] = static_cast<std::int8_t>(v);
    }
    return out;
}

CompressedGroup pad_group(CompressedGroup cg, std::size_t group_size) {
    if (group_size < cg.stored.group_size) throw ShapeError("cannot pad a group to a smaller size");
    for (auto& col : cg.stored.columns) col.resize(group_size);
    cg.stored.group_size = group_size;
    return cg;
}

}  // namespace bbs
