#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bbs/compress.hpp"

namespace bbs::pe {

struct PeConfig {
    std::size_t group_size = 16;
    std::size_t subgroup_size = 8;
    std::size_t max_selected = 4;
    int precision = 8;
};

inline constexpr std::size_t kSubgroupSize = 8;
inline constexpr std::size_t kLanesPerSubgroup = 4;
/// Each lane's mux sees this many consecutive column bits.
inline constexpr std::size_t kMuxWidth = 5;

/// Control signals for one 8-wide sub-group in one cycle.
struct SchedulerOutput {
    std::array<std::uint8_t, kLanesPerSubgroup> sel{};
    std::array<bool, kLanesPerSubgroup> val{};
    bool inverted = false;
    int col_idx = 0;

    std::size_t valid_lanes() const;
};

/// Models the chain of four priority encoders: the column is inverted when
/// ones outnumber zeros, then encoder m looks at bits m..m+4, takes the lowest
/// set bit not claimed by an earlier encoder, or raises val = 0.
SchedulerOutput schedule_subgroup(std::uint8_t column, int col_idx = 0);

/// Bit-serial partial sum of one sub-group column: the activations under one
/// bits, computed either directly or as sum_a minus the activations under
/// zero bits, whichever the scheduler picked.
std::int64_t subgroup_dot(std::uint8_t column, std::span<const std::int32_t> acts, std::int64_t sum_a);

/// Significances visited for a compressed group, highest first: 7 - r down to
/// 7 - r - (stored columns - 1).
std::vector<int> col_idx_sequence(const CompressedGroup& cg);

/// Dot product of a compressed group with int8 activations as the PE computes
/// it: stored columns bit-serially per sub-group (top column weighted
/// negatively), plus the constant times the activation sum.
std::int64_t pe_dot(const CompressedGroup& cg, std::span<const std::int8_t> acts);

/// Cycles a PE spends on one group: 8 when uncompressed, otherwise
/// max(2, 8 - n_pruned).
int pe_cycles(const CompressedGroup& cg);
int pe_cycles(Strategy strategy, int n_pruned);

/// Byte holding bits [start, start + 8) of a column (missing members are 0).
std::uint8_t subgroup_bits(const BitVector& column, std::size_t start);

}  // namespace bbs::pe
