#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bbs/bitplane.hpp"

namespace bbs {

using WeightGroup = std::vector<std::int8_t>;

enum class Strategy : std::uint8_t { Uncompressed = 0, RoundedAvg = 1, ZeroPoint = 2 };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

/// Widest constant the 6-bit metadata field can hold.
inline constexpr int kConstantBits = 6;
/// At most this many redundant columns are recorded in metadata.
inline constexpr int kMaxRedundant = 3;
/// At most this many columns may be pruned from an 8-bit group.
inline constexpr int kMaxPruned = 6;

/// One weight group after binary pruning.
///
/// `stored` keeps the 8 - n_pruned surviving columns as a two's complement
/// matrix. The k = n_pruned - num_redundant generated columns are implied by
/// `constant`: for rounded averaging they are the constant's bits, for
/// zero-point shifting they are zero and the constant is the shift that gets
/// subtracted on reconstruction.
struct CompressedGroup {
    BitMatrix stored;
    int num_redundant = 0;
    int constant = 0;
    Strategy strategy = Strategy::Uncompressed;
    int n_pruned = 0;

    std::size_t group_size() const { return stored.group_size; }
    int generated_columns() const { return n_pruned - num_redundant; }

    friend bool operator==(const CompressedGroup&, const CompressedGroup&) = default;
};

struct GroupPruneResult {
    CompressedGroup compressed;
    std::int64_t sse = 0;  ///< sum of squared errors against the input
    double mse = 0.0;      ///< sse / group size
    WeightGroup approx;    ///< decompressed values
};

/// Columns directly below the MSB column that equal it, capped at 3.
/// Requires an 8-bit two's complement matrix.
int count_redundant_columns(const BitMatrix& g);
int count_redundant_columns(std::span<const std::int8_t> values);

/// Stores the group verbatim (8 columns, no metadata payload).
CompressedGroup make_uncompressed(std::span<const std::int8_t> values);

/// Binary pruning by rounded averaging: after dropping redundant columns, the
/// remaining k low bits of every member are replaced by one k-bit constant,
/// the rounded mean of the members' low-bit values (ties round up).
GroupPruneResult compress_rounded_avg(std::span<const std::int8_t> values, int n_target);

/// Binary pruning by zero-point shifting: searches every constant
/// representable in `const_bits` signed bits (ascending, first minimum wins)
/// for the shift that minimises squared error once the shifted group is
/// snapped to multiples of 2^k.
GroupPruneResult compress_zero_point(std::span<const std::int8_t> values, int n_target,
                                     int const_bits = kConstantBits);

/// Zero-point shifting evaluated at one fixed constant.
GroupPruneResult evaluate_zero_point(std::span<const std::int8_t> values, int n_target, int constant);

/// Zero-bit-only column pruning: zero-point shifting with the constant pinned
/// to 0, so every generated column is all zeros. Used as a quality baseline.
inline GroupPruneResult compress_zero_only(std::span<const std::int8_t> values, int n_target) {
    return evaluate_zero_point(values, n_target, 0);
}

/// Snaps a shifted value to a multiple of 2^k, picking whichever of the two
/// neighbouring multiples is nearer (ties clear the low bits). A round-up that
/// leaves the (8 - redundant)-bit range, or whose reconstruction
/// `snapped - constant` leaves int8, falls back to clearing.
int snap_shifted(int shifted, int k, int redundant = 0, int constant = 0);

/// Reconstructs the int8 group. Throws FormatError on inconsistent metadata
/// or when a reconstructed value leaves the int8 range.
WeightGroup decompress(const CompressedGroup& cg);

/// Throws FormatError when the group violates a structural invariant.
void validate(const CompressedGroup& cg);

/// Appends zero bits so the group covers `group_size` members.
CompressedGroup pad_group(CompressedGroup cg, std::size_t group_size);

/// Metadata byte plus stored columns, in bits.
inline std::size_t compressed_group_bits(std::size_t group_size, int n_pruned) {
    return 8 + static_cast<std::size_t>(8 - n_pruned) * group_size;
}

}  // namespace bbs
