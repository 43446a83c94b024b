#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bbs {

/// Packed bit vector. Bit i lives in byte i / 8 at position i % 8 (LSB first);
/// bits past size() in the last byte are always zero.
class BitVector {
public:
    BitVector() = default;
    explicit BitVector(std::size_t size);

    static BitVector from_bytes(std::span<const std::uint8_t> bytes, std::size_t size);

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    bool get(std::size_t i) const { return (bytes_[i >> 3] >> (i & 7)) & 1u; }
    void set(std::size_t i, bool bit);

    std::size_t popcount() const;
    bool all_zero() const { return popcount() == 0; }
    bool all_one() const { return popcount() == size_; }

    /// Grows or shrinks the vector; new bits are zero.
    void resize(std::size_t size);

    std::span<const std::uint8_t> bytes() const { return bytes_; }

    friend bool operator==(const BitVector&, const BitVector&) = default;

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t size_ = 0;
};

enum class BitFormat : std::uint8_t { TwosComplement, SignMagnitude };

/// A group of integers split into bit columns. columns[b] holds significance b
/// of every member. For two's complement the top column is weighted by
/// msb_weight (normally -2^(width-1)); for sign-magnitude it is the sign.
struct BitMatrix {
    std::vector<BitVector> columns;
    std::size_t group_size = 0;
    int width = 0;
    std::int64_t msb_weight = 0;
    BitFormat format = BitFormat::TwosComplement;

    const BitVector& top() const { return columns.back(); }

    friend bool operator==(const BitMatrix&, const BitMatrix&) = default;
};

/// Two's complement decomposition. Throws RangeError when a value does not fit
/// in `width` bits or width is outside [1, 8].
BitMatrix to_bitplanes(std::span<const std::int8_t> values, int width = 8);

/// Exact inverse of to_bitplanes / to_sign_magnitude.
std::vector<int> from_bitplanes(const BitMatrix& m);

/// Sign-magnitude decomposition: column 7 is the sign, columns 0-6 the
/// magnitude. -128 has no encoding and saturates to -127.
BitMatrix to_sign_magnitude(std::span<const std::int8_t> values);

struct Effectual {
    std::size_t count = 0;
    bool inverted = false;

    friend bool operator==(const Effectual&, const Effectual&) = default;
};

/// Bits that must be processed for one column under bi-directional sparsity:
/// min(#ones, #zeros); the column is inverted only when ones are the majority.
Effectual column_effectual(const BitVector& column);

struct SparsityReport {
    double value_sparsity = 0.0;
    double bit_sparsity_2c = 0.0;
    double bit_sparsity_sm = 0.0;
    double bbs_sparsity = 0.0;
    std::size_t weights = 0;
};

/// Value, bit (two's complement and sign-magnitude) and BBS sparsity of a
/// tensor. BBS is evaluated per bit column over consecutive vectors of
/// `bbs_vector_size` values; a short tail vector counts only its real members.
SparsityReport sparsity_stats(std::span<const std::int8_t> tensor, std::size_t bbs_vector_size = 8);

/// Raw counts behind SparsityReport, mergeable across tensors.
struct SparsityCounts {
    std::uint64_t weights = 0;
    std::uint64_t zero_values = 0;
    std::uint64_t zero_bits_2c = 0;
    std::uint64_t zero_bits_sm = 0;
    std::uint64_t skippable_bits = 0;

    SparsityCounts& operator+=(const SparsityCounts& o);
    SparsityReport report() const;
};

SparsityCounts sparsity_counts(std::span<const std::int8_t> tensor, std::size_t bbs_vector_size = 8);

}  // namespace bbs
