#include "bbs/bitplane.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "bbs/error.hpp"

namespace bbs {

BitVector::BitVector(std::size_t size) : bytes_((size + 7) / 8, 0), size_(size) {}

BitVector BitVector::from_bytes(std::span<const std::uint8_t> bytes, std::size_t size) {
    if (bytes.size() != (size + 7) / 8) {
        throw FormatError("bit vector of " + std::to_string(size) + " bits needs " +
                          std::to_string((size + 7) / 8) + " bytes, got " + std::to_string(bytes.size()));
    }
    BitVector v(size);
    std::copy(bytes.begin(), bytes.end(), v.bytes_.begin());
    if (size % 8 != 0 && !v.bytes_.empty()) {
        v.bytes_.back() &= static_cast<std::uint8_t>((1u << (size % 8)) - 1);
    }
    return v;
}

void BitVector::set(std::size_t i, bool bit) {
    const auto mask = static_cast<std::uint8_t>(1u << (i & 7));
    if (bit) {
        bytes_[i >> 3] |= mask;
    } else {
        bytes_[i >> 3] &= static_cast<std::uint8_t>(~mask);
    }
}

std::size_t BitVector::popcount() const {
    std::size_t n = 0;
    for (auto b : bytes_) n += static_cast<std::size_t>(std::popcount(b));
    return n;
}

void BitVector::resize(std::size_t size) {
    if (size < size_) {
        for (std::size_t i = size; i < size_; ++i) set(i, false);
    }
    bytes_.resize((size + 7) / 8, 0);
    size_ = size;
}

BitMatrix to_bitplanes(std::span<const std::int8_t> values, int width) {
    if (width < 1 || width > 8) {
        throw RangeError("bit width must be in [1, 8], got " + std::to_string(width));
    }
    const int lo = -(1 << (width - 1));
    const int hi = (1 << (width - 1)) - 1;

    BitMatrix m;
    m.group_size = values.size();
    m.width = width;
    m.msb_weight = lo;
    m.columns.assign(static_cast<std::size_t>(width), BitVector(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const int v = values[i];
        if (v < lo || v > hi) {
            throw RangeError("value " + std::to_string(v) + " at index " + std::to_string(i) +
                             " does not fit in " + std::to_string(width) + "-bit two's complement");
        }
        const auto bits = static_cast<std::uint8_t>(v);
        for (int b = 0; b < width; ++b) m.columns[b].set(i, (bits >> b) & 1u);
    }
    return m;
}

std::vector<int> from_bitplanes(const BitMatrix& m) {
    std::vector<int> out(m.group_size, 0);
    if (m.width == 0) return out;
    const auto top = static_cast<std::size_t>(m.width - 1);
    for (std::size_t i = 0; i < m.group_size; ++i) {
        int magnitude = 0;
        for (std::size_t b = 0; b < top; ++b) {
            if (m.columns[b].get(i)) magnitude += 1 << b;
        }
        const bool msb = m.columns[top].get(i);
        if (m.format == BitFormat::SignMagnitude) {
            out[i] = msb ? -magnitude : magnitude;
        } else {
            out[i] = magnitude + (msb ? static_cast<int>(m.msb_weight) : 0);
        }
    }
    return out;
}

BitMatrix to_sign_magnitude(std::span<const std::int8_t> values) {
    BitMatrix m;
    m.group_size = values.size();
    m.width = 8;
    m.msb_weight = 0;
    m.format = BitFormat::SignMagnitude;
    m.columns.assign(8, BitVector(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const int v = std::max<int>(values[i], -127);
        const int magnitude = v < 0 ? -v : v;
        for (int b = 0; b < 7; ++b) m.columns[b].set(i, (magnitude >> b) & 1);
        m.columns[7].set(i, v < 0);
    }
    return m;
}

Effectual column_effectual(const BitVector& column) {
    const std::size_t ones = column.popcount();
    const std::size_t zeros = column.size() - ones;
    return {std::min(ones, zeros), ones > zeros};
}

SparsityCounts& SparsityCounts::operator+=(const SparsityCounts& o) {
    weights += o.weights;
    zero_values += o.zero_values;
    zero_bits_2c += o.zero_bits_2c;
    zero_bits_sm += o.zero_bits_sm;
    skippable_bits += o.skippable_bits;
    return *this;
}

SparsityReport SparsityCounts::report() const {
    SparsityReport r;
    r.weights = weights;
    if (weights == 0) return r;
    const double n = static_cast<double>(weights);
    const double bits = 8.0 * n;
    r.value_sparsity = static_cast<double>(zero_values) / n;
    r.bit_sparsity_2c = static_cast<double>(zero_bits_2c) / bits;
    r.bit_sparsity_sm = static_cast<double>(zero_bits_sm) / bits;
    r.bbs_sparsity = static_cast<double>(skippable_bits) / bits;
    return r;
}

SparsityCounts sparsity_counts(std::span<const std::int8_t> tensor, std::size_t bbs_vector_size) {
    if (bbs_vector_size == 0) throw ConfigError("BBS vector size must be positive");
    SparsityCounts c;
    c.weights = tensor.size();
    for (auto v : tensor) {
        if (v == 0) ++c.zero_values;
        c.zero_bits_2c += 8u - static_cast<unsigned>(std::popcount(static_cast<std::uint8_t>(v)));
        const int sm = std::max<int>(v, -127);
        const unsigned mag = static_cast<unsigned>(sm < 0 ? -sm : sm);
        const unsigned sm_bits = mag | (sm < 0 ? 0x80u : 0u);
        c.zero_bits_sm += 8u - static_cast<unsigned>(std::popcount(sm_bits));
    }
    for (std::size_t start = 0; start < tensor.size(); start += bbs_vector_size) {
        const auto vec = tensor.subspan(start, std::min(bbs_vector_size, tensor.size() - start));
        for (int b = 0; b < 8; ++b) {
            std::size_t ones = 0;
            for (auto v : vec) ones += (static_cast<std::uint8_t>(v) >> b) & 1u;
            c.skippable_bits += std::max(ones, vec.size() - ones);
        }
    }
    return c;
}

SparsityReport sparsity_stats(std::span<const std::int8_t> tensor, std::size_t bbs_vector_size) {
    return sparsity_counts(tensor, bbs_vector_size).report();
}

}  // namespace bbs
