#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bbs/compress.hpp"

namespace bbs {

// Group stream layout (little-endian):
//
//   magic "BBSG" | version u8 | strategy u8 | n_pruned u8 | group_size u8 | count u32
//   count x record
//
// record = metadata u8 | (8 - n_pruned) columns of ceil(group_size / 8) bytes
//
// The metadata byte holds the redundant-column count in bits 7-6 and the
// constant in bits 5-0 (6-bit two's complement for zero-point shifting,
// unsigned for rounded averaging). Columns are written MSB column first; bit i
// of a column is member i, LSB first within each byte.

inline constexpr std::array<char, 4> kStreamMagic{'B', 'B', 'S', 'G'};
inline constexpr std::uint8_t kStreamVersion = 1;
inline constexpr std::size_t kStreamHeaderBytes = 12;

struct StreamHeader {
    Strategy strategy = Strategy::Uncompressed;
    int n_pruned = 0;
    std::size_t group_size = 0;

    friend bool operator==(const StreamHeader&, const StreamHeader&) = default;
};

struct GroupStream {
    StreamHeader header;
    std::vector<CompressedGroup> groups;
};

/// Bytes one record occupies.
std::size_t record_bytes(std::size_t group_size, int n_pruned);

std::uint8_t pack_metadata(const CompressedGroup& cg);

/// Throws ConfigError when a group disagrees with the header.
std::vector<std::uint8_t> encode_stream(const StreamHeader& header, std::span<const CompressedGroup> groups);

/// Throws FormatError on bad magic, truncation, trailing bytes or corrupt
/// metadata.
GroupStream decode_stream(std::span<const std::uint8_t> bytes);

}  // namespace bbs
