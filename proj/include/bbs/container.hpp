#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bbs/planner.hpp"

namespace bbs {

// Compressed model container. All integers little-endian.
//
//   magic "BBS1" | version u8 | group_size u8 | name_len u16 | name | layer_count u32
//   per layer:
//     name_len u16 | name                       layer id
//     kind u8 | dims_tag u8 (0 none, 1 gemm, 2 conv) | 6 x u32 dims
//         gemm: m, k, n, 0, 0, 0   conv: cout, cin, kh, kw, out_h, out_w
//     strategy u8 | n_pruned u8
//     channels u32 | reduction_length u32 | sensitive_count u32
//     channels x u32                            channel index map
//     sensitive_count x reduction_length int8   raw sensitive rows
//     stream_len u32 | group stream (see stream.hpp)
//
// Normal channels follow the sensitive ones in index-map order; each channel
// contributes ceil(reduction_length / group_size) zero-padded groups.
//
// Zero-point layers reconstruct as snapped - constant: the encoder adds the
// constant before snapping and the decoder subtracts it again.

inline constexpr std::array<char, 4> kContainerMagic{'B', 'B', 'S', '1'};
inline constexpr std::uint8_t kContainerVersion = 1;

std::vector<std::uint8_t> encode_container(const CompressedModel& model);
CompressedModel decode_container(std::span<const std::uint8_t> bytes);

/// Bytes of one layer section's raw weights plus group stream.
std::uint64_t layer_payload_bytes(const CompressedLayer& layer);

void write_container(const std::filesystem::path& path, const CompressedModel& model);
CompressedModel read_container(const std::filesystem::path& path);

}  // namespace bbs
