#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bbs {

enum class LayerKind : std::uint8_t { Gemm = 0, Conv = 1 };

std::string_view to_string(LayerKind k);
LayerKind layer_kind_from_string(std::string_view s);

/// Output rows M, reduction K, output channels N.
struct GemmDims {
    std::uint32_t m = 0;
    std::uint32_t k = 0;
    std::uint32_t n = 0;

    friend bool operator==(const GemmDims&, const GemmDims&) = default;
};

struct ConvDims {
    std::uint32_t cout = 0;
    std::uint32_t cin = 0;
    std::uint32_t kh = 0;
    std::uint32_t kw = 0;
    std::uint32_t out_h = 0;
    std::uint32_t out_w = 0;

    friend bool operator==(const ConvDims&, const ConvDims&) = default;
};

using LayerDims = std::variant<std::monostate, GemmDims, ConvDims>;

/// An int8 weight tensor stored channel-major: `channels` rows of
/// reduction_length() weights, one row per output channel.
struct QuantizedLayer {
    std::string name;
    LayerKind kind = LayerKind::Gemm;
    std::vector<std::int8_t> weight;
    std::size_t channels = 0;
    /// Per-channel quantization scales; empty when unknown.
    std::vector<double> scales;
    LayerDims dims;

    std::size_t reduction_length() const { return channels == 0 ? 0 : weight.size() / channels; }

    std::span<const std::int8_t> channel(std::size_t c) const {
        const std::size_t k = reduction_length();
        return std::span<const std::int8_t>(weight).subspan(c * k, k);
    }
};

/// Throws ConfigError when the weight, scale and dimension fields disagree.
void validate(const QuantizedLayer& layer);

/// Channel sensitivity proxy: the scale when present, otherwise the standard
/// deviation of the channel's weights.
std::vector<double> channel_sensitivity(const QuantizedLayer& layer);

}  // namespace bbs
