#include "bbs/layer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bbs/error.hpp"

namespace bbs {

std::string_view to_string(LayerKind k) { return k == LayerKind::Conv ? "conv" : "gemm"; }

LayerKind layer_kind_from_string(std::string_view s) {
    if (s == "gemm" || s == "GEMM" || s == "linear") return LayerKind::Gemm;
    if (s == "conv" || s == "CONV") return LayerKind::Conv;
    throw ConfigError("unknown layer kind '" + std::string(s) + "'");
}

void validate(const QuantizedLayer& layer) {
    const auto fail = [&](const std::string& what) { throw ConfigError("layer '" + layer.name + "': " + what); };
    if (layer.channels == 0) fail("no output channels");
    if (layer.weight.empty() || layer.weight.size() % layer.channels != 0) {
        fail(std::to_string(layer.weight.size()) + " weights do not split into " + std::to_string(layer.channels) +
             " channels");
    }
    if (!layer.scales.empty()) {
        if (layer.scales.size() != layer.channels) {
            fail(std::to_string(layer.scales.size()) + " scales for " + std::to_string(layer.channels) + " channels");
        }
        for (double s : layer.scales) {
            if (!(s > 0.0) || !std::isfinite(s)) fail("scales must be positive and finite");
        }
    }
    const std::size_t k = layer.reduction_length();
    if (const auto* g = std::get_if<GemmDims>(&layer.dims)) {
        if (g->n != layer.channels || g->k != k || g->m == 0) fail("GEMM dims do not match the weight tensor");
    } else if (const auto* c = std::get_if<ConvDims>(&layer.dims)) {
        if (c->cout != layer.channels || static_cast<std::size_t>(c->cin) * c->kh * c->kw != k ||
            c->out_h == 0 || c->out_w == 0) {
            fail("conv dims do not match the weight tensor");
        }
    }
}

std::vector<double> channel_sensitivity(const QuantizedLayer& layer) {
    if (!layer.scales.empty()) return layer.scales;
    std::vector<double> out(layer.channels);
    for (std::size_t c = 0; c < layer.channels; ++c) {
        const auto w = layer.channel(c);
        double sum = 0.0;
        double sq = 0.0;
        for (auto v : w) {
            sum += v;
            sq += static_cast<double>(v) * v;
        }
        const double n = static_cast<double>(w.size());
        const double mean = sum / n;
        out[c] = std::sqrt(std::max(0.0, sq / n - mean * mean));
    }
    return out;
}

}  // namespace bbs
