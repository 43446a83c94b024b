#include "bbs/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "bbs/compress.hpp"
#include "bbs/error.hpp"

namespace bbs {

void Histogram256::add(std::span<const std::int8_t> values) {
    for (auto v : values) ++counts_[static_cast<std::size_t>(v + 128)];
    total_ += values.size();
}

std::array<double, 256> Histogram256::probabilities(double epsilon) const {
    std::array<double, 256> p{};
    const double n = total_ == 0 ? 1.0 : static_cast<double>(total_);
    double sum = 0.0;
    for (std::size_t i = 0; i < 256; ++i) {
        p[i] = static_cast<double>(counts_[i]) / n + epsilon;
        sum += p[i];
    }
    for (auto& x : p) x /= sum;
    return p;
}

std::int64_t sum_squared_error(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
    if (a.size() != b.size()) {
        throw ShapeError("tensors differ in length: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    std::int64_t sse = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::int64_t d = static_cast<std::int64_t>(a[i]) - b[i];
        sse += d * d;
    }
    return sse;
}

double mse(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
    const auto sse = sum_squared_error(a, b);
    return a.empty() ? 0.0 : static_cast<double>(sse) / static_cast<double>(a.size());
}

double kl_divergence(const Histogram256& p, const Histogram256& q) {
    if (p.counts() == q.counts()) return 0.0;
    const auto pp = p.probabilities();
    const auto qq = q.probabilities();
    double kl = 0.0;
    for (std::size_t i = 0; i < 256; ++i) kl += pp[i] * std::log(pp[i] / qq[i]);
    return std::max(kl, 0.0);
}

double kl_divergence(std::span<const std::int8_t> original, std::span<const std::int8_t> compressed) {
    return kl_divergence(Histogram256(original), Histogram256(compressed));
}

LayerQuality layer_quality(const QuantizedLayer& original, const CompressedLayer& compressed) {
    const auto approx = decompress_layer(compressed);
    LayerQuality q;
    q.name = compressed.name;
    q.weights = approx.size();
    q.sensitive_channels = compressed.sensitive_count;
    q.mse = mse(original.weight, approx);
    q.kl = kl_divergence(original.weight, approx);
    q.effective_bits = effective_bits(compressed);
    return q;
}

namespace {

template <typename Fn>
std::vector<std::int8_t> per_group(std::span<const std::int8_t> weights, std::size_t row_length,
                                   std::size_t group_size, Fn&& fn) {
    if (row_length == 0 || group_size == 0 || weights.size() % row_length != 0) {
        throw ShapeError("tensor does not split into rows of " + std::to_string(row_length));
    }
    std::vector<std::int8_t> out(weights.size());
    for (std::size_t row = 0; row < weights.size(); row += row_length) {
        for (std::size_t start = 0; start < row_length; start += group_size) {
            const auto g = weights.subspan(row + start, std::min(group_size, row_length - start));
            const auto res = fn(g);
            std::copy(res.approx.begin(), res.approx.end(), out.begin() + static_cast<std::ptrdiff_t>(row + start));
        }
    }
    return out;
}

}  // namespace

std::vector<std::int8_t> prune_zero_only(std::span<const std::int8_t> weights, std::size_t row_length,
                                         std::size_t group_size, int n_pruned) {
    return per_group(weights, row_length, group_size,
                     [&](std::span<const std::int8_t> g) { return compress_zero_only(g, n_pruned); });
}

std::vector<std::int8_t> prune_tensor(std::span<const std::int8_t> weights, std::size_t row_length,
                                      std::size_t group_size, Strategy strategy, int n_pruned) {
    if (strategy == Strategy::Uncompressed) return {weights.begin(), weights.end()};
    return per_group(weights, row_length, group_size, [&](std::span<const std::int8_t> g) {
        return strategy == Strategy::RoundedAvg ? compress_rounded_avg(g, n_pruned) : compress_zero_point(g, n_pruned);
    });
}

}  // namespace bbs
