#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bbs/layer.hpp"
#include "bbs/planner.hpp"

namespace bbs {

/// Additive smoothing applied to every bin before renormalising.
inline constexpr double kKlSmoothing = 1e-6;

/// Counts over the 256 int8 levels, bin 0 holding -128.
class Histogram256 {
public:
    Histogram256() = default;
    explicit Histogram256(std::span<const std::int8_t> values) { add(values); }

    void add(std::span<const std::int8_t> values);

    std::uint64_t count(int value) const { return counts_[static_cast<std::size_t>(value + 128)]; }
    std::uint64_t total() const { return total_; }
    const std::array<std::uint64_t, 256>& counts() const { return counts_; }

    /// Normalised distribution after adding `epsilon` to every bin.
    std::array<double, 256> probabilities(double epsilon = kKlSmoothing) const;

private:
    std::array<std::uint64_t, 256> counts_{};
    std::uint64_t total_ = 0;
};

/// Mean squared difference, accumulated exactly in 64-bit integers.
double mse(std::span<const std::int8_t> a, std::span<const std::int8_t> b);
std::int64_t sum_squared_error(std::span<const std::int8_t> a, std::span<const std::int8_t> b);

/// KL(P_original || Q_compressed) in nats over smoothed 256-bin histograms.
double kl_divergence(std::span<const std::int8_t> original, std::span<const std::int8_t> compressed);
double kl_divergence(const Histogram256& p, const Histogram256& q);

struct LayerQuality {
    std::string name;
    std::size_t weights = 0;
    std::size_t sensitive_channels = 0;
    double mse = 0.0;
    double kl = 0.0;
    double effective_bits = 0.0;
};

/// MSE, KL and effective bit width of one compressed layer against the
/// original weights.
LayerQuality layer_quality(const QuantizedLayer& original, const CompressedLayer& compressed);

/// Zero-only column pruning of every group in the tensor (channel-major rows
/// of `row_length`, groups of `group_size` along each row). Baseline for the
/// quality comparisons.
std::vector<std::int8_t> prune_zero_only(std::span<const std::int8_t> weights, std::size_t row_length,
                                         std::size_t group_size, int n_pruned);

/// Same grouping, compressed with rounded averaging or zero-point shifting.
std::vector<std::int8_t> prune_tensor(std::span<const std::int8_t> weights, std::size_t row_length,
                                      std::size_t group_size, Strategy strategy, int n_pruned);

}  // namespace bbs
