#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bbs/compress.hpp"
#include "bbs/layer.hpp"

namespace bbs {

enum class PruneLevel : std::uint8_t { None, Conservative, Moderate, Custom };

PruneLevel prune_level_from_string(std::string_view s);

struct PlanConfig {
    /// Minimum fraction of channels (model-wide) kept at 8 bits.
    double beta = 0.0;
    /// Weight channels the accelerator processes in parallel.
    std::size_t c_h = 32;
    Strategy strategy = Strategy::ZeroPoint;
    int n_pruned = 4;
    std::size_t group_size = 32;

    /// 10% sensitive, rounded averaging over 2 columns.
    static PlanConfig conservative();
    /// 20% sensitive, zero-point shifting over 4 columns.
    static PlanConfig moderate();
    /// Everything stays at 8 bits.
    static PlanConfig none();
    static PlanConfig for_level(PruneLevel level);

    void validate() const;
};

struct ChannelId {
    std::uint32_t layer = 0;
    std::uint32_t channel = 0;

    friend auto operator<=>(const ChannelId&, const ChannelId&) = default;
};

struct LayerPlan {
    std::string name;
    std::vector<std::uint32_t> sensitive;    ///< ascending channel ids
    std::vector<std::uint32_t> normal;       ///< ascending channel ids
    std::vector<std::uint32_t> permutation;  ///< reordered position -> original channel
    Strategy strategy = Strategy::Uncompressed;
    int n_pruned = 0;

    friend bool operator==(const LayerPlan&, const LayerPlan&) = default;
};

struct PrunePlan {
    PlanConfig config;
    std::vector<LayerPlan> layers;
};

/// The ceil(beta * total) channels with the largest sensitivity across the
/// whole model. Ties go to the lower (layer, channel).
std::set<ChannelId> rank_channels_global(std::span<const QuantizedLayer> model, double beta);

/// Rounds every layer's sensitive count up to a multiple of c_h by promoting
/// the layer's next most sensitive channels (capped at the layer size), then
/// lays out sensitive channels ahead of normal ones.
PrunePlan align_plan(std::span<const QuantizedLayer> model, const std::set<ChannelId>& sensitive,
                     const PlanConfig& cfg);

/// rank_channels_global followed by align_plan.
PrunePlan make_plan(std::span<const QuantizedLayer> model, const PlanConfig& cfg);

/// A layer after global binary pruning, laid out in reordered channel order.
struct CompressedLayer {
    std::string name;
    LayerKind kind = LayerKind::Gemm;
    LayerDims dims;
    std::size_t channels = 0;
    std::size_t reduction_length = 0;
    std::size_t group_size = 0;
    Strategy strategy = Strategy::Uncompressed;
    int n_pruned = 0;
    /// Original channel id of each reordered position.
    std::vector<std::uint32_t> index_map;
    std::size_t sensitive_count = 0;
    /// sensitive_count rows of reduction_length raw weights.
    std::vector<std::int8_t> sensitive_block;
    /// groups_per_channel() groups per normal channel, each padded to group_size.
    std::vector<CompressedGroup> groups;

    std::size_t groups_per_channel() const {
        return group_size == 0 ? 0 : (reduction_length + group_size - 1) / group_size;
    }

    friend bool operator==(const CompressedLayer&, const CompressedLayer&) = default;
};

struct CompressedModel {
    std::string name;
    std::size_t group_size = 0;
    std::vector<CompressedLayer> layers;

    friend bool operator==(const CompressedModel&, const CompressedModel&) = default;
};

/// Compresses every normal channel group by group along the reduction
/// dimension (tail groups compressed on their real members, then zero-padded);
/// sensitive channels are copied verbatim.
CompressedLayer apply_plan(const QuantizedLayer& layer, const LayerPlan& plan, std::size_t group_size);
CompressedModel apply_plan(std::span<const QuantizedLayer> model, const PrunePlan& plan,
                           std::string model_name = {});

/// Decompressed weights in the original channel order.
std::vector<std::int8_t> decompress_layer(const CompressedLayer& layer);

/// Stored bits (columns, metadata and raw sensitive rows) per weight.
double effective_bits(const CompressedLayer& layer);
double effective_bits(const CompressedModel& model);
std::uint64_t stored_bits(const CompressedLayer& layer);

struct ReorderedWeights {
    std::vector<std::int8_t> weight;  ///< channel-major, reordered
    std::vector<std::uint32_t> index;  ///< reordered position -> original channel
};

/// Groups sensitive channels ahead of normal ones.
ReorderedWeights reorder_channels(const QuantizedLayer& layer, const LayerPlan& plan);

/// Writes row p of `outputs` (computed in reordered channel order) back to
/// row index[p]. `outputs` holds index.size() rows of `row_length` values.
std::vector<std::int64_t> unshuffle_outputs(std::span<const std::int64_t> outputs, std::size_t row_length,
                                            std::span<const std::uint32_t> index);

/// JSON form: {"group_size", "c_h", "beta", "layers": [{"name", "strategy",
/// "n_pruned", "sensitive", "normal", "permutation"}]}.
std::string plan_to_json(const PrunePlan& plan);
PrunePlan plan_from_json(std::string_view text);

}  // namespace bbs
