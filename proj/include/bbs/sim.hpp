#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bbs/layer.hpp"
#include "bbs/planner.hpp"

namespace bbs::sim {

enum class Accelerator : std::uint8_t { Stripes, Pragmatic, Bitlet, BitWave, BitVert };

std::string_view to_string(Accelerator a);
Accelerator accelerator_from_string(std::string_view s);
std::vector<Accelerator> all_accelerators();

/// PE array shared by every model: rows x cols PEs, each with `lanes`
/// bit-serial multipliers working on a group of `lanes` weights. Rows take
/// different input windows, columns different weight channels.
struct ArrayConfig {
    std::size_t rows = 16;
    std::size_t cols = 32;
    std::size_t lanes = 16;
};

/// A layer lowered to an output-stationary GEMM of M x K by K x N.
struct TileSchedule {
    std::string name;
    std::uint64_t m = 0;
    std::uint64_t k = 0;
    std::uint64_t n = 0;
    std::uint64_t k_groups = 0;  ///< ceil(K / lanes)
    std::uint64_t n_tiles = 0;   ///< ceil(N / cols)
    std::uint64_t m_tiles = 0;   ///< ceil(M / rows)

    std::uint64_t steps() const { return k_groups * n_tiles * m_tiles; }
};

/// Conv layers become GEMMs with K = Cin * kh * kw and M = output pixels.
TileSchedule lower_dims(std::string name, const LayerDims& dims, const ArrayConfig& array = {});
TileSchedule lower_layer(const QuantizedLayer& layer, const ArrayConfig& array = {});

/// Per-group cost for one PE: cycles until the PE is done with the group and
/// the lane-cycles spent on real bit work.
struct GroupCost {
    int cycles = 0;
    std::uint32_t busy_lane_cycles = 0;
};

/// Closed-form per-group models for the baselines (at most `lanes` weights):
///   Stripes    8 cycles, every bit processed
///   Pragmatic  max(1, max_i popcount(w_i)), one lane per weight
///   Bitlet     max(1, max_b ceil(ones_b / 2)), two lanes per significance
///   BitWave    max(1, non-zero sign-magnitude columns)
GroupCost group_cost(Accelerator model, std::span<const std::int8_t> weights);
int group_cycles(Accelerator model, std::span<const std::int8_t> weights);

struct LayerCycles {
    std::string layer;
    std::uint64_t steps = 0;
    std::uint64_t total_cycles = 0;
    /// PE-cycles over active PEs; effectual + intra + inter == pe_cycles.
    std::uint64_t pe_cycles = 0;
    double effectual = 0.0;
    double intra_pe_stall = 0.0;
    double inter_pe_stall = 0.0;
    std::uint64_t weight_bytes = 0;
};

struct CycleReport {
    Accelerator model = Accelerator::Stripes;
    ArrayConfig array;
    std::vector<LayerCycles> layers;

    std::uint64_t total_cycles() const;
    std::uint64_t pe_cycles() const;
    double effectual() const;
    double intra_pe_stall() const;
    double inter_pe_stall() const;
    std::uint64_t weight_bytes() const;
    std::uint64_t steps() const;
};

/// Baseline models over raw int8 weights in original channel order.
CycleReport run(Accelerator model, std::span<const QuantizedLayer> workload, const ArrayConfig& array = {});

/// BitVert over a compressed model in its reordered channel order.
CycleReport run_bitvert(const CompressedModel& compressed, const ArrayConfig& array = {});

/// Dispatches on the model; BitVert requires `compressed`.
CycleReport run(Accelerator model, std::span<const QuantizedLayer> workload, const CompressedModel* compressed,
                const ArrayConfig& array = {});

struct ScalingRow {
    Accelerator model = Accelerator::Stripes;
    std::size_t pe_columns = 0;
    std::uint64_t total_cycles = 0;
    std::uint64_t stripes_cycles = 0;
    double speedup = 0.0;
    double effectual = 0.0;
    double intra_pe_stall = 0.0;
    double inter_pe_stall = 0.0;
};

struct ScalingStudy {
    std::vector<ScalingRow> rows;

    std::vector<double> speedups(Accelerator model) const;
    /// True when speedup never grows as PE columns increase.
    bool non_increasing(Accelerator model) const;
    /// max - min speedup across column counts.
    double spread(Accelerator model) const;
};

/// Speedup over Stripes for every model at every PE column count.
ScalingStudy scaling_study(std::span<const Accelerator> models, std::span<const QuantizedLayer> workload,
                           const CompressedModel* compressed, std::span<const std::size_t> pe_columns,
                           const ArrayConfig& base = {});

/// Dot product computed the way each baseline walks the bits (two's
/// complement bits, essential bits, per-significance lanes, sign-magnitude
/// columns). Cycle models never change values, so all agree with the
/// integer reference.
std::int64_t baseline_dot(Accelerator model, std::span<const std::int8_t> weights,
                          std::span<const std::int8_t> acts);

struct FunctionalCheck {
    std::uint64_t samples = 0;
    std::uint64_t mismatches = 0;
};

/// Samples (layer, channel, group) tiles with uniform int8 activations and
/// compares the PE result with the 64-bit reference dot product.
FunctionalCheck functional_check(const CompressedModel& compressed, std::uint64_t samples, std::uint64_t seed);

}  // namespace bbs::sim
