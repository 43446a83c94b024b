#include "bbs/sim.hpp"

#include <algorithm>
#include <bit>
#include <random>
#include <string>

#include "bbs/container.hpp"
#include "bbs/error.hpp"
#include "bbs/pe.hpp"

namespace bbs::sim {

std::string_view to_string(Accelerator a) {
    switch (a) {
        case Accelerator::Stripes: return "stripes";
        case Accelerator::Pragmatic: return "pragmatic";
        case Accelerator::Bitlet: return "bitlet";
        case Accelerator::BitWave: return "bitwave";
        case Accelerator::BitVert: return "bitvert";
    }
    return "unknown";
}

Accelerator accelerator_from_string(std::string_view s) {
    for (auto a : all_accelerators()) {
        if (to_string(a) == s) return a;
    }
    throw ConfigError("unknown accelerator model '" + std::string(s) + "'");
}

std::vector<Accelerator> all_accelerators() {
    return {Accelerator::Stripes, Accelerator::Pragmatic, Accelerator::Bitlet, Accelerator::BitWave,
            Accelerator::BitVert};
}

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

void check_array(const ArrayConfig& a) {
    if (a.rows == 0 || a.cols == 0 || a.lanes == 0) throw ConfigError("PE array dimensions must be positive");
}

unsigned sign_magnitude_bits(std::int8_t w) {
    const int v = std::max<int>(w, -127);
    const unsigned mag = static_cast<unsigned>(v < 0 ? -v : v);
    return mag | (v < 0 ? 0x80u : 0u);
}

}  // namespace

TileSchedule lower_dims(std::string name, const LayerDims& dims, const ArrayConfig& array) {
    check_array(array);
    TileSchedule ts;
    ts.name = std::move(name);
    if (const auto* g = std::get_if<GemmDims>(&dims)) {
        ts.m = g->m;
        ts.k = g->k;
        ts.n = g->n;
    } else if (const auto* c = std::get_if<ConvDims>(&dims)) {
        ts.m = static_cast<std::uint64_t>(c->out_h) * c->out_w;
        ts.k = static_cast<std::uint64_t>(c->cin) * c->kh * c->kw;
        ts.n = c->cout;
    } else {
        throw ConfigError("layer '" + ts.name + "' has no GEMM or conv dimensions");
    }
    if (ts.m == 0 || ts.k == 0 || ts.n == 0) throw ConfigError("layer '" + ts.name + "' has an empty dimension");
    ts.k_groups = ceil_div(ts.k, array.lanes);
    ts.n_tiles = ceil_div(ts.n, array.cols);
    ts.m_tiles = ceil_div(ts.m, array.rows);
    return ts;
}

TileSchedule lower_layer(const QuantizedLayer& layer, const ArrayConfig& array) {
    return lower_dims(layer.name, layer.dims, array);
}

GroupCost group_cost(Accelerator model, std::span<const std::int8_t> weights) {
    const auto len = static_cast<std::uint32_t>(weights.size());
    GroupCost gc;
    switch (model) {
        case Accelerator::Stripes:
            gc.cycles = 8;
            gc.busy_lane_cycles = 8 * len;
            break;
        case Accelerator::Pragmatic: {
            int worst = 0;
            for (auto w : weights) {
                const int ones = std::popcount(static_cast<std::uint8_t>(w));
                worst = std::max(worst, ones);
                gc.busy_lane_cycles += static_cast<std::uint32_t>(ones);
            }
            gc.cycles = std::max(1, worst);
            break;
        }
        case Accelerator::Bitlet: {
            int worst = 0;
            for (int b = 0; b < 8; ++b) {
                int ones = 0;
                for (auto w : weights) ones += (static_cast<std::uint8_t>(w) >> b) & 1;
                worst = std::max(worst, (ones + 1) / 2);
                gc.busy_lane_cycles += static_cast<std::uint32_t>(ones);
            }
            gc.cycles = std::max(1, worst);
            break;
        }
        case Accelerator::BitWave: {
            unsigned any = 0;
            for (auto w : weights) any |= sign_magnitude_bits(w);
            gc.cycles = std::max(1, std::popcount(any));
            gc.busy_lane_cycles = static_cast<std::uint32_t>(gc.cycles) * len;
            break;
        }
        case Accelerator::BitVert:
            throw ConfigError("BitVert cycles come from compression metadata, not raw weights");
    }
    return gc;
}

int group_cycles(Accelerator model, std::span<const std::int8_t> weights) {
    return group_cost(model, weights).cycles;
}

namespace {

// Walks the tile steps of one layer. cost(channel_position, k_group) gives
// the cost of that PE column in that step; rows share weights, so a step's
// cost is identical down a column and the M dimension only scales the totals.
template <typename CostFn>
LayerCycles simulate_layer(const TileSchedule& ts, const ArrayConfig& array, CostFn&& cost) {
    std::uint64_t step_sum = 0;
    std::uint64_t active_pe_steps = 0;
    std::uint64_t busy = 0;
    std::uint64_t intra = 0;
    std::uint64_t inter = 0;
    std::vector<GroupCost> costs;
    for (std::uint64_t nt = 0; nt < ts.n_tiles; ++nt) {
        const std::uint64_t first = nt * array.cols;
        const std::uint64_t cols = std::min<std::uint64_t>(array.cols, ts.n - first);
        for (std::uint64_t kg = 0; kg < ts.k_groups; ++kg) {
            costs.clear();
            int step = 0;
            for (std::uint64_t c = 0; c < cols; ++c) {
                costs.push_back(cost(first + c, kg));
                step = std::max(step, costs.back().cycles);
            }
            for (const auto& gc : costs) {
                busy += gc.busy_lane_cycles;
                intra += static_cast<std::uint64_t>(gc.cycles) * array.lanes - gc.busy_lane_cycles;
                inter += static_cast<std::uint64_t>(step - gc.cycles) * array.lanes;
            }
            step_sum += static_cast<std::uint64_t>(step);
            active_pe_steps += static_cast<std::uint64_t>(step) * cols;
        }
    }
    const auto lanes = static_cast<double>(array.lanes);
    const auto m = static_cast<double>(ts.m);
    LayerCycles lc;
    lc.layer = ts.name;
    lc.steps = ts.steps();
    lc.total_cycles = step_sum * ts.m_tiles;
    lc.pe_cycles = active_pe_steps * ts.m;
    lc.effectual = static_cast<double>(busy) * m / lanes;
    lc.intra_pe_stall = static_cast<double>(intra) * m / lanes;
    lc.inter_pe_stall = static_cast<double>(inter) * m / lanes;
    return lc;
}

std::uint64_t bitwave_bytes(const QuantizedLayer& layer, std::size_t lanes) {
    // per group: one column-presence byte plus the non-zero columns
    std::uint64_t bytes = 0;
    const std::size_t k = layer.reduction_length();
    for (std::size_t c = 0; c < layer.channels; ++c) {
        const auto w = layer.channel(c);
        for (std::size_t start = 0; start < k; start += lanes) {
            const auto g = w.subspan(start, std::min(lanes, k - start));
            unsigned any = 0;
            for (auto v : g) any |= sign_magnitude_bits(v);
            bytes += 1 + static_cast<std::uint64_t>(std::popcount(any)) * ((g.size() + 7) / 8);
        }
    }
    return bytes;
}

}  // namespace

CycleReport run(Accelerator model, std::span<const QuantizedLayer> workload, const ArrayConfig& array) {
    if (model == Accelerator::BitVert) throw ConfigError("BitVert simulation needs a compressed model");
    check_array(array);
    CycleReport report;
    report.model = model;
    report.array = array;
    for (const auto& layer : workload) {
        validate(layer);
        const auto ts = lower_layer(layer, array);
        if (ts.k != layer.reduction_length() || ts.n != layer.channels) {
            throw ConfigError("layer '" + layer.name + "': dims disagree with the weight tensor");
        }
        const std::size_t k = layer.reduction_length();
        auto lc = simulate_layer(ts, array, [&](std::uint64_t ch, std::uint64_t kg) {
            const std::size_t start = kg * array.lanes;
            return group_cost(model, layer.channel(ch).subspan(start, std::min<std::size_t>(array.lanes, k - start)));
        });
        lc.weight_bytes = model == Accelerator::BitWave ? bitwave_bytes(layer, array.lanes) : layer.weight.size();
        report.layers.push_back(std::move(lc));
    }
    return report;
}

CycleReport run_bitvert(const CompressedModel& compressed, const ArrayConfig& array) {
    check_array(array);
    CycleReport report;
    report.model = Accelerator::BitVert;
    report.array = array;
    for (const auto& layer : compressed.layers) {
        const auto ts = lower_dims(layer.name, layer.dims, array);
        if (ts.k != layer.reduction_length || ts.n != layer.channels) {
            throw FormatError("layer '" + layer.name + "': dims disagree with the compressed tensor");
        }
        const std::size_t k = layer.reduction_length;
        const std::size_t gpc = layer.groups_per_channel();
        auto lc = simulate_layer(ts, array, [&](std::uint64_t pos, std::uint64_t kg) {
            const std::size_t start = kg * array.lanes;
            const auto len = static_cast<std::uint32_t>(std::min<std::size_t>(array.lanes, k - start));
            int cycles = 8;
            if (pos >= layer.sensitive_count) {
                // a PE group may straddle several compression groups
                const std::size_t base = (pos - layer.sensitive_count) * gpc;
                const std::size_t g_first = start / layer.group_size;
                const std::size_t g_last = (start + len - 1) / layer.group_size;
                cycles = 0;
                for (std::size_t g = g_first; g <= g_last; ++g) {
                    cycles = std::max(cycles, pe::pe_cycles(layer.groups[base + g]));
                }
            }
            return GroupCost{cycles, static_cast<std::uint32_t>(cycles) * len};
        });
        lc.weight_bytes = layer_payload_bytes(layer);
        report.layers.push_back(std::move(lc));
    }
    return report;
}

CycleReport run(Accelerator model, std::span<const QuantizedLayer> workload, const CompressedModel* compressed,
                const ArrayConfig& array) {
    if (model == Accelerator::BitVert) {
        if (compressed == nullptr) throw ConfigError("BitVert simulation needs a compressed model");
        return run_bitvert(*compressed, array);
    }
    return run(model, workload, array);
}

std::uint64_t CycleReport::total_cycles() const {
    std::uint64_t s = 0;
    for (const auto& l : layers) s += l.total_cycles;
    return s;
}

std::uint64_t CycleReport::pe_cycles() const {
    std::uint64_t s = 0;
    for (const auto& l : layers) s += l.pe_cycles;
    return s;
}

double CycleReport::effectual() const {
    double s = 0;
    for (const auto& l : layers) s += l.effectual;
    return s;
}

double CycleReport::intra_pe_stall() const {
    double s = 0;
    for (const auto& l : layers) s += l.intra_pe_stall;
    return s;
}

double CycleReport::inter_pe_stall() const {
    double s = 0;
    for (const auto& l : layers) s += l.inter_pe_stall;
    return s;
}

std::uint64_t CycleReport::weight_bytes() const {
    std::uint64_t s = 0;
    for (const auto& l : layers) s += l.weight_bytes;
    return s;
}

std::uint64_t CycleReport::steps() const {
    std::uint64_t s = 0;
    for (const auto& l : layers) s += l.steps;
    return s;
}

std::vector<double> ScalingStudy::speedups(Accelerator model) const {
    std::vector<const ScalingRow*> mine;
    for (const auto& r : rows) {
        if (r.model == model) mine.push_back(&r);
    }
    std::stable_sort(mine.begin(), mine.end(),
                     [](const ScalingRow* a, const ScalingRow* b) { return a->pe_columns < b->pe_columns; });
    std::vector<double> out;
    for (const auto* r : mine) out.push_back(r->speedup);
    return out;
}

bool ScalingStudy::non_increasing(Accelerator model) const {
    const auto s = speedups(model);
    return std::is_sorted(s.rbegin(), s.rend());
}

double ScalingStudy::spread(Accelerator model) const {
    const auto s = speedups(model);
    if (s.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    return *hi - *lo;
}

ScalingStudy scaling_study(std::span<const Accelerator> models, std::span<const QuantizedLayer> workload,
                           const CompressedModel* compressed, std::span<const std::size_t> pe_columns,
                           const ArrayConfig& base) {
    ScalingStudy study;
    for (auto cols : pe_columns) {
        ArrayConfig array = base;
        array.cols = cols;
        for (auto model : models) {
            const auto report = run(model, workload, compressed, array);
            ScalingRow row;
            row.model = model;
            row.pe_columns = cols;
            row.total_cycles = report.total_cycles();
            // Stripes spends 8 cycles on every step whatever the weights
            row.stripes_cycles = 8 * report.steps();
            row.speedup = row.total_cycles == 0 ? 0.0
                                                : static_cast<double>(row.stripes_cycles) /
                                                      static_cast<double>(row.total_cycles);
            row.effectual = report.effectual();
            row.intra_pe_stall = report.intra_pe_stall();
            row.inter_pe_stall = report.inter_pe_stall();
            study.rows.push_back(row);
        }
    }
    return study;
}

std::int64_t baseline_dot(Accelerator model, std::span<const std::int8_t> weights, std::span<const std::int8_t> acts) {
    if (weights.size() != acts.size()) throw ShapeError("weights and activations differ in length");
    std::int64_t acc = 0;
    switch (model) {
        case Accelerator::Stripes:
        case Accelerator::Bitlet:
            // one significance at a time across the group
            for (int b = 0; b < 8; ++b) {
                std::int64_t partial = 0;
                for (std::size_t i = 0; i < weights.size(); ++i) {
                    if ((static_cast<std::uint8_t>(weights[i]) >> b) & 1u) partial += acts[i];
                }
                acc += (b == 7 ? -partial : partial) * (std::int64_t{1} << b);
            }
            break;
        case Accelerator::Pragmatic:
            // essential bits of each weight, one at a time
            for (std::size_t i = 0; i < weights.size(); ++i) {
                unsigned bits = static_cast<std::uint8_t>(weights[i]);
                while (bits != 0) {
                    const int b = std::countr_zero(bits);
                    bits &= bits - 1;
                    const std::int64_t term = static_cast<std::int64_t>(acts[i]) << b;
                    acc += b == 7 ? -term : term;
                }
            }
            break;
        case Accelerator::BitWave: {
            // sign-magnitude columns; the value path keeps the full magnitude of -128
            std::int64_t pos = 0;
            std::int64_t neg = 0;
            for (int b = 0; b < 8; ++b) {
                for (std::size_t i = 0; i < weights.size(); ++i) {
                    const int w = weights[i];
                    const unsigned mag = static_cast<unsigned>(w < 0 ? -w : w);
                    if ((mag >> b) & 1u) (w < 0 ? neg : pos) += static_cast<std::int64_t>(acts[i]) << b;
                }
            }
            acc = pos - neg;
            break;
        }
        case Accelerator::BitVert:
            acc = pe::pe_dot(make_uncompressed(weights), acts);
            break;
    }
    return acc;
}

FunctionalCheck functional_check(const CompressedModel& compressed, std::uint64_t samples, std::uint64_t seed) {
    FunctionalCheck out;
    std::vector<std::size_t> usable;
    for (std::size_t l = 0; l < compressed.layers.size(); ++l) {
        if (compressed.layers[l].channels > 0 && compressed.layers[l].reduction_length > 0) usable.push_back(l);
    }
    if (usable.empty()) return out;

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> act_dist(-128, 127);
    for (std::uint64_t s = 0; s < samples; ++s) {
        const auto& layer = compressed.layers[usable[rng() % usable.size()]];
        const std::size_t pos = rng() % layer.channels;
        const std::size_t g = rng() % layer.groups_per_channel();

        CompressedGroup cg;
        if (pos < layer.sensitive_count) {
            const std::size_t start = g * layer.group_size;
            const auto row = std::span<const std::int8_t>(layer.sensitive_block)
                                 .subspan(pos * layer.reduction_length, layer.reduction_length);
            cg = make_uncompressed(row.subspan(start, std::min(layer.group_size, layer.reduction_length - start)));
        } else {
            cg = layer.groups[(pos - layer.sensitive_count) * layer.groups_per_channel() + g];
        }

        std::vector<std::int8_t> acts(cg.group_size());
        for (auto& a : acts) a = static_cast<std::int8_t>(act_dist(rng));
        const auto w = decompress(cg);
        std::int64_t ref = 0;
        for (std::size_t i = 0; i < w.size(); ++i) ref += static_cast<std::int64_t>(w[i]) * acts[i];
        ++out.samples;
        if (pe::pe_dot(cg, acts) != ref) ++out.mismatches;
    }
    return out;
}

}  // namespace bbs::sim
