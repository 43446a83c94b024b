#include "bbs/pe.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "bbs/error.hpp"

namespace bbs::pe {

std::size_t SchedulerOutput::valid_lanes() const {
    return static_cast<std::size_t>(std::count(val.begin(), val.end(), true));
}

SchedulerOutput schedule_subgroup(std::uint8_t column, int col_idx) {
    SchedulerOutput out;
    out.col_idx = col_idx;
    out.inverted = std::popcount(column) > static_cast<int>(kSubgroupSize / 2);
    unsigned pending = out.inverted ? static_cast<std::uint8_t>(~column) : column;
    for (std::size_t lane = 0; lane < kLanesPerSubgroup; ++lane) {
        const unsigned window = (pending >> lane) & ((1u << kMuxWidth) - 1);
        if (window == 0) continue;
        const auto pos = lane + static_cast<std::size_t>(std::countr_zero(window));
        out.sel[lane] = static_cast<std::uint8_t>(pos);
        out.val[lane] = true;
        pending &= ~(1u << pos);
    }
    return out;
}

std::int64_t subgroup_dot(std::uint8_t column, std::span<const std::int32_t> acts, std::int64_t sum_a) {
    if (acts.size() != kSubgroupSize) throw ShapeError("sub-group needs exactly 8 activations");
    const auto s = schedule_subgroup(column);
    std::int64_t acc = 0;
    for (std::size_t lane = 0; lane < kLanesPerSubgroup; ++lane) {
        if (s.val[lane]) acc += acts[s.sel[lane]];
    }
    return s.inverted ? sum_a - acc : acc;
}

std::uint8_t subgroup_bits(const BitVector& column, std::size_t start) {
    std::uint8_t bits = 0;
    const std::size_t end = std::min(column.size(), start + kSubgroupSize);
    for (std::size_t i = start; i < end; ++i) {
        if (column.get(i)) bits = static_cast<std::uint8_t>(bits | (1u << (i - start)));
    }
    return bits;
}

std::vector<int> col_idx_sequence(const CompressedGroup& cg) {
    std::vector<int> seq;
    const int start = 7 - cg.num_redundant;
    for (int i = 0; i < cg.stored.width; ++i) seq.push_back(start - i);
    return seq;
}

std::int64_t pe_dot(const CompressedGroup& cg, std::span<const std::int8_t> acts) {
    const std::size_t n = cg.group_size();
    if (acts.size() != n) {
        throw ShapeError("group of " + std::to_string(n) + " weights given " + std::to_string(acts.size()) +
                         " activations");
    }
    validate(cg);

    // Activations are reused for every column, so stage them per sub-group.
    const std::size_t subgroups = (n + kSubgroupSize - 1) / kSubgroupSize;
    std::vector<std::array<std::int32_t, kSubgroupSize>> staged(subgroups);
    std::vector<std::int64_t> sub_sums(subgroups, 0);
    std::int64_t total = 0;
    for (std::size_t s = 0; s < subgroups; ++s) {
        staged[s].fill(0);
        for (std::size_t i = 0; i < kSubgroupSize && s * kSubgroupSize + i < n; ++i) {
            staged[s][i] = acts[s * kSubgroupSize + i];
            sub_sums[s] += staged[s][i];
        }
        total += sub_sums[s];
    }

    const auto sequence = col_idx_sequence(cg);
    std::int64_t acc = 0;
    for (std::size_t step = 0; step < sequence.size(); ++step) {
        const auto& column = cg.stored.columns[cg.stored.columns.size() - 1 - step];
        std::int64_t partial = 0;
        for (std::size_t s = 0; s < subgroups; ++s) {
            partial += subgroup_dot(subgroup_bits(column, s * kSubgroupSize), staged[s], sub_sums[s]);
        }
        const std::int64_t shifted = partial * (std::int64_t{1} << sequence[step]);
        acc += step == 0 ? -shifted : shifted;
    }

    switch (cg.strategy) {
        case Strategy::RoundedAvg: acc += cg.constant * total; break;
        case Strategy::ZeroPoint: acc -= cg.constant * total; break;
        case Strategy::Uncompressed: break;
    }
    return acc;
}

int pe_cycles(Strategy strategy, int n_pruned) {
    if (strategy == Strategy::Uncompressed) return 8;
    return std::max(2, 8 - n_pruned);
}

int pe_cycles(const CompressedGroup& cg) { return pe_cycles(cg.strategy, cg.n_pruned); }

}  // namespace bbs::pe
