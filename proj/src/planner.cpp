#include "bbs/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "bbs/error.hpp"

namespace bbs {

PruneLevel prune_level_from_string(std::string_view s) {
    if (s == "none") return PruneLevel::None;
    if (s == "cons" || s == "conservative") return PruneLevel::Conservative;
    if (s == "mod" || s == "moderate") return PruneLevel::Moderate;
    throw ConfigError("unknown pruning level '" + std::string(s) + "' (expected cons, mod or none)");
}

PlanConfig PlanConfig::conservative() {
    PlanConfig c;
    c.beta = 0.10;
    c.strategy = Strategy::RoundedAvg;
    c.n_pruned = 2;
    return c;
}

PlanConfig PlanConfig::moderate() {
    PlanConfig c;
    c.beta = 0.20;
    c.strategy = Strategy::ZeroPoint;
    c.n_pruned = 4;
    return c;
}

PlanConfig PlanConfig::none() {
    PlanConfig c;
    c.beta = 1.0;
    c.strategy = Strategy::Uncompressed;
    c.n_pruned = 0;
    return c;
}

PlanConfig PlanConfig::for_level(PruneLevel level) {
    switch (level) {
        case PruneLevel::None: return none();
        case PruneLevel::Conservative: return conservative();
        case PruneLevel::Moderate: return moderate();
        case PruneLevel::Custom: break;
    }
    return PlanConfig{};
}

void PlanConfig::validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must be in [0, 1], got " + std::to_string(beta));
    if (c_h == 0) throw ConfigError("c_h must be at least 1");
    if (group_size == 0 || group_size > 255) {
        throw ConfigError("group size must be in [1, 255], got " + std::to_string(group_size));
    }
    if (strategy == Strategy::Uncompressed) {
        if (n_pruned != 0) throw ConfigError("an uncompressed plan cannot prune columns");
    } else if (n_pruned < 1 || n_pruned > kMaxPruned) {
        throw ConfigError("n_pruned must be in [1, 6], got " + std::to_string(n_pruned));
    }
}

namespace {

// Channel ids of one layer, most sensitive first, ties by channel id.
std::vector<std::uint32_t> layer_order(const QuantizedLayer& layer) {
    const auto s = channel_sensitivity(layer);
    std::vector<std::uint32_t> order(layer.channels);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return s[a] > s[b]; });
    return order;
}

}  // namespace

std::set<ChannelId> rank_channels_global(std::span<const QuantizedLayer> model, double beta) {
    if (model.empty()) throw ConfigError("model has no layers");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must be in [0, 1]");

    struct Entry {
        double score;
        ChannelId id;
    };
    std::vector<Entry> all;
    for (std::size_t l = 0; l < model.size(); ++l) {
        validate(model[l]);
        const auto s = channel_sensitivity(model[l]);
        for (std::size_t c = 0; c < s.size(); ++c) {
            all.push_back({s[c], {static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(c)}});
        }
    }
    // all is already in (layer, channel) order, so a stable sort keeps ties deterministic
    std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score > b.score; });

    const auto total = static_cast<double>(all.size());
    const auto count = std::min(all.size(), static_cast<std::size_t>(std::ceil(beta * total - 1e-9)));
    std::set<ChannelId> out;
    for (std::size_t i = 0; i < count; ++i) out.insert(all[i].id);
    return out;
}

PrunePlan align_plan(std::span<const QuantizedLayer> model, const std::set<ChannelId>& sensitive,
                     const PlanConfig& cfg) {
    cfg.validate();
    PrunePlan plan;
    plan.config = cfg;
    for (std::size_t l = 0; l < model.size(); ++l) {
        const auto& layer = model[l];
        validate(layer);
        const auto lid = static_cast<std::uint32_t>(l);
        const auto first = sensitive.lower_bound(ChannelId{lid, 0});
        const auto last = sensitive.lower_bound(ChannelId{lid + 1, 0});
        const auto marked = static_cast<std::size_t>(std::distance(first, last));

        std::size_t count = (marked + cfg.c_h - 1) / cfg.c_h * cfg.c_h;
        if (cfg.strategy == Strategy::Uncompressed) count = layer.channels;
        count = std::min(count, layer.channels);

        const auto order = layer_order(layer);
        LayerPlan lp;
        lp.name = layer.name;
        lp.strategy = cfg.strategy;
        lp.n_pruned = cfg.n_pruned;
        lp.sensitive.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
        lp.normal.assign(order.begin() + static_cast<std::ptrdiff_t>(count), order.end());
        std::sort(lp.sensitive.begin(), lp.sensitive.end());
        std::sort(lp.normal.begin(), lp.normal.end());
        lp.permutation = lp.sensitive;
        lp.permutation.insert(lp.permutation.end(), lp.normal.begin(), lp.normal.end());
        plan.layers.push_back(std::move(lp));
    }
    return plan;
}

PrunePlan make_plan(std::span<const QuantizedLayer> model, const PlanConfig& cfg) {
    cfg.validate();
    return align_plan(model, rank_channels_global(model, cfg.beta), cfg);
}

namespace {

void check_plan_for(const QuantizedLayer& layer, const LayerPlan& plan) {
    if (plan.permutation.size() != layer.channels ||
        plan.sensitive.size() + plan.normal.size() != layer.channels) {
        throw ConfigError("plan for layer '" + layer.name + "' does not cover its " +
                          std::to_string(layer.channels) + " channels");
    }
    std::vector<bool> seen(layer.channels, false);
    for (auto c : plan.permutation) {
        if (c >= layer.channels || seen[c]) {
            throw ConfigError("plan for layer '" + layer.name + "' is not a permutation");
        }
        seen[c] = true;
    }
}

}  // namespace

CompressedLayer apply_plan(const QuantizedLayer& layer, const LayerPlan& plan, std::size_t group_size) {
    validate(layer);
    check_plan_for(layer, plan);
    if (group_size == 0 || group_size > 255) throw ConfigError("group size must be in [1, 255]");

    CompressedLayer out;
    out.name = layer.name;
    out.kind = layer.kind;
    out.dims = layer.dims;
    out.channels = layer.channels;
    out.reduction_length = layer.reduction_length();
    out.group_size = group_size;
    out.strategy = plan.strategy;
    out.n_pruned = plan.n_pruned;
    out.index_map = plan.permutation;
    out.sensitive_count = plan.sensitive.size();

    const std::size_t k = out.reduction_length;
    out.sensitive_block.reserve(out.sensitive_count * k);
    for (std::size_t p = 0; p < out.sensitive_count; ++p) {
        const auto w = layer.channel(plan.permutation[p]);
        out.sensitive_block.insert(out.sensitive_block.end(), w.begin(), w.end());
    }

    if (out.sensitive_count < out.channels && plan.strategy == Strategy::Uncompressed) {
        throw ConfigError("layer '" + layer.name + "' has normal channels but no pruning strategy");
    }
    out.groups.reserve((out.channels - out.sensitive_count) * out.groups_per_channel());
    for (std::size_t p = out.sensitive_count; p < out.channels; ++p) {
        const auto w = layer.channel(plan.permutation[p]);
        for (std::size_t start = 0; start < k; start += group_size) {
            const auto slice = w.subspan(start, std::min(group_size, k - start));
            auto res = plan.strategy == Strategy::RoundedAvg ? compress_rounded_avg(slice, plan.n_pruned)
                                                             : compress_zero_point(slice, plan.n_pruned);
            out.groups.push_back(pad_group(std::move(res.compressed), group_size));
        }
    }
    return out;
}

CompressedModel apply_plan(std::span<const QuantizedLayer> model, const PrunePlan& plan, std::string model_name) {
    if (plan.layers.size() != model.size()) throw ConfigError("plan and model have different layer counts");
    CompressedModel out;
    out.name = std::move(model_name);
    out.group_size = plan.config.group_size;
    out.layers.reserve(model.size());
    for (std::size_t l = 0; l < model.size(); ++l) {
        out.layers.push_back(apply_plan(model[l], plan.layers[l], plan.config.group_size));
    }
    return out;
}

std::vector<std::int8_t> decompress_layer(const CompressedLayer& layer) {
    const std::size_t k = layer.reduction_length;
    const std::size_t gpc = layer.groups_per_channel();
    if (layer.index_map.size() != layer.channels || layer.sensitive_count > layer.channels ||
        layer.sensitive_block.size() != layer.sensitive_count * k ||
        layer.groups.size() != (layer.channels - layer.sensitive_count) * gpc) {
        throw FormatError("compressed layer '" + layer.name + "' is inconsistent");
    }
    std::vector<std::int8_t> out(layer.channels * k);
    for (std::size_t p = 0; p < layer.channels; ++p) {
        const std::size_t orig = layer.index_map[p];
        if (orig >= layer.channels) throw FormatError("channel index out of range in layer '" + layer.name + "'");
        auto* dst = out.data() + orig * k;
        if (p < layer.sensitive_count) {
            std::copy_n(layer.sensitive_block.data() + p * k, k, dst);
            continue;
        }
        const std::size_t base = (p - layer.sensitive_count) * gpc;
        for (std::size_t g = 0; g < gpc; ++g) {
            const auto values = decompress(layer.groups[base + g]);
            const std::size_t start = g * layer.group_size;
            std::copy_n(values.begin(), std::min(layer.group_size, k - start), dst + start);
        }
    }
    return out;
}

std::uint64_t stored_bits(const CompressedLayer& layer) {
    return static_cast<std::uint64_t>(layer.sensitive_count) * layer.reduction_length * 8 +
           static_cast<std::uint64_t>(layer.groups.size()) * compressed_group_bits(layer.group_size, layer.n_pruned);
}

double effective_bits(const CompressedLayer& layer) {
    return static_cast<double>(stored_bits(layer)) / static_cast<double>(layer.channels * layer.reduction_length);
}

double effective_bits(const CompressedModel& model) {
    std::uint64_t bits = 0;
    std::uint64_t weights = 0;
    for (const auto& l : model.layers) {
        bits += stored_bits(l);
        weights += l.channels * l.reduction_length;
    }
    return weights == 0 ? 0.0 : static_cast<double>(bits) / static_cast<double>(weights);
}

ReorderedWeights reorder_channels(const QuantizedLayer& layer, const LayerPlan& plan) {
    check_plan_for(layer, plan);
    ReorderedWeights out;
    out.index = plan.permutation;
    out.weight.reserve(layer.weight.size());
    for (auto c : plan.permutation) {
        const auto w = layer.channel(c);
        out.weight.insert(out.weight.end(), w.begin(), w.end());
    }
    return out;
}

std::vector<std::int64_t> unshuffle_outputs(std::span<const std::int64_t> outputs, std::size_t row_length,
                                            std::span<const std::uint32_t> index) {
    if (outputs.size() != index.size() * row_length) {
        throw ShapeError("output tensor has " + std::to_string(outputs.size()) + " values, expected " +
                         std::to_string(index.size()) + " rows of " + std::to_string(row_length));
    }
    std::vector<std::int64_t> out(outputs.size());
    for (std::size_t p = 0; p < index.size(); ++p) {
        if (index[p] >= index.size()) throw ShapeError("channel index out of range");
        std::copy_n(outputs.data() + p * row_length, row_length, out.data() + index[p] * row_length);
    }
    return out;
}

std::string plan_to_json(const PrunePlan& plan) {
    nlohmann::json j;
    j["group_size"] = plan.config.group_size;
    j["c_h"] = plan.config.c_h;
    j["beta"] = plan.config.beta;
    j["strategy"] = std::string(to_string(plan.config.strategy));
    j["n_pruned"] = plan.config.n_pruned;
    auto& layers = j["layers"] = nlohmann::json::array();
    for (const auto& l : plan.layers) {
        layers.push_back({{"name", l.name},
                          {"strategy", std::string(to_string(l.strategy))},
                          {"n_pruned", l.n_pruned},
                          {"sensitive", l.sensitive},
                          {"normal", l.normal},
                          {"permutation", l.permutation}});
    }
    return j.dump(2);
}

PrunePlan plan_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        PrunePlan plan;
        plan.config.group_size = j.at("group_size").get<std::size_t>();
        plan.config.c_h = j.at("c_h").get<std::size_t>();
        plan.config.beta = j.at("beta").get<double>();
        plan.config.strategy = strategy_from_string(j.at("strategy").get<std::string>());
        plan.config.n_pruned = j.at("n_pruned").get<int>();
        for (const auto& l : j.at("layers")) {
            LayerPlan lp;
            lp.name = l.at("name").get<std::string>();
            lp.strategy = strategy_from_string(l.at("strategy").get<std::string>());
            lp.n_pruned = l.at("n_pruned").get<int>();
            lp.sensitive = l.at("sensitive").get<std::vector<std::uint32_t>>();
            lp.normal = l.at("normal").get<std::vector<std::uint32_t>>();
            lp.permutation = l.at("permutation").get<std::vector<std::uint32_t>>();
            plan.layers.push_back(std::move(lp));
        }
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("plan JSON: ") + e.what());
    }
}

}  // namespace bbs
