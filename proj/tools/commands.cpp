#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "bbs/bitplane.hpp"
#include "bbs/container.hpp"
#include "bbs/error.hpp"
#include "bbs/io.hpp"
#include "bbs/metrics.hpp"

namespace bbs::cli {

using nlohmann::json;

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const std::string& suffix) {
    auto p = prefix;
    p += suffix;
    return p;
}

void ensure_parent(const std::filesystem::path& p) {
    const auto dir = p.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
}

std::string csv_cell(const json& v) {
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string quoted = "\"";
        for (char c : s) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        return quoted + "\"";
    }
    return v.dump();
}

}  // namespace

std::string Table::to_csv() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
        os << '\n';
    }
    return os.str();
}

json Table::to_json() const {
    json out = json::array();
    for (const auto& row : rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < header.size() && i < row.size(); ++i) obj[header[i]] = row[i];
        out.push_back(std::move(obj));
    }
    return out;
}

const json& Table::at(std::size_t row, const std::string& column) const {
    const auto it = std::find(header.begin(), header.end(), column);
    if (it == header.end()) throw ConfigError("no column '" + column + "'");
    return rows.at(row).at(static_cast<std::size_t>(it - header.begin()));
}

void write_table(const std::filesystem::path& prefix, const Table& table) {
    ensure_parent(prefix);
    write_file_atomic(with_suffix(prefix, ".csv"), table.to_csv());
    write_file_atomic(with_suffix(prefix, ".json"), table.to_json().dump(2) + "\n");
}

// ---------------------------------------------------------------- analyze

Table run_analyze(const AnalyzeOptions& opts) {
    if (opts.vector_size == 0) throw ConfigError("--vector-size must be positive");
    const auto w = load_workload(opts.manifest);

    Table t;
    t.header = {"model", "layer", "weights", "value_sparsity", "bit_sparsity_2c", "bit_sparsity_sm", "bbs_sparsity"};
    const auto add = [&](const std::string& layer, const SparsityCounts& c) {
        const auto r = c.report();
        t.rows.push_back({w.model, layer, r.weights, r.value_sparsity, r.bit_sparsity_2c, r.bit_sparsity_sm,
                          r.bbs_sparsity});
    };
    SparsityCounts total;
    for (const auto& layer : w.layers) {
        const auto c = sparsity_counts(layer.weight, opts.vector_size);
        total += c;
        add(layer.name, c);
    }
    add("(model)", total);

    if (!opts.out.empty()) write_table(opts.out, t);
    return t;
}

// ---------------------------------------------------------------- compress

PlanConfig resolve_config(const CompressOptions& opts) {
    const bool custom = opts.strategy.has_value() || opts.n_pruned.has_value();
    const auto level = opts.level ? prune_level_from_string(*opts.level) : PruneLevel::Moderate;

    PlanConfig cfg = PlanConfig::for_level(level);
    if (level == PruneLevel::None) {
        if (custom) throw ConfigError("--level none cannot be combined with --strategy or --n-pruned");
        if (opts.beta && *opts.beta != 1.0) throw ConfigError("--level none keeps every channel; --beta must be 1");
    }
    if (opts.strategy) {
        const auto s = strategy_from_string(*opts.strategy);
        if (s == Strategy::Uncompressed) throw ConfigError("use --level none to disable compression");
        if (s != cfg.strategy && !opts.n_pruned && !opts.level) {
            // a bare strategy picks the column count its preset uses
            cfg.n_pruned = s == Strategy::RoundedAvg ? 2 : 4;
        }
        cfg.strategy = s;
    }
    if (opts.n_pruned) cfg.n_pruned = *opts.n_pruned;
    if (opts.beta) cfg.beta = *opts.beta;
    cfg.c_h = opts.c_h;
    cfg.group_size = opts.group_size;
    cfg.validate();
    return cfg;
}

CompressResult run_compress(const CompressOptions& opts) {
    const auto cfg = resolve_config(opts);
    const auto w = load_workload(opts.manifest);

    CompressResult res;
    res.plan = make_plan(w.layers, cfg);
    res.model = apply_plan(w.layers, res.plan, w.model);

    Table& t = res.report;
    t.header = {"model", "layer", "channels", "sensitive", "strategy", "n_pruned", "mse",
                "kl", "kl_zero_only", "effective_bits", "ratio"};
    std::vector<std::int8_t> all_orig;
    std::vector<std::int8_t> all_approx;
    std::vector<std::int8_t> all_zero_only;
    std::size_t channels = 0;
    std::size_t sensitive = 0;
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        const auto& layer = w.layers[i];
        const auto& cl = res.model.layers[i];
        const auto approx = decompress_layer(cl);
        const auto zero_only = cl.strategy == Strategy::Uncompressed
                                   ? layer.weight
                                   : prune_zero_only(layer.weight, cl.reduction_length, cl.group_size, cl.n_pruned);
        const double bits = effective_bits(cl);
        t.rows.push_back({w.model, layer.name, cl.channels, cl.sensitive_count, std::string(to_string(cl.strategy)),
                          cl.n_pruned, mse(layer.weight, approx), kl_divergence(layer.weight, approx),
                          kl_divergence(layer.weight, zero_only), bits, 8.0 / bits});
        all_orig.insert(all_orig.end(), layer.weight.begin(), layer.weight.end());
        all_approx.insert(all_approx.end(), approx.begin(), approx.end());
        all_zero_only.insert(all_zero_only.end(), zero_only.begin(), zero_only.end());
        channels += cl.channels;
        sensitive += cl.sensitive_count;
    }
    const double bits = effective_bits(res.model);
    t.rows.push_back({w.model, "(model)", channels, sensitive, std::string(to_string(cfg.strategy)), cfg.n_pruned,
                      mse(all_orig, all_approx), kl_divergence(all_orig, all_approx),
                      kl_divergence(all_orig, all_zero_only), bits, 8.0 / bits});

    const auto container_path = with_suffix(opts.out, ".bbs");
    if (!opts.out.empty()) {
        ensure_parent(opts.out);
        write_container(container_path, res.model);
        write_file_atomic(with_suffix(opts.out, ".plan.json"), plan_to_json(res.plan));
        write_table(with_suffix(opts.out, ".report"), t);
    }

    if (opts.verify) {
        const auto back = opts.out.empty() ? decode_container(encode_container(res.model)) : read_container(container_path);
        if (!(back == res.model)) throw FormatError("container does not decode to the compressed model");
        for (std::size_t i = 0; i < back.layers.size(); ++i) {
            if (decompress_layer(back.layers[i]) != decompress_layer(res.model.layers[i])) {
                throw FormatError("layer '" + back.layers[i].name + "' decompresses differently after decoding");
            }
        }
        res.verified = true;
    }
    return res;
}

// ---------------------------------------------------------------- simulate

SimulateResult run_simulate(const SimulateOptions& opts) {
    std::vector<sim::Accelerator> models;
    for (const auto& m : opts.models) models.push_back(sim::accelerator_from_string(m));
    if (models.empty()) models = sim::all_accelerators();
    if (opts.pe_columns.empty()) throw ConfigError("--pe-columns needs at least one value");

    const bool needs_raw =
        std::any_of(models.begin(), models.end(), [](sim::Accelerator a) { return a != sim::Accelerator::BitVert; });
    const bool needs_container = std::find(models.begin(), models.end(), sim::Accelerator::BitVert) != models.end();
    if (needs_raw && opts.manifest.empty()) throw ConfigError("baseline models need --manifest");
    if (needs_container && opts.container.empty()) throw ConfigError("bitvert needs --container from compress");

    Workload w;
    if (!opts.manifest.empty()) w = load_workload(opts.manifest);
    std::optional<CompressedModel> compressed;
    if (!opts.container.empty()) compressed = read_container(opts.container);
    if (compressed && !opts.manifest.empty()) {
        bool same = compressed->layers.size() == w.layers.size();
        for (std::size_t i = 0; same && i < w.layers.size(); ++i) {
            same = compressed->layers[i].name == w.layers[i].name &&
                   compressed->layers[i].channels == w.layers[i].channels &&
                   compressed->layers[i].reduction_length == w.layers[i].reduction_length();
        }
        if (!same) throw ConfigError("container and manifest describe different layers");
    }
    const std::string model_name = compressed ? compressed->name : w.model;

    SimulateResult res;
    res.layers.header = {"model", "accelerator", "pe_columns", "layer", "steps", "total_cycles", "pe_cycles",
                         "effectual", "intra_pe_stall", "inter_pe_stall", "weight_bytes", "speedup"};
    res.summary.header = {"model", "accelerator", "pe_columns", "total_cycles", "stripes_cycles", "speedup",
                          "effectual", "intra_pe_stall", "inter_pe_stall", "weight_bytes"};
    for (auto cols : opts.pe_columns) {
        if (cols == 0) throw ConfigError("--pe-columns values must be positive");
        sim::ArrayConfig array;
        array.cols = cols;
        for (auto model : models) {
            const auto report = sim::run(model, w.layers, compressed ? &*compressed : nullptr, array);
            const auto name = std::string(sim::to_string(model));
            for (const auto& l : report.layers) {
                const double speedup =
                    l.total_cycles == 0 ? 0.0 : static_cast<double>(8 * l.steps) / static_cast<double>(l.total_cycles);
                res.layers.rows.push_back({model_name, name, cols, l.layer, l.steps, l.total_cycles, l.pe_cycles,
                                           l.effectual, l.intra_pe_stall, l.inter_pe_stall, l.weight_bytes, speedup});
            }
            const std::uint64_t stripes = 8 * report.steps();
            const double speedup = report.total_cycles() == 0
                                       ? 0.0
                                       : static_cast<double>(stripes) / static_cast<double>(report.total_cycles());
            res.summary.rows.push_back({model_name, name, cols, report.total_cycles(), stripes, speedup,
                                        report.effectual(), report.intra_pe_stall(), report.inter_pe_stall(),
                                        report.weight_bytes()});
        }
    }
    if (compressed && opts.functional_samples > 0) {
        res.functional = sim::functional_check(*compressed, opts.functional_samples, opts.seed);
    }

    if (!opts.out.empty()) {
        write_table(with_suffix(opts.out, ".layers"), res.layers);
        write_table(with_suffix(opts.out, ".summary"), res.summary);
    }
    return res;
}

// ---------------------------------------------------------------- gen-synthetic

namespace {

std::vector<std::uint32_t> parse_numbers(const std::string& text, const std::string& spec) {
    std::vector<std::uint32_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || used == 0 || v == 0 || v > 0xFFFFFFFFul) {
            throw ConfigError("bad layer shape '" + spec + "'");
        }
        out.push_back(static_cast<std::uint32_t>(v));
    }
    return out;
}

QuantizedLayer parse_layer_spec(const std::string& spec, std::size_t index) {
    QuantizedLayer layer;
    std::string body = spec;
    layer.name = "layer" + std::to_string(index);
    if (const auto eq = body.find('='); eq != std::string::npos) {
        layer.name = body.substr(0, eq);
        body = body.substr(eq + 1);
        if (layer.name.empty()) throw ConfigError("empty layer name in '" + spec + "'");
    }
    const auto colon = body.find(':');
    if (colon == std::string::npos) throw ConfigError("layer shape '" + spec + "' needs KIND:DIMS");
    layer.kind = layer_kind_from_string(body.substr(0, colon));
    const auto d = parse_numbers(body.substr(colon + 1), spec);
    if (layer.kind == LayerKind::Gemm) {
        if (d.size() != 3) throw ConfigError("gemm shape needs M,K,N in '" + spec + "'");
        layer.dims = GemmDims{d[0], d[1], d[2]};
        layer.channels = d[2];
        layer.weight.resize(static_cast<std::size_t>(d[1]) * d[2]);
    } else {
        if (d.size() != 6) throw ConfigError("conv shape needs Cout,Cin,kh,kw,out_h,out_w in '" + spec + "'");
        layer.dims = ConvDims{d[0], d[1], d[2], d[3], d[4], d[5]};
        layer.channels = d[0];
        layer.weight.resize(static_cast<std::size_t>(d[0]) * d[1] * d[2] * d[3]);
    }
    return layer;
}

}  // namespace

Workload generate_synthetic(const GenOptions& opts) {
    if (opts.distribution != "gaussian" && opts.distribution != "uniform") {
        throw ConfigError("--dist must be gaussian or uniform");
    }
    if (!(opts.sigma >= 0.0) || !std::isfinite(opts.sigma)) throw ConfigError("--sigma must be non-negative");
    std::vector<std::string> specs = opts.layers;
    if (specs.empty()) specs = {"fc=gemm:64,256,128"};

    Workload w;
    w.model = opts.name;
    std::mt19937_64 rng(opts.seed);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        auto layer = parse_layer_spec(specs[i], i);
        for (const auto& other : w.layers) {
            if (other.name == layer.name) throw ConfigError("duplicate layer name '" + layer.name + "'");
        }
        if (opts.distribution == "uniform") {
            std::uniform_int_distribution<int> dist(-128, 127);
            for (auto& v : layer.weight) v = static_cast<std::int8_t>(dist(rng));
        } else if (opts.sigma > 0.0) {
            std::normal_distribution<double> dist(0.0, opts.sigma);
            for (auto& v : layer.weight) v = static_cast<std::int8_t>(std::clamp(std::lround(dist(rng)), -128l, 127l));
        }
        // symmetric quantization: the scale maps the channel's largest
        // magnitude onto 127
        layer.scales.resize(layer.channels);
        for (std::size_t c = 0; c < layer.channels; ++c) {
            int maxabs = 0;
            for (auto v : layer.channel(c)) maxabs = std::max(maxabs, std::abs(static_cast<int>(v)));
            // stored as float32 on disk, so keep the float value in memory too
            layer.scales[c] = static_cast<float>(static_cast<double>(std::max(maxabs, 1)) / 127.0);
        }
        w.layers.push_back(std::move(layer));
    }
    return w;
}

std::filesystem::path run_gen_synthetic(const GenOptions& opts) {
    if (opts.out_dir.empty()) throw ConfigError("--out directory is required");
    const auto w = generate_synthetic(opts);
    const auto manifest = opts.out_dir / "manifest.json";
    save_workload(manifest, w);
    return manifest;
}

}  // namespace bbs::cli
