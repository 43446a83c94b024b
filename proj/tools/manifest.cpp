#include "manifest.hpp"

#include <bit>
#include <cstring>

#include <nlohmann/json.hpp>

#include "bbs/error.hpp"
#include "bbs/io.hpp"

namespace bbs::cli {

using nlohmann::json;

namespace {

std::uint32_t dim(const json& d, const char* key) {
    if (!d.contains(key)) throw FormatError(std::string("manifest dims missing '") + key + "'");
    const auto v = d.at(key).get<std::int64_t>();
    if (v < 0 || v > 0xFFFFFFFFll) throw FormatError(std::string("manifest dim '") + key + "' out of range");
    return static_cast<std::uint32_t>(v);
}

std::size_t reduction_of(const LayerDims& dims) {
    if (const auto* g = std::get_if<GemmDims>(&dims)) return g->k;
    if (const auto* c = std::get_if<ConvDims>(&dims)) return static_cast<std::size_t>(c->cin) * c->kh * c->kw;
    return 0;
}

}  // namespace

Manifest parse_manifest(const std::string& text) {
    Manifest m;
    try {
        const auto j = json::parse(text);
        m.model = j.value("model", std::string("model"));
        for (const auto& l : j.at("layers")) {
            ManifestLayer ml;
            ml.name = l.at("name").get<std::string>();
            ml.kind = layer_kind_from_string(l.value("kind", std::string("gemm")));
            ml.channels = l.at("channels").get<std::size_t>();
            ml.weights = l.at("weights").get<std::string>();
            ml.scales = l.value("scales", std::string());
            if (l.contains("dims")) {
                const auto& d = l.at("dims");
                if (ml.kind == LayerKind::Gemm) {
                    ml.dims = GemmDims{dim(d, "m"), dim(d, "k"), dim(d, "n")};
                } else {
                    ml.dims = ConvDims{dim(d, "cout"), dim(d, "cin"), dim(d, "kh"),
                                       dim(d, "kw"), dim(d, "out_h"), dim(d, "out_w")};
                }
            }
            m.layers.push_back(std::move(ml));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

std::string manifest_to_json(const Manifest& m) {
    json j;
    j["model"] = m.model;
    auto& layers = j["layers"] = json::array();
    for (const auto& l : m.layers) {
        json jl;
        jl["name"] = l.name;
        jl["kind"] = std::string(to_string(l.kind));
        jl["channels"] = l.channels;
        if (const auto* g = std::get_if<GemmDims>(&l.dims)) {
            jl["dims"] = {{"m", g->m}, {"k", g->k}, {"n", g->n}};
        } else if (const auto* c = std::get_if<ConvDims>(&l.dims)) {
            jl["dims"] = {{"cout", c->cout}, {"cin", c->cin}, {"kh", c->kh},
                          {"kw", c->kw},     {"out_h", c->out_h}, {"out_w", c->out_w}};
        }
        jl["weights"] = l.weights;
        if (!l.scales.empty()) jl["scales"] = l.scales;
        layers.push_back(std::move(jl));
    }
    return j.dump(2) + "\n";
}

Workload load_workload(const std::filesystem::path& manifest_path) {
    const auto raw = read_file(manifest_path);
    const auto m = parse_manifest(std::string(raw.begin(), raw.end()));
    const auto base = manifest_path.parent_path();
    const auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path : base / path;
    };

    Workload w;
    w.model = m.model;
    for (const auto& ml : m.layers) {
        QuantizedLayer layer;
        layer.name = ml.name;
        layer.kind = ml.kind;
        layer.dims = ml.dims;
        layer.channels = ml.channels;

        const auto wpath = resolve(ml.weights);
        const auto bytes = read_file(wpath);
        const std::size_t k = reduction_of(ml.dims);
        if (k != 0 && bytes.size() != k * ml.channels) {
            throw FormatError(wpath.string() + ": holds " + std::to_string(bytes.size()) + " bytes, dims need " +
                              std::to_string(k * ml.channels));
        }
        layer.weight.resize(bytes.size());
        std::memcpy(layer.weight.data(), bytes.data(), bytes.size());

        if (!ml.scales.empty()) {
            const auto spath = resolve(ml.scales);
            const auto sbytes = read_file(spath);
            if (sbytes.size() != 4 * ml.channels) {
                throw FormatError(spath.string() + ": expected " + std::to_string(ml.channels) + " float32 scales");
            }
            static_assert(std::endian::native == std::endian::little, "scale blobs are read in host order");
            layer.scales.resize(ml.channels);
            for (std::size_t c = 0; c < ml.channels; ++c) {
                float f = 0.0f;
                std::memcpy(&f, sbytes.data() + 4 * c, 4);
                layer.scales[c] = f;
            }
        }
        try {
            validate(layer);
        } catch (const ConfigError& e) {
            throw FormatError(wpath.string() + ": " + e.what());
        }
        w.layers.push_back(std::move(layer));
    }
    return w;
}

void save_workload(const std::filesystem::path& manifest_path, const Workload& workload) {
    const auto base = manifest_path.parent_path();
    if (!base.empty()) std::filesystem::create_directories(base);
    Manifest m;
    m.model = workload.model;
    for (const auto& layer : workload.layers) {
        ManifestLayer ml;
        ml.name = layer.name;
        ml.kind = layer.kind;
        ml.dims = layer.dims;
        ml.channels = layer.channels;
        ml.weights = layer.name + ".w.bin";
        write_file_atomic(base / ml.weights,
                          std::span(reinterpret_cast<const std::uint8_t*>(layer.weight.data()), layer.weight.size()));
        if (!layer.scales.empty()) {
            ml.scales = layer.name + ".s.bin";
            std::vector<std::uint8_t> sbytes(4 * layer.scales.size());
            for (std::size_t c = 0; c < layer.scales.size(); ++c) {
                const auto f = static_cast<float>(layer.scales[c]);
                std::memcpy(sbytes.data() + 4 * c, &f, 4);
            }
            write_file_atomic(base / ml.scales, sbytes);
        }
        m.layers.push_back(std::move(ml));
    }
    write_file_atomic(manifest_path, manifest_to_json(m));
}

}  // namespace bbs::cli
