#include "bbs/container.hpp"

#include <algorithm>
#include <string>

#include "bbs/error.hpp"
#include "bbs/io.hpp"
#include "bbs/stream.hpp"
#include "byte_io.hpp"

namespace bbs {

namespace {

void write_string(detail::ByteWriter& w, const std::string& s) {
    if (s.size() > 0xFFFF) throw ConfigError("name longer than 65535 bytes");
    w.u16(static_cast<std::uint16_t>(s.size()));
    w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

std::string read_string(detail::ByteReader& r) {
    const auto len = r.u16();
    const auto b = r.bytes(len);
    return {b.begin(), b.end()};
}

void write_dims(detail::ByteWriter& w, const LayerDims& dims) {
    std::array<std::uint32_t, 6> v{};
    std::uint8_t tag = 0;
    if (const auto* g = std::get_if<GemmDims>(&dims)) {
        tag = 1;
        v = {g->m, g->k, g->n, 0, 0, 0};
    } else if (const auto* c = std::get_if<ConvDims>(&dims)) {
        tag = 2;
        v = {c->cout, c->cin, c->kh, c->kw, c->out_h, c->out_w};
    }
    w.u8(tag);
    for (auto x : v) w.u32(x);
}

LayerDims read_dims(detail::ByteReader& r) {
    const auto tag = r.u8();
    std::array<std::uint32_t, 6> v{};
    for (auto& x : v) x = r.u32();
    switch (tag) {
        case 0: return std::monostate{};
        case 1: return GemmDims{v[0], v[1], v[2]};
        case 2: return ConvDims{v[0], v[1], v[2], v[3], v[4], v[5]};
        default: throw FormatError("container: unknown dims tag " + std::to_string(tag));
    }
}

}  // namespace

std::uint64_t layer_payload_bytes(const CompressedLayer& layer) {
    return static_cast<std::uint64_t>(layer.sensitive_block.size()) +
           static_cast<std::uint64_t>(layer.groups.size()) * record_bytes(layer.group_size, layer.n_pruned);
}

std::vector<std::uint8_t> encode_container(const CompressedModel& model) {
    if (model.group_size == 0 || model.group_size > 255) throw ConfigError("group size must be in [1, 255]");
    detail::ByteWriter w;
    w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(kContainerMagic.data()), kContainerMagic.size()));
    w.u8(kContainerVersion);
    w.u8(static_cast<std::uint8_t>(model.group_size));
    write_string(w, model.name);
    w.u32(static_cast<std::uint32_t>(model.layers.size()));

    for (const auto& l : model.layers) {
        if (l.group_size != model.group_size) {
            throw ConfigError("layer '" + l.name + "' uses a different group size than the container");
        }
        write_string(w, l.name);
        w.u8(static_cast<std::uint8_t>(l.kind));
        write_dims(w, l.dims);
        w.u8(static_cast<std::uint8_t>(l.strategy));
        w.u8(static_cast<std::uint8_t>(l.n_pruned));
        w.u32(static_cast<std::uint32_t>(l.channels));
        w.u32(static_cast<std::uint32_t>(l.reduction_length));
        w.u32(static_cast<std::uint32_t>(l.sensitive_count));
        if (l.index_map.size() != l.channels) throw ConfigError("layer '" + l.name + "': index map size mismatch");
        for (auto idx : l.index_map) w.u32(idx);
        if (l.sensitive_block.size() != l.sensitive_count * l.reduction_length) {
            throw ConfigError("layer '" + l.name + "': sensitive block size mismatch");
        }
        w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(l.sensitive_block.data()), l.sensitive_block.size()));

        const auto stream = encode_stream({l.strategy, l.n_pruned, l.group_size}, l.groups);
        w.u32(static_cast<std::uint32_t>(stream.size()));
        w.bytes(stream);
    }
    return w.take();
}

CompressedModel decode_container(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, "container");
    const auto magic = r.bytes(kContainerMagic.size());
    if (!std::equal(magic.begin(), magic.end(), kContainerMagic.begin(),
                    [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); })) {
        throw FormatError("container: bad magic");
    }
    if (const auto v = r.u8(); v != kContainerVersion) {
        throw FormatError("container: unsupported version " + std::to_string(v));
    }
    CompressedModel model;
    model.group_size = r.u8();
    if (model.group_size == 0) throw FormatError("container: zero group size");
    model.name = read_string(r);
    const auto layer_count = r.u32();

    for (std::uint32_t li = 0; li < layer_count; ++li) {
        CompressedLayer l;
        l.name = read_string(r);
        const auto kind = r.u8();
        if (kind > static_cast<std::uint8_t>(LayerKind::Conv)) {
            throw FormatError("container: layer '" + l.name + "' has unknown kind " + std::to_string(kind));
        }
        l.kind = static_cast<LayerKind>(kind);
        l.dims = read_dims(r);
        const auto strategy = r.u8();
        if (strategy > static_cast<std::uint8_t>(Strategy::ZeroPoint)) {
            throw FormatError("container: layer '" + l.name + "' has unknown strategy tag");
        }
        l.strategy = static_cast<Strategy>(strategy);
        l.n_pruned = r.u8();
        l.channels = r.u32();
        l.reduction_length = r.u32();
        l.sensitive_count = r.u32();
        l.group_size = model.group_size;
        if (l.sensitive_count > l.channels) {
            throw FormatError("container: layer '" + l.name + "' has more sensitive channels than channels");
        }

        if (r.remaining() / 4 < l.channels) throw FormatError("container: truncated index map");
        l.index_map.resize(l.channels);
        for (auto& idx : l.index_map) idx = r.u32();

        const std::uint64_t raw = static_cast<std::uint64_t>(l.sensitive_count) * l.reduction_length;
        if (raw > r.remaining()) throw FormatError("container: truncated sensitive block");
        const auto block = r.bytes(static_cast<std::size_t>(raw));
        l.sensitive_block.assign(reinterpret_cast<const std::int8_t*>(block.data()),
                                 reinterpret_cast<const std::int8_t*>(block.data()) + block.size());

        const auto stream_len = r.u32();
        auto stream = decode_stream(r.bytes(stream_len));
        const StreamHeader expected{l.strategy, l.n_pruned, l.group_size};
        if (!(stream.header == expected)) {
            throw FormatError("container: layer '" + l.name + "' stream header disagrees with the layer header");
        }
        l.groups = std::move(stream.groups);
        if (l.groups.size() != (l.channels - l.sensitive_count) * l.groups_per_channel()) {
            throw FormatError("container: layer '" + l.name + "' has the wrong number of groups");
        }
        model.layers.push_back(std::move(l));
    }
    if (r.remaining() != 0) throw FormatError("container: trailing bytes");
    return model;
}

void write_container(const std::filesystem::path& path, const CompressedModel& model) {
    write_file_atomic(path, encode_container(model));
}

CompressedModel read_container(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_container(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace bbs
