#include "bbs/stream.hpp"

#include <algorithm>
#include <string>

#include "bbs/error.hpp"
#include "byte_io.hpp"

namespace bbs {

std::size_t record_bytes(std::size_t group_size, int n_pruned) {
    return 1 + static_cast<std::size_t>(8 - n_pruned) * ((group_size + 7) / 8);
}

std::uint8_t pack_metadata(const CompressedGroup& cg) {
    return static_cast<std::uint8_t>((cg.num_redundant << 6) | (cg.constant & 0x3F));
}

std::vector<std::uint8_t> encode_stream(const StreamHeader& header, std::span<const CompressedGroup> groups) {
    if (header.group_size == 0 || header.group_size > 255) {
        throw ConfigError("group size must be in [1, 255], got " + std::to_string(header.group_size));
    }
    if (header.n_pruned < 0 || header.n_pruned > kMaxPruned) {
        throw ConfigError("n_pruned must be in [0, 6], got " + std::to_string(header.n_pruned));
    }

    detail::ByteWriter w;
    w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(kStreamMagic.data()), kStreamMagic.size()));
    w.u8(kStreamVersion);
    w.u8(static_cast<std::uint8_t>(header.strategy));
    w.u8(static_cast<std::uint8_t>(header.n_pruned));
    w.u8(static_cast<std::uint8_t>(header.group_size));
    w.u32(static_cast<std::uint32_t>(groups.size()));

    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& cg = groups[g];
        if (cg.strategy != header.strategy || cg.n_pruned != header.n_pruned ||
            cg.group_size() != header.group_size) {
            throw ConfigError("group " + std::to_string(g) + " does not match the stream header");
        }
        validate(cg);
        w.u8(pack_metadata(cg));
        for (auto col = cg.stored.columns.rbegin(); col != cg.stored.columns.rend(); ++col) {
            w.bytes(col->bytes());
        }
    }
    return w.take();
}

GroupStream decode_stream(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, "group stream");
    const auto magic = r.bytes(kStreamMagic.size());
    if (!std::equal(magic.begin(), magic.end(), kStreamMagic.begin(),
                    [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); })) {
        throw FormatError("group stream: bad magic");
    }
    if (const auto version = r.u8(); version != kStreamVersion) {
        throw FormatError("group stream: unsupported version " + std::to_string(version));
    }

    GroupStream out;
    const auto tag = r.u8();
    if (tag > static_cast<std::uint8_t>(Strategy::ZeroPoint)) {
        throw FormatError("group stream: unknown strategy tag " + std::to_string(tag));
    }
    out.header.strategy = static_cast<Strategy>(tag);
    out.header.n_pruned = r.u8();
    out.header.group_size = r.u8();
    if (out.header.n_pruned > kMaxPruned || out.header.group_size == 0) {
        throw FormatError("group stream: invalid header");
    }
    const std::uint32_t count = r.u32();

    const std::size_t column_bytes = (out.header.group_size + 7) / 8;
    const int width = 8 - out.header.n_pruned;
    if (r.remaining() / record_bytes(out.header.group_size, out.header.n_pruned) < count) {
        throw FormatError("group stream: truncated, " + std::to_string(count) + " groups declared");
    }
    out.groups.reserve(count);
    for (std::uint32_t g = 0; g < count; ++g) {
        const std::uint8_t meta = r.u8();
        CompressedGroup cg;
        cg.strategy = out.header.strategy;
        cg.n_pruned = out.header.n_pruned;
        cg.num_redundant = meta >> 6;
        const int raw = meta & 0x3F;
        cg.constant = (cg.strategy == Strategy::ZeroPoint && raw >= 32) ? raw - 64 : raw;
        cg.stored.group_size = out.header.group_size;
        cg.stored.width = width;
        cg.stored.msb_weight = -(std::int64_t{1} << (width - 1));
        cg.stored.columns.resize(static_cast<std::size_t>(width));
        for (int b = width - 1; b >= 0; --b) {
            cg.stored.columns[static_cast<std::size_t>(b)] =
                BitVector::from_bytes(r.bytes(column_bytes), out.header.group_size);
        }
        validate(cg);
        out.groups.push_back(std::move(cg));
    }
    if (r.remaining() != 0) {
        throw FormatError("group stream: " + std::to_string(r.remaining()) + " trailing bytes");
    }
    return out;
}

}  // namespace bbs
