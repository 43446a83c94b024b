#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "bbs/container.hpp"
#include "bbs/error.hpp"
#include "bbs/stream.hpp"
#include "models.hpp"
#include "oracles.hpp"

namespace {

using bbs::Strategy;

std::vector<bbs::CompressedGroup> random_groups(std::mt19937_64& rng, Strategy s, int n, std::size_t size,
                                                std::size_t count) {
    std::vector<bbs::CompressedGroup> out;
    for (std::size_t i = 0; i < count; ++i) {
        const auto g = oracle::varied_group(rng, size);
        if (s == Strategy::RoundedAvg) out.push_back(bbs::compress_rounded_avg(g, n).compressed);
        else if (s == Strategy::ZeroPoint) out.push_back(bbs::compress_zero_point(g, n).compressed);
        else out.push_back(bbs::make_uncompressed(g));
    }
    return out;
}

TEST(GroupStream, EmptyStreamIsHeaderOnly) {
    const bbs::StreamHeader h{Strategy::ZeroPoint, 4, 32};
    const auto bytes = bbs::encode_stream(h, {});
    EXPECT_EQ(bytes.size(), bbs::kStreamHeaderBytes);
    const auto back = bbs::decode_stream(bytes);
    EXPECT_EQ(back.header, h);
    EXPECT_TRUE(back.groups.empty());
}

TEST(GroupStream, OneGroupOfThirtyTwoAtFourPrunedIsSeventeenBytes) {
    EXPECT_EQ(bbs::record_bytes(32, 4), 17u);
    std::mt19937_64 rng(31);
    const auto groups = random_groups(rng, Strategy::ZeroPoint, 4, 32, 1);
    const auto bytes = bbs::encode_stream({Strategy::ZeroPoint, 4, 32}, groups);
    EXPECT_EQ(bytes.size(), bbs::kStreamHeaderBytes + 17);
}

TEST(GroupStream, MetadataBytePacksRedundantCountAndConstant) {
    bbs::CompressedGroup cg = bbs::evaluate_zero_point(std::vector<std::int8_t>(8, 1), 4, -5).compressed;
    const int r = cg.num_redundant;
    EXPECT_EQ(bbs::pack_metadata(cg), static_cast<std::uint8_t>((r << 6) | (-5 & 0x3F)));
}

TEST(GroupStream, RandomStreamsRoundTripByteExactly) {
    std::mt19937_64 rng(32);
    for (int t = 0; t < 200; ++t) {
        const auto s = static_cast<Strategy>(rng() % 3);
        const int n = s == Strategy::Uncompressed ? 0 : 1 + static_cast<int>(rng() % 6);
        const std::size_t size = 1 + rng() % 64;
        const auto groups = random_groups(rng, s, n, size, rng() % 20);
        const bbs::StreamHeader h{s, n, size};
        const auto bytes = bbs::encode_stream(h, groups);
        ASSERT_EQ(bytes.size(), bbs::kStreamHeaderBytes + groups.size() * bbs::record_bytes(size, n));
        const auto back = bbs::decode_stream(bytes);
        ASSERT_EQ(back.header, h);
        ASSERT_EQ(back.groups, groups);
        ASSERT_EQ(bbs::encode_stream(back.header, back.groups), bytes);
    }
}

TEST(GroupStream, MalformedInputIsAFormatError) {
    std::mt19937_64 rng(33);
    const auto groups = random_groups(rng, Strategy::RoundedAvg, 2, 16, 3);
    const auto bytes = bbs::encode_stream({Strategy::RoundedAvg, 2, 16}, groups);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(bbs::decode_stream(bad_magic), bbs::FormatError);
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
        EXPECT_THROW(bbs::decode_stream(std::span(bytes).first(cut)), bbs::FormatError) << cut;
    }
    auto trailing = bytes;
    trailing.push_back(0);
    EXPECT_THROW(bbs::decode_stream(trailing), bbs::FormatError);
}

TEST(GroupStream, CorruptConstantIsRejected) {
    // rounded averaging over 2 generated columns cannot hold a constant of 5
    const std::vector<std::int8_t> g{40, -40, 90, -100};
    const auto groups = std::vector{bbs::compress_rounded_avg(g, 2).compressed};
    ASSERT_EQ(groups[0].num_redundant, 0);
    auto bytes = bbs::encode_stream({Strategy::RoundedAvg, 2, 4}, groups);
    bytes[bbs::kStreamHeaderBytes] = 5;
    EXPECT_THROW(bbs::decode_stream(bytes), bbs::FormatError);
}

TEST(GroupStream, HeaderMismatchIsAConfigError) {
    std::mt19937_64 rng(34);
    const auto groups = random_groups(rng, Strategy::ZeroPoint, 4, 16, 2);
    EXPECT_THROW(bbs::encode_stream({Strategy::ZeroPoint, 3, 16}, groups), bbs::ConfigError);
    EXPECT_THROW(bbs::encode_stream({Strategy::RoundedAvg, 4, 16}, groups), bbs::ConfigError);
    EXPECT_THROW(bbs::encode_stream({Strategy::ZeroPoint, 4, 8}, groups), bbs::ConfigError);
}

bbs::CompressedModel sample_model(std::mt19937_64& rng, const bbs::PlanConfig& cfg) {
    std::vector<bbs::QuantizedLayer> layers{testing_models::gemm_layer("a", 40, 70, rng),
                                            testing_models::gemm_layer("b", 33, 32, rng)};
    bbs::QuantizedLayer conv = testing_models::gemm_layer("c", 8, 27, rng);
    conv.kind = bbs::LayerKind::Conv;
    conv.dims = bbs::ConvDims{8, 3, 3, 3, 5, 7};
    layers.push_back(conv);
    return bbs::apply_plan(layers, bbs::make_plan(layers, cfg), "sample");
}

TEST(Container, RoundTripsEveryLevel) {
    std::mt19937_64 rng(35);
    for (auto cfg : {bbs::PlanConfig::conservative(), bbs::PlanConfig::moderate(), bbs::PlanConfig::none()}) {
        cfg.c_h = 4;
        const auto model = sample_model(rng, cfg);
        const auto bytes = bbs::encode_container(model);
        const auto back = bbs::decode_container(bytes);
        ASSERT_EQ(back, model);
        ASSERT_EQ(bbs::encode_container(back), bytes);
    }
}

TEST(Container, TruncationAndBadMagicAreFormatErrors) {
    std::mt19937_64 rng(36);
    auto cfg = bbs::PlanConfig::moderate();
    cfg.c_h = 8;
    const auto bytes = bbs::encode_container(sample_model(rng, cfg));
    for (std::size_t cut = 0; cut < bytes.size(); cut += 1 + cut / 16) {
        EXPECT_THROW(bbs::decode_container(std::span(bytes).first(cut)), bbs::FormatError) << cut;
    }
    auto bad = bytes;
    bad[3] = '2';
    EXPECT_THROW(bbs::decode_container(bad), bbs::FormatError);
}

TEST(Container, FileRoundTripAndMissingFile) {
    std::mt19937_64 rng(37);
    const auto model = sample_model(rng, bbs::PlanConfig::conservative());
    const auto dir = std::filesystem::temp_directory_path() / "bbs_container_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "m.bbs";
    bbs::write_container(path, model);
    EXPECT_EQ(bbs::read_container(path), model);
    EXPECT_FALSE(std::filesystem::exists(dir / "m.bbs.tmp"));
    EXPECT_THROW(bbs::read_container(dir / "missing.bbs"), bbs::IoError);
    std::filesystem::remove_all(dir);
}

}  // namespace
