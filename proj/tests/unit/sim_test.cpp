#include <gtest/gtest.h>

#include <random>
#include <set>

#include "bbs/error.hpp"
#include "bbs/sim.hpp"
#include "models.hpp"
#include "oracles.hpp"

namespace {

using bbs::sim::Accelerator;

TEST(Lowering, PointwiseConvBecomesGemm) {
    const auto ts = bbs::sim::lower_dims("c", bbs::ConvDims{32, 64, 1, 1, 56, 56});
    EXPECT_EQ(ts.m, 3136u);
    EXPECT_EQ(ts.k, 64u);
    EXPECT_EQ(ts.n, 32u);
}

TEST(Lowering, ThreeByThreeStem) {
    EXPECT_EQ(bbs::sim::lower_dims("c", bbs::ConvDims{16, 3, 3, 3, 8, 8}).k, 27u);
}

TEST(Lowering, TileCountsMatchCeilingArithmetic) {
    std::mt19937_64 rng(61);
    for (int t = 0; t < 200; ++t) {
        const auto m = static_cast<std::uint32_t>(1 + rng() % 300);
        const auto k = static_cast<std::uint32_t>(1 + rng() % 300);
        const auto n = static_cast<std::uint32_t>(1 + rng() % 300);
        bbs::sim::ArrayConfig a;
        a.cols = 1 + rng() % 40;
        const auto ts = bbs::sim::lower_dims("g", bbs::GemmDims{m, k, n}, a);
        std::uint64_t count = 0;
        for (std::uint32_t mm = 0; mm < m; mm += 16)
            for (std::uint32_t kk = 0; kk < k; kk += 16)
                for (std::uint32_t nn = 0; nn < n; nn += static_cast<std::uint32_t>(a.cols)) ++count;
        ASSERT_EQ(ts.steps(), count);
    }
}

TEST(Lowering, MissingDimsIsAConfigError) {
    EXPECT_THROW(bbs::sim::lower_dims("x", bbs::LayerDims{}), bbs::ConfigError);
}

TEST(GroupCycles, ZeroGroup) {
    const std::vector<std::int8_t> z(16, 0);
    EXPECT_EQ(bbs::sim::group_cycles(Accelerator::Stripes, z), 8);
    EXPECT_EQ(bbs::sim::group_cycles(Accelerator::Pragmatic, z), 1);
    EXPECT_EQ(bbs::sim::group_cycles(Accelerator::Bitlet, z), 1);
    EXPECT_EQ(bbs::sim::group_cycles(Accelerator::BitWave, z), 1);
    EXPECT_THROW(bbs::sim::group_cycles(Accelerator::BitVert, z), bbs::ConfigError);
}

TEST(GroupCycles, MinusOnes) {
    const std::vector<std::int8_t> g(16, -1);
    EXPECT_EQ(bbs::sim::group_cycles(Accelerator::Pragmatic, g), 8);
    EXPECT_EQ(bbs::sim::group_cycles(Accelerator::BitWave, g), 2);
    EXPECT_EQ(bbs::sim::group_cycles(Accelerator::Bitlet, g), 8);
}

TEST(GroupCycles, FormulasAgainstBitStringOracle) {
    std::mt19937_64 rng(62);
    for (int t = 0; t < 2000; ++t) {
        const auto g = oracle::random_bytes(rng, 1 + rng() % 16);
        int pragmatic = 0;
        int bitlet = 0;
        std::uint64_t prag_busy = 0;
        std::set<int> sm_columns;
        for (int b = 0; b < 8; ++b) {
            int ones = 0;
            for (int v : g) ones += oracle::bit(v, b);
            bitlet = std::max(bitlet, (ones + 1) / 2);
        }
        for (int v : g) {
            int ones = 0;
            for (int b = 0; b < 8; ++b) ones += oracle::bit(v, b);
            pragmatic = std::max(pragmatic, ones);
            prag_busy += static_cast<std::uint64_t>(ones);
            const int mag = std::min(std::abs(v), 127);
            if (v < 0) sm_columns.insert(7);
            for (int b = 0; b < 7; ++b) {
                if ((mag >> b) & 1) sm_columns.insert(b);
            }
        }
        ASSERT_EQ(bbs::sim::group_cycles(Accelerator::Pragmatic, g), std::max(1, pragmatic));
        ASSERT_EQ(bbs::sim::group_cost(Accelerator::Pragmatic, g).busy_lane_cycles, prag_busy);
        ASSERT_EQ(bbs::sim::group_cycles(Accelerator::Bitlet, g), std::max(1, bitlet));
        ASSERT_EQ(bbs::sim::group_cycles(Accelerator::BitWave, g), std::max(1, static_cast<int>(sm_columns.size())));
    }
}

std::vector<bbs::QuantizedLayer> workload(std::mt19937_64& rng) {
    std::vector<bbs::QuantizedLayer> w{testing_models::gemm_layer("fc1", 96, 80, rng, 20.0, 40),
                                       testing_models::uniform_layer("fc2", 50, 33, rng, 7)};
    auto conv = testing_models::gemm_layer("conv", 64, 27, rng);
    conv.kind = bbs::LayerKind::Conv;
    conv.dims = bbs::ConvDims{64, 3, 3, 3, 6, 5};
    w.push_back(conv);
    return w;
}

bbs::CompressedModel compress_all_normal(const std::vector<bbs::QuantizedLayer>& w, int n) {
    bbs::PlanConfig cfg = bbs::PlanConfig::moderate();
    cfg.beta = 0.0;
    cfg.n_pruned = n;
    return bbs::apply_plan(w, bbs::make_plan(w, cfg), "m");
}

TEST(Run, StripesIsEightCyclesPerStep) {
    std::mt19937_64 rng(63);
    const auto w = workload(rng);
    const auto r = bbs::sim::run(Accelerator::Stripes, w);
    for (const auto& l : r.layers) EXPECT_EQ(l.total_cycles, 8 * l.steps);
    // only the short tail group of each row leaves lanes idle
    double idle = 0.0;
    for (const auto& l : w) {
        const auto ts = bbs::sim::lower_layer(l, {});
        const std::size_t tail = ts.k % 16;
        if (tail != 0) idle += static_cast<double>(ts.n * 8 * (16 - tail) * ts.m) / 16.0;
    }
    EXPECT_DOUBLE_EQ(r.intra_pe_stall(), idle);
    EXPECT_DOUBLE_EQ(r.inter_pe_stall(), 0.0);
    EXPECT_EQ(r.weight_bytes(), 96u * 80 + 50 * 33 + 64 * 27);
}

TEST(Run, BitVertCyclesFollowPrunedColumns) {
    std::mt19937_64 rng(64);
    const auto w = workload(rng);
    for (int n = 1; n <= 6; ++n) {
        const auto cm = compress_all_normal(w, n);
        const auto r = bbs::sim::run_bitvert(cm);
        const auto s = bbs::sim::run(Accelerator::Stripes, w);
        for (const auto& l : r.layers) EXPECT_EQ(l.total_cycles, static_cast<std::uint64_t>(std::max(2, 8 - n)) * l.steps);
        EXPECT_DOUBLE_EQ(r.inter_pe_stall(), 0.0);
        EXPECT_DOUBLE_EQ(static_cast<double>(s.total_cycles()) / static_cast<double>(r.total_cycles()),
                         8.0 / std::max(2, 8 - n));
    }
}

TEST(Run, StallAccountingAddsUp) {
    std::mt19937_64 rng(65);
    const auto w = workload(rng);
    auto cfg = bbs::PlanConfig::moderate();
    cfg.c_h = 16;
    const auto cm = bbs::apply_plan(w, bbs::make_plan(w, cfg), "m");
    for (auto model : bbs::sim::all_accelerators()) {
        for (std::size_t cols : {2u, 7u, 32u}) {
            bbs::sim::ArrayConfig a;
            a.cols = cols;
            const auto r = bbs::sim::run(model, w, &cm, a);
            const auto stripes = bbs::sim::run(Accelerator::Stripes, w, a);
            for (const auto& l : r.layers) {
                const double sum = l.effectual + l.intra_pe_stall + l.inter_pe_stall;
                ASSERT_NEAR(sum, static_cast<double>(l.pe_cycles), 1e-6 * static_cast<double>(l.pe_cycles));
                ASSERT_GE(l.intra_pe_stall, 0.0);
                ASSERT_GE(l.inter_pe_stall, 0.0);
            }
            ASSERT_LE(r.total_cycles(), stripes.total_cycles());
        }
    }
}

TEST(Run, FullStepsMakePeCyclesEqualTotalTimesPeCount) {
    std::mt19937_64 rng(66);
    const std::vector w{testing_models::gemm_layer("a", 64, 64, rng, 20.0, 32)};
    const auto r = bbs::sim::run(Accelerator::Pragmatic, w);
    EXPECT_EQ(r.pe_cycles(), r.total_cycles() * 16 * 32);
}

TEST(Run, BitVertNeedsCompressedModel) {
    std::mt19937_64 rng(67);
    const auto w = workload(rng);
    EXPECT_THROW(bbs::sim::run(Accelerator::BitVert, w), bbs::ConfigError);
    EXPECT_THROW(bbs::sim::run(Accelerator::BitVert, w, nullptr), bbs::ConfigError);
}

TEST(Run, BitWaveTrafficCountsNonZeroColumns) {
    bbs::QuantizedLayer l;
    l.name = "t";
    l.channels = 1;
    l.weight.assign(32, 0);
    l.weight[0] = 3;    // columns 0 and 1 in the first group
    l.weight[20] = -1;  // sign and column 0 in the second
    l.dims = bbs::GemmDims{1, 32, 1};
    const auto r = bbs::sim::run(Accelerator::BitWave, std::vector{l});
    EXPECT_EQ(r.weight_bytes(), (1u + 2 * 2) + (1u + 2 * 2));
}

TEST(BaselineDot, AllModelsAgreeWithReference) {
    std::mt19937_64 rng(68);
    for (int t = 0; t < 3000; ++t) {
        const auto w = oracle::varied_group(rng, 1 + rng() % 16);
        const auto a = oracle::random_bytes(rng, w.size());
        const auto ref = oracle::dot(w, a);
        for (auto model : bbs::sim::all_accelerators()) ASSERT_EQ(bbs::sim::baseline_dot(model, w, a), ref);
    }
}

TEST(Scaling, TrendsAcrossColumnCounts) {
    std::mt19937_64 rng(69);
    const std::vector w{testing_models::uniform_layer("a", 128, 256, rng, 16),
                        testing_models::uniform_layer("b", 64, 128, rng, 16)};
    const auto cm = compress_all_normal(w, 4);
    const std::vector<std::size_t> cols{2, 4, 8, 16, 32};
    const auto models = bbs::sim::all_accelerators();
    const auto study = bbs::sim::scaling_study(models, w, &cm, cols);
    for (double s : study.speedups(Accelerator::Stripes)) EXPECT_DOUBLE_EQ(s, 1.0);
    EXPECT_TRUE(study.non_increasing(Accelerator::Pragmatic));
    EXPECT_TRUE(study.non_increasing(Accelerator::Bitlet));
    EXPECT_DOUBLE_EQ(study.spread(Accelerator::BitVert), 0.0);
    for (double s : study.speedups(Accelerator::BitVert)) EXPECT_DOUBLE_EQ(s, 2.0);
}

TEST(Functional, CompressedModelMatchesReference) {
    std::mt19937_64 rng(70);
    const auto w = workload(rng);
    auto cfg = bbs::PlanConfig::moderate();
    cfg.c_h = 8;
    const auto cm = bbs::apply_plan(w, bbs::make_plan(w, cfg), "m");
    const auto fc = bbs::sim::functional_check(cm, 5000, 3);
    EXPECT_EQ(fc.samples, 5000u);
    EXPECT_EQ(fc.mismatches, 0u);
}

TEST(Names, RoundTrip) {
    for (auto a : bbs::sim::all_accelerators()) EXPECT_EQ(bbs::sim::accelerator_from_string(bbs::sim::to_string(a)), a);
    EXPECT_THROW(bbs::sim::accelerator_from_string("eyeriss"), bbs::ConfigError);
}

}  // namespace
