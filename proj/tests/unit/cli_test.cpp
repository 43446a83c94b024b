#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sys/wait.h>

#include "bbs/container.hpp"
#include "bbs/error.hpp"
#include "bbs/io.hpp"
#include "commands.hpp"

namespace {

namespace fs = std::filesystem;
using namespace bbs::cli;

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("bbs_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path gen(const std::string& sub, std::vector<std::string> layers, double sigma = 20.0, std::uint64_t seed = 1,
                 const std::string& dist = "gaussian") {
        GenOptions g;
        g.out_dir = dir_ / sub;
        g.layers = std::move(layers);
        g.sigma = sigma;
        g.seed = seed;
        g.distribution = dist;
        return run_gen_synthetic(g);
    }

    fs::path dir_;
};

TEST_F(CliTest, GenSyntheticIsDeterministic) {
    const auto a = gen("a", {"l=gemm:8,64,16"}, 20.0, 9);
    const auto b = gen("b", {"l=gemm:8,64,16"}, 20.0, 9);
    const auto c = gen("c", {"l=gemm:8,64,16"}, 20.0, 10);
    EXPECT_EQ(bbs::read_file(a.parent_path() / "l.w.bin"), bbs::read_file(b.parent_path() / "l.w.bin"));
    EXPECT_EQ(bbs::read_file(a.parent_path() / "l.s.bin"), bbs::read_file(b.parent_path() / "l.s.bin"));
    EXPECT_NE(bbs::read_file(a.parent_path() / "l.w.bin"), bbs::read_file(c.parent_path() / "l.w.bin"));
}

TEST_F(CliTest, ZeroSigmaGivesZeroWeightsAndScalesFollowMaxAbs) {
    const auto zero = load_workload(gen("z", {"gemm:4,32,8"}, 0.0));
    for (auto v : zero.layers[0].weight) ASSERT_EQ(v, 0);
    const auto w = load_workload(gen("g", {"gemm:4,64,8"}, 20.0));
    const auto& l = w.layers[0];
    for (std::size_t c = 0; c < l.channels; ++c) {
        int maxabs = 0;
        for (int v : l.channel(c)) maxabs = std::max(maxabs, std::abs(v));
        ASSERT_FLOAT_EQ(static_cast<float>(l.scales[c]), static_cast<float>(maxabs / 127.0));
    }
}

TEST_F(CliTest, AnalyzeRows) {
    const auto m = gen("m", {"a=gemm:4,128,64", "b=conv:32,16,3,3,8,8"});
    AnalyzeOptions o;
    o.manifest = m;
    o.out = dir_ / "out" / "analyze";
    const auto t = run_analyze(o);
    ASSERT_EQ(t.rows.size(), 3u);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        EXPECT_GE(t.at(r, "bbs_sparsity").get<double>(), 0.5);
        EXPECT_GT(t.at(r, "bit_sparsity_sm").get<double>(), t.at(r, "bit_sparsity_2c").get<double>());
    }
    EXPECT_EQ(t.at(2, "layer").get<std::string>(), "(model)");
    EXPECT_TRUE(fs::exists(dir_ / "out" / "analyze.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "out" / "analyze.json"));

    AnalyzeOptions z;
    z.manifest = gen("zero", {"gemm:4,32,8"}, 0.0);
    EXPECT_DOUBLE_EQ(run_analyze(z).at(0, "value_sparsity").get<double>(), 1.0);
}

TEST_F(CliTest, CompressLevelNoneIsIdentity) {
    CompressOptions o;
    o.manifest = gen("m", {"gemm:4,64,40"});
    o.out = dir_ / "none";
    o.level = "none";
    const auto res = run_compress(o);
    const auto last = res.report.rows.size() - 1;
    EXPECT_DOUBLE_EQ(res.report.at(last, "ratio").get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(res.report.at(last, "kl").get<double>(), 0.0);
    EXPECT_DOUBLE_EQ(res.report.at(last, "mse").get<double>(), 0.0);
}

TEST_F(CliTest, CompressModerateAccountsForSensitiveChannels) {
    CompressOptions o;
    o.manifest = gen("m", {"gemm:4,64,160"});
    o.out = dir_ / "mod";
    o.level = "mod";
    o.verify = true;
    const auto res = run_compress(o);
    EXPECT_TRUE(res.verified);
    EXPECT_DOUBLE_EQ(res.report.at(0, "effective_bits").get<double>(), 5.0);
    EXPECT_EQ(res.report.at(0, "sensitive").get<std::size_t>(), 32u);

    o.beta = 0.0;
    o.out = dir_ / "mod0";
    EXPECT_DOUBLE_EQ(run_compress(o).report.at(0, "effective_bits").get<double>(), 4.25);
}

TEST_F(CliTest, ContainerMatchesInMemoryPlan) {
    const auto m = gen("m", {"a=gemm:4,70,48", "b=conv:40,8,3,3,4,4"});
    CompressOptions o;
    o.manifest = m;
    o.out = dir_ / "x" / "cons";
    o.level = "cons";
    o.c_h = 8;
    const auto res = run_compress(o);
    const auto back = bbs::read_container(dir_ / "x" / "cons.bbs");
    EXPECT_EQ(back, res.model);
    const auto w = load_workload(m);
    const auto cfg = resolve_config(o);
    const auto expected = bbs::apply_plan(w.layers, bbs::make_plan(w.layers, cfg), w.model);
    EXPECT_EQ(back, expected);
    const auto plan_bytes = bbs::read_file(dir_ / "x" / "cons.plan.json");
    const auto plan = bbs::plan_from_json(std::string(plan_bytes.begin(), plan_bytes.end()));
    EXPECT_EQ(plan.layers, res.plan.layers);
}

TEST_F(CliTest, FlagCombinations) {
    CompressOptions o;
    o.level = "none";
    o.strategy = "zp";
    EXPECT_THROW(resolve_config(o), bbs::ConfigError);
    o = {};
    o.strategy = "avg";
    const auto avg = resolve_config(o);
    EXPECT_EQ(avg.strategy, bbs::Strategy::RoundedAvg);
    EXPECT_EQ(avg.n_pruned, 2);
    o.n_pruned = 9;
    EXPECT_THROW(resolve_config(o), bbs::ConfigError);
    o = {};
    o.beta = 1.5;
    EXPECT_THROW(resolve_config(o), bbs::ConfigError);
    o = {};
    o.level = "cons";
    o.n_pruned = 3;
    const auto custom = resolve_config(o);
    EXPECT_EQ(custom.strategy, bbs::Strategy::RoundedAvg);
    EXPECT_EQ(custom.n_pruned, 3);
}

TEST_F(CliTest, SimulateSpeedups) {
    const auto m = gen("m", {"a=gemm:32,128,64", "b=gemm:16,64,96"}, 20.0, 3, "uniform");
    CompressOptions c;
    c.manifest = m;
    c.out = dir_ / "mod";
    c.beta = 0.0;
    run_compress(c);

    SimulateOptions s;
    s.manifest = m;
    s.container = dir_ / "mod.bbs";
    s.models = {"stripes", "bitvert", "pragmatic", "bitlet"};
    s.pe_columns = {2, 32};
    s.functional_samples = 1000;
    s.out = dir_ / "sim";
    const auto res = run_simulate(s);
    ASSERT_TRUE(res.functional.has_value());
    EXPECT_EQ(res.functional->mismatches, 0u);
    for (std::size_t r = 0; r < res.layers.rows.size(); ++r) {
        const auto acc = res.layers.at(r, "accelerator").get<std::string>();
        if (acc == "stripes") EXPECT_DOUBLE_EQ(res.layers.at(r, "speedup").get<double>(), 1.0);
        if (acc == "bitvert") EXPECT_DOUBLE_EQ(res.layers.at(r, "speedup").get<double>(), 2.0);
    }
    std::map<std::string, std::map<std::size_t, double>> speedup;
    for (std::size_t r = 0; r < res.summary.rows.size(); ++r) {
        speedup[res.summary.at(r, "accelerator").get<std::string>()][res.summary.at(r, "pe_columns").get<std::size_t>()] =
            res.summary.at(r, "speedup").get<double>();
    }
    EXPECT_LE(speedup["pragmatic"][32], speedup["pragmatic"][2]);
    EXPECT_LE(speedup["bitlet"][32], speedup["bitlet"][2]);
    EXPECT_TRUE(fs::exists(dir_ / "sim.summary.csv"));

    const auto again = run_simulate(s);
    EXPECT_EQ(again.layers.to_csv(), res.layers.to_csv());
}

TEST_F(CliTest, SimulateBitVertFromContainerAlone) {
    const auto m = gen("m", {"gemm:8,64,64"});
    CompressOptions c;
    c.manifest = m;
    c.out = dir_ / "mod";
    run_compress(c);
    SimulateOptions s;
    s.container = dir_ / "mod.bbs";
    s.models = {"bitvert"};
    EXPECT_EQ(run_simulate(s).summary.rows.size(), 1u);
    s.container.clear();
    EXPECT_THROW(run_simulate(s), bbs::ConfigError);
    s.models = {"stripes"};
    EXPECT_THROW(run_simulate(s), bbs::ConfigError);
}

TEST_F(CliTest, BadBlobSizeIsAFormatError) {
    const auto m = gen("m", {"l=gemm:4,32,8"});
    std::ofstream(m.parent_path() / "l.w.bin", std::ios::binary | std::ios::trunc) << "short";
    AnalyzeOptions o;
    o.manifest = m;
    EXPECT_THROW(run_analyze(o), bbs::FormatError);
}

int run_tool(const std::string& args) {
    const std::string cmd = std::string(BBS_TOOL_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(CliTest, ExitCodes) {
    const auto m = gen("m", {"gemm:4,32,8"});
    EXPECT_EQ(run_tool("analyze --manifest " + m.string()), 0);
    EXPECT_EQ(run_tool("compress --manifest " + m.string() + " --level none --strategy zp --out " +
                       (dir_ / "x").string()),
              2);
    EXPECT_EQ(run_tool("simulate --models warp --manifest " + m.string()), 2);
    EXPECT_EQ(run_tool("analyze --manifest " + (dir_ / "missing.json").string()), 3);
    EXPECT_EQ(run_tool("frobnicate"), 2);
}

}  // namespace
