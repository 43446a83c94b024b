#include <iostream>

#include <CLI11.hpp>

#include "bbs/error.hpp"
#include "commands.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

void print_table(const bbs::cli::Table& t) { std::cout << t.to_csv(); }

}  // namespace

int main(int argc, char** argv) {
    using namespace bbs::cli;

    CLI::App app{"Bi-directional bit sparsity toolkit: analyze, compress and simulate int8 weights"};
    app.require_subcommand(1);

    AnalyzeOptions analyze;
    auto* a = app.add_subcommand("analyze", "value, bit and BBS sparsity per layer");
    a->add_option("--manifest", analyze.manifest, "workload manifest JSON")->required();
    a->add_option("--vector-size", analyze.vector_size, "BBS vector length")->capture_default_str();
    a->add_option("--out", analyze.out, "output prefix for .csv/.json");

    CompressOptions compress;
    auto* c = app.add_subcommand("compress", "global binary pruning into a .bbs container");
    c->add_option("--manifest", compress.manifest, "workload manifest JSON")->required();
    c->add_option("--level", compress.level, "cons, mod or none (default mod)");
    c->add_option("--strategy", compress.strategy, "avg or zp (overrides the level)");
    c->add_option("--n-pruned", compress.n_pruned, "bit columns pruned per group");
    c->add_option("--beta", compress.beta, "minimum sensitive-channel fraction");
    c->add_option("--c-h", compress.c_h, "channels processed in parallel")->capture_default_str();
    c->add_option("--group-size", compress.group_size, "weights per group")->capture_default_str();
    c->add_option("--out", compress.out, "output prefix")->required();
    c->add_flag("--verify", compress.verify, "decode the written container and compare");

    SimulateOptions simulate;
    auto* s = app.add_subcommand("simulate", "cycle models of the accelerators");
    s->add_option("--manifest", simulate.manifest, "workload manifest JSON (baselines)");
    s->add_option("--container", simulate.container, ".bbs container (bitvert)");
    s->add_option("--models", simulate.models, "stripes,pragmatic,bitlet,bitwave,bitvert")->delimiter(',');
    s->add_option("--pe-columns", simulate.pe_columns, "PE column counts")->delimiter(',')->capture_default_str();
    s->add_option("--seed", simulate.seed, "seed for the functional check")->capture_default_str();
    s->add_option("--functional-samples", simulate.functional_samples, "PE tiles checked against the reference");
    s->add_option("--out", simulate.out, "output prefix");

    GenOptions gen;
    auto* g = app.add_subcommand("gen-synthetic", "seeded synthetic int8 workload");
    g->add_option("--out", gen.out_dir, "output directory")->required();
    g->add_option("--name", gen.name, "model name")->capture_default_str();
    g->add_option("--layer", gen.layers, "[name=]gemm:M,K,N or [name=]conv:Cout,Cin,kh,kw,out_h,out_w");
    g->add_option("--dist", gen.distribution, "gaussian or uniform")->capture_default_str();
    g->add_option("--sigma", gen.sigma, "gaussian standard deviation")->capture_default_str();
    g->add_option("--seed", gen.seed, "random seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*a) {
            print_table(run_analyze(analyze));
        } else if (*c) {
            const auto res = run_compress(compress);
            print_table(res.report);
            if (res.verified) std::cerr << "verify: container round trip is bit-exact\n";
        } else if (*s) {
            const auto res = run_simulate(simulate);
            print_table(res.summary);
            if (res.functional) {
                std::cerr << "functional: " << res.functional->mismatches << " mismatches in "
                          << res.functional->samples << " samples\n";
                if (res.functional->mismatches != 0) return kExitData;
            }
        } else if (*g) {
            std::cout << run_gen_synthetic(gen).string() << '\n';
        }
    } catch (const bbs::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
