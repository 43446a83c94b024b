#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bbs/planner.hpp"
#include "bbs/sim.hpp"
#include "manifest.hpp"

namespace bbs::cli {

/// Rows of plain values; rendered as CSV (header row, '.' decimals) and as a
/// JSON array of objects keyed by column.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<nlohmann::json>> rows;

    std::string to_csv() const;
    nlohmann::json to_json() const;
    /// Column value of a row, looked up by header name.
    const nlohmann::json& at(std::size_t row, const std::string& column) const;
};

/// Writes PREFIX.csv and PREFIX.json.
void write_table(const std::filesystem::path& prefix, const Table& table);

struct AnalyzeOptions {
    std::filesystem::path manifest;
    std::filesystem::path out;  ///< output prefix; empty skips writing
    std::size_t vector_size = 8;
};

/// One row per layer plus a model aggregate row named "(model)".
Table run_analyze(const AnalyzeOptions& opts);

struct CompressOptions {
    std::filesystem::path manifest;
    std::filesystem::path out;
    std::optional<std::string> level;
    std::optional<std::string> strategy;
    std::optional<int> n_pruned;
    std::optional<double> beta;
    std::size_t c_h = 32;
    std::size_t group_size = 32;
    bool verify = false;
};

/// Level presets with explicit overrides applied on top. Throws ConfigError
/// for contradictory combinations.
PlanConfig resolve_config(const CompressOptions& opts);

struct CompressResult {
    PrunePlan plan;
    CompressedModel model;
    Table report;
    bool verified = false;
};

/// Writes PREFIX.bbs, PREFIX.plan.json and PREFIX.report.{csv,json}.
CompressResult run_compress(const CompressOptions& opts);

struct SimulateOptions {
    std::filesystem::path manifest;   ///< needed by the baselines
    std::filesystem::path container;  ///< needed by bitvert
    std::vector<std::string> models;
    std::vector<std::size_t> pe_columns{32};
    std::uint64_t seed = 1;
    std::uint64_t functional_samples = 0;
    std::filesystem::path out;
};

struct SimulateResult {
    Table layers;   ///< one row per (pe_columns, model, layer)
    Table summary;  ///< one row per (pe_columns, model)
    std::optional<sim::FunctionalCheck> functional;
};

/// Writes PREFIX.layers.{csv,json} and PREFIX.summary.{csv,json}.
SimulateResult run_simulate(const SimulateOptions& opts);

struct GenOptions {
    std::filesystem::path out_dir;
    std::string name = "synthetic";
    /// "[name=]gemm:M,K,N" or "[name=]conv:Cout,Cin,kh,kw,out_h,out_w"
    std::vector<std::string> layers;
    std::string distribution = "gaussian";
    double sigma = 20.0;
    std::uint64_t seed = 1;
};

/// Generates the layers in memory; deterministic for a given seed.
Workload generate_synthetic(const GenOptions& opts);

/// generate_synthetic plus OUT_DIR/manifest.json and the blobs.
std::filesystem::path run_gen_synthetic(const GenOptions& opts);

}  // namespace bbs::cli
