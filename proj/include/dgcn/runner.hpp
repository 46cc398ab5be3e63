#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgcn/baselines.hpp"
#include "dgcn/eval.hpp"
#include "dgcn/sir.hpp"
#include "dgcn/temporal_graph.hpp"
#include "dgcn/train.hpp"

namespace dgcn {

// ---------------------------------------------------------------------------
// Synthetic data

/// Random temporal digraph with persistent node heterogeneity. Each node has
/// a fixed Pareto-distributed activity a_u; in every snapshot each ordered
/// pair (u, v) is present independently with probability
/// min(1, lambda * a_u * a_v), lambda chosen so the expected mean out-degree
/// is `mean_degree`. A present pair occurs 1, 2 or 3 times (probabilities
/// 4/7, 2/7, 1/7) at uniform times inside its interval of width `delta`.
/// The node universe is always 0 .. n-1.
TemporalEdgeList generate_synthetic(int n, int snapshots, double mean_degree, std::uint64_t seed,
                                    double delta = 3600.0);

// ---------------------------------------------------------------------------
// Datasets

struct SyntheticSpec {
    int nodes = 200;
    int snapshots = 45;
    double mean_degree = 6.0;
    std::uint64_t seed = 1;
};

struct DatasetManifest {
    std::string name = "dataset";
    std::filesystem::path path;  // edge-list file; unused for synthetic data
    std::string format = "plain";  // plain: "src dst t"; konect: "% ..." comments, "src dst w t" rows
    bool directed = true;
    std::string timestamp_unit = "s";  // s, min, h, d
    double delta_hours = 1.0;
    bool rebase_time = true;  // shift timestamps so the first contact is at 0
    std::optional<SyntheticSpec> synthetic;
    std::optional<std::size_t> expected_nodes;
    std::optional<std::size_t> expected_edges;
    std::optional<int> expected_snapshots;
    std::string source_url;

    double delta_seconds() const { return delta_hours * 3600.0; }
    static DatasetManifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    nlohmann::ordered_json to_json() const;
};

double timestamp_unit_seconds(const std::string& unit);

struct DatasetStats {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    int snapshots = 0;
    double span_seconds = 0.0;
    std::size_t dropped_self_loops = 0;
    std::vector<std::string> warnings;
    double seconds = 0.0;

    nlohmann::ordered_json to_json() const;
};

struct IngestedDataset {
    TemporalEdgeList edges;
    std::vector<WeightedSnapshot> snapshots;
    DatasetStats stats;
    std::uint64_t fingerprint = 0;  // content hash of the normalised contacts
};

/// Reads (or generates) the contacts, slices snapshots and compares N, M, L
/// against the manifest's expected values. An N or M mismatch and an L
/// outside +-2 are reported as warnings, never as errors.
IngestedDataset ingest(const DatasetManifest& manifest);

// ---------------------------------------------------------------------------
// Experiments

struct ModelConfig {
    FeatureOptions features;
    int s = 0;                       // fixed s when > 0
    std::vector<int> s_candidates;   // used when s == 0
    TrainConfig train;
    std::uint64_t init_seed = 1;
};

struct ProtocolConfig {
    int train_label_snapshot = 31;
    int test_label_snapshot = 41;
    int baseline_first_snapshot = 1;  // TK / TDC use [first, test - 1]
};

struct ExperimentConfig {
    DatasetManifest dataset;
    ModelConfig model;
    SirConfig sir;  // sir.beta is the training infection rate
    std::vector<double> beta_eval{0.05};
    ProtocolConfig protocol;
    std::vector<std::string> methods{"dgcn", "tk", "tdc"};
    std::vector<double> hit_fractions{0.01, 0.05, 0.1};
    std::filesystem::path output_dir = "out";
    bool use_cache = true;

    /// Relative paths resolve against base_dir; a relative output_dir
    /// resolves against $DGCN_OUTPUT_ROOT when that is set.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    nlohmann::ordered_json to_json() const;
    std::string hash() const;

    int validation_label_snapshot() const { return protocol.train_label_snapshot - sir.horizon; }
    void validate(int available_snapshots) const;
};

struct ExperimentResult {
    std::vector<RankingReport> reports;
    int chosen_s = 0;
    DatasetStats stats;
    std::filesystem::path output_dir;
};

/// ingest -> labels -> train (with optional s selection) -> rank -> evaluate.
/// Writes report.csv, report.json, scores.csv, labels, the checkpoint, the
/// loss trajectory and manifest.json into the output directory. The manifest
/// reads "incomplete" until every stage has finished.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Label CSV: node,start_snapshot,beta,mu,horizon,runs,value (original ids).
std::string labels_to_csv(std::span<const InfluenceLabel> labels, const SirConfig& cfg,
                          std::span<const raw_node_id> node_ids);
std::vector<InfluenceLabel> labels_from_csv(const std::filesystem::path& path, const TemporalEdgeList& edges);

std::string loss_to_csv(std::span<const double> history);

// ---------------------------------------------------------------------------
// Benchmark

struct BenchConfig {
    std::vector<int> sizes{500, 1000, 2000};
    std::vector<int> s_values{2};
    double mean_degree = 6.0;
    FeatureOptions features{16, false};
    TrainConfig train;
    SirConfig sir;
    std::uint64_t seed = 11;
};

struct BenchRow {
    int nodes = 0;
    int s = 0;
    double train_seconds = 0.0;
    double feature_seconds = 0.0;
    double label_seconds = 0.0;
};

/// Trains the full model on synthetic networks of each size with everything
/// else fixed. Snapshot count is max(s) + horizon so labels fit.
std::vector<BenchRow> scaling_benchmark(const BenchConfig& cfg);

/// Least-squares slope of log(train_seconds) against log(nodes) over rows with
/// the given s.
double loglog_slope(std::span<const BenchRow> rows, int s);

std::string bench_to_csv(std::span<const BenchRow> rows);

}  // namespace dgcn
