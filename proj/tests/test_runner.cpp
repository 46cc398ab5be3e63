#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "dgcn/error.hpp"
#include "dgcn/io.hpp"
#include "dgcn/runner.hpp"

using namespace dgcn;
namespace fs = std::filesystem;

namespace {

// Recorded from the first fixed-seed run of this configuration.
constexpr double GOLDEN_TK_TAU = 0.36882995975881117;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dgcn_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

nlohmann::json small_config(const fs::path& out) {
    auto j = nlohmann::json::parse(R"({
      "dataset": {"name": "toy", "delta_hours": 1,
                  "synthetic": {"nodes": 50, "snapshots": 16, "mean_degree": 3, "seed": 5}},
      "model": {"k": 8, "s": 0, "s_candidates": [1, 2], "init_seed": 3,
                "train": {"iterations": 15, "batch_size": 16, "seed": 4}},
      "sir": {"beta_train": 0.1, "beta_eval": [0.05, 0.1], "mu": 1.0, "horizon": 3, "runs": 40, "seed": 6},
      "protocol": {"train_label_snapshot": 10, "test_label_snapshot": 13},
      "hit_fractions": [0.05, 0.1]
    })");
    j["output_dir"] = out.string();
    return j;
}

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("synthetic generator bounds and determinism") {
    for (std::uint64_t seed = 1; seed < 20; ++seed) {
        const auto el = generate_synthetic(2, 1, 1.0, seed);
        std::set<std::pair<node_id, node_id>> pairs;
        for (const auto& e : el.edges) pairs.emplace(e.src, e.dst);
        CHECK(pairs.size() <= 2);
        CHECK(el.num_nodes() == 2);
    }
    const auto a = generate_synthetic(30, 3, 2.0, 7);
    const auto b = generate_synthetic(30, 3, 2.0, 7);
    REQUIRE(a.edges.size() == b.edges.size());
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        CHECK(a.edges[i].src == b.edges[i].src);
        CHECK(a.edges[i].dst == b.edges[i].dst);
        CHECK(a.edges[i].timestamp == b.edges[i].timestamp);
    }
    CHECK_THROWS_AS(generate_synthetic(1, 1, 0.0, 1), config_error);
    CHECK_THROWS_AS(generate_synthetic(5, 0, 1.0, 1), config_error);
    CHECK_THROWS_AS(generate_synthetic(5, 1, 4.5, 1), config_error);
}

TEST_CASE("synthetic mean out-degree concentrates") {
    const int n = 100, L = 4;
    const auto el = generate_synthetic(n, L, 4.0, 42);
    const auto snaps = build_snapshots(el, 3600.0);
    REQUIRE(snaps.size() == L);
    for (const auto& g : snaps) {
        const double mean = static_cast<double>(g.num_arcs()) / n;
        CHECK(std::abs(mean - 4.0) <= 4.0 / std::sqrt(100.0) * 3.0);
        for (node_id u = 0; u < n; ++u) {
            for (const auto& a : g.out_arcs(u)) CHECK((a.weight >= 1 && a.weight <= 3));
        }
    }
}

TEST_CASE("dataset manifests") {
    const fs::path dir = scratch("manifest");
    write_text(dir / "edges.txt", "# src dst t\n1 2 100\n2 3 160\n3 3 170\n3 1 220\n");
    const auto j = nlohmann::json::parse(R"({"name": "tiny", "path": "edges.txt", "timestamp_unit": "min",
        "delta_hours": 1, "expected": {"nodes": 3, "edges": 4, "snapshots": 5}})");
    const auto m = DatasetManifest::from_json(j, dir);
    CHECK(m.path == dir / "edges.txt");
    const auto d = ingest(m);
    CHECK(d.stats.nodes == 3);
    CHECK(d.stats.edges == 4);
    CHECK(d.stats.dropped_self_loops == 1);
    CHECK(d.stats.span_seconds == 120.0 * 60.0);
    CHECK(d.stats.snapshots == 2);
    REQUIRE(d.stats.warnings.size() == 1);
    CHECK(d.stats.warnings[0].find("beyond") != std::string::npos);

    auto bad = j;
    bad["colour"] = "red";
    CHECK_THROWS_AS(DatasetManifest::from_json(bad, dir), config_error);
    auto unit = j;
    unit["timestamp_unit"] = "fortnight";
    CHECK_THROWS_AS(DatasetManifest::from_json(unit, dir), config_error);
    CHECK(timestamp_unit_seconds("d") == 86400.0);
}

TEST_CASE("KONECT-format manifests") {
    const fs::path dir = scratch("konect");
    write_text(dir / "out.net", "% sym unweighted\n% 3 2 2\n1 2 1 3600\n2 1 1 3700\n2 3 1 7300\n");
    auto j = nlohmann::json::parse(R"({"name": "k", "path": "out.net", "format": "konect", "directed": false,
        "delta_hours": 1})");
    const auto d = ingest(DatasetManifest::from_json(j, dir));
    CHECK(d.stats.nodes == 3);
    CHECK(d.stats.edges == 3);
    CHECK(d.stats.snapshots == 2);
    CHECK(d.snapshots[0].weight(0, 1) == 2);
    CHECK(d.snapshots[0].weight(1, 0) == 2);

    write_text(dir / "bad.net", "% x\n1 2\n");
    j["path"] = "bad.net";
    try {
        ingest(DatasetManifest::from_json(j, dir));
        FAIL("expected a parse error");
    } catch (const parse_error& e) {
        CHECK(e.line() == 2);
    }
    j["format"] = "tsv";
    CHECK_THROWS_AS(DatasetManifest::from_json(j, dir), config_error);
}

TEST_CASE("label CSV round trip") {
    const auto el = generate_synthetic(6, 3, 2.0, 1);
    const auto snaps = build_snapshots(el, 3600.0);
    SirConfig sir;
    sir.horizon = 2;
    sir.runs = 20;
    sir.beta = 0.3;
    const auto labels = generate_labels(snaps, 2, sir);
    const fs::path dir = scratch("labels");
    write_text(dir / "l.csv", labels_to_csv(labels, sir, el.nodes));
    const auto back = labels_from_csv(dir / "l.csv", el);
    REQUIRE(back.size() == labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        CHECK(back[i].node == labels[i].node);
        CHECK(back[i].value == labels[i].value);
        CHECK(back[i].start_snapshot == 2);
    }
    const auto table = read_csv(dir / "l.csv");
    CHECK(table.header == std::vector<std::string>{"node", "start_snapshot", "beta", "mu", "horizon", "runs", "value"});
}

TEST_CASE("config validation") {
    const fs::path dir = scratch("cfg");
    auto cfg = ExperimentConfig::from_json(small_config(dir), dir);
    CHECK_NOTHROW(cfg.validate(16));
    CHECK(cfg.validation_label_snapshot() == 7);
    CHECK_THROWS_AS(cfg.validate(14), config_error);

    auto c2 = cfg;
    c2.protocol.test_label_snapshot = 12;
    CHECK_THROWS_AS(c2.validate(16), config_error);
    auto c3 = cfg;
    c3.methods = {"pagerank"};
    CHECK_THROWS_AS(c3.validate(16), config_error);
    auto c4 = cfg;
    c4.model.features.k = 3;
    CHECK_THROWS_AS(c4.validate(16), config_error);

    auto j = small_config(dir);
    j["extra"] = 1;
    CHECK_THROWS_AS(ExperimentConfig::from_json(j, dir), config_error);
    CHECK(cfg.hash() == ExperimentConfig::from_json(small_config(dir / "elsewhere"), dir).hash());
}

TEST_CASE("end-to-end run is reproducible and cache-consistent") {
    const fs::path a = scratch("run_a"), b = scratch("run_b");
    auto cfg_a = ExperimentConfig::from_json(small_config(a), a);
    const auto ra = run_experiment(cfg_a);
    CHECK((ra.chosen_s == 1 || ra.chosen_s == 2));
    CHECK(ra.reports.size() == 2 * 3);

    auto cfg_b = ExperimentConfig::from_json(small_config(b), b);
    cfg_b.use_cache = false;
    run_experiment(cfg_b);
    for (const char* f : {"report.csv", "report.json", "scores.csv", "loss.csv", "model.bin", "nodes.csv"}) {
        CHECK_MESSAGE(read_text(a / f) == read_text(b / f), f);
    }

    // A second run in the same directory reads every stage from the cache.
    const std::string before = read_text(a / "report.csv");
    run_experiment(cfg_a);
    CHECK(read_text(a / "report.csv") == before);

    const auto manifest = nlohmann::json::parse(read_text(a / "manifest.json"));
    CHECK(manifest["status"] == "complete");
    CHECK(manifest["config_hash"] == cfg_a.hash());
    CHECK(manifest["seeds"]["sir"] == 6);
    CHECK(manifest["stages"].size() == 6);
    const auto csv = read_csv(a / "report.csv");
    CHECK(csv.rows.size() == 2 * 3 * 2);
}

TEST_CASE("TK golden report on the 50-node network") {
    const fs::path dir = scratch("golden");
    auto j = small_config(dir);
    j["methods"] = {"tk"};
    j["sir"]["beta_eval"] = {0.1};
    const auto r = run_experiment(ExperimentConfig::from_json(j, dir));
    REQUIRE(r.reports.size() == 1);
    REQUIRE(r.reports[0].tau.has_value());
    CHECK(*r.reports[0].tau == doctest::Approx(GOLDEN_TK_TAU).epsilon(1e-12));
}

TEST_CASE("stage failures are tagged and leave the manifest incomplete") {
    const fs::path dir = scratch("fail");
    auto j = small_config(dir);
    j["dataset"] = {{"name", "missing"}, {"path", "nowhere.txt"}, {"delta_hours", 1}};
    const auto cfg = ExperimentConfig::from_json(j, dir);
    try {
        run_experiment(cfg);
        FAIL("expected a stage error");
    } catch (const stage_error& e) {
        CHECK(e.stage() == "ingest");
    }
    const auto manifest = nlohmann::json::parse(read_text(dir / "manifest.json"));
    CHECK(manifest["status"] == "incomplete");
    CHECK(manifest["failed_stage"] == "ingest");

    auto k = small_config(dir);
    k["protocol"]["test_label_snapshot"] = 15;
    try {
        run_experiment(ExperimentConfig::from_json(k, dir));
        FAIL("expected a stage error");
    } catch (const stage_error& e) {
        CHECK(e.stage() == "snapshot");
    }
}

TEST_CASE("output root from the environment") {
    const fs::path root = scratch("root");
    setenv("DGCN_OUTPUT_ROOT", root.c_str(), 1);
    auto j = small_config("relative/out");
    const auto cfg = ExperimentConfig::from_json(j, "/somewhere");
    unsetenv("DGCN_OUTPUT_ROOT");
    CHECK(cfg.output_dir == root / "relative/out");
    CHECK(ExperimentConfig::from_json(j, "/somewhere").output_dir == fs::path("/somewhere/relative/out"));
}

TEST_CASE("benchmark rows and log-log slope") {
    BenchConfig bc;
    bc.sizes = {40, 80};
    bc.s_values = {1, 2};
    bc.features = FeatureOptions{4, false};
    bc.train.iterations = 2;
    bc.sir.horizon = 2;
    bc.sir.runs = 5;
    const auto rows = scaling_benchmark(bc);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].nodes == 40);
    CHECK(rows[3].s == 2);
    for (const auto& r : rows) CHECK(r.train_seconds > 0);
    CHECK(bench_to_csv(rows).rfind("nodes,s,train_seconds", 0) == 0);

    const std::vector<BenchRow> linear{{100, 1, 2.0, 0, 0}, {200, 1, 4.0, 0, 0}, {400, 1, 8.0, 0, 0},
                                       {100, 2, 1.0, 0, 0}, {400, 2, 16.0, 0, 0}};
    CHECK(loglog_slope(linear, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(loglog_slope(linear, 2) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(loglog_slope(linear, 3), contract_error);
}

}  // TEST_SUITE
