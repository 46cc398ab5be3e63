#include "dgcn/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "dgcn/error.hpp"
#include "dgcn/io.hpp"

namespace dgcn {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw config_error(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw config_error("unknown key '" + key + "' in " + where);
        }
    }
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("bad value for '") + key + "': " + e.what());
    }
}

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

std::string dump_edges(const TemporalEdgeList& edges) {
    std::string bytes;
    bytes.reserve(edges.edges.size() * 16 + edges.nodes.size() * 8 + 1);
    auto put = [&](const void* p, std::size_t n) { bytes.append(static_cast<const char*>(p), n); };
    bytes.push_back(edges.directed ? 'd' : 'u');
    for (raw_node_id id : edges.nodes) put(&id, sizeof id);
    for (const auto& e : edges.edges) {
        put(&e.src, sizeof e.src);
        put(&e.dst, sizeof e.dst);
        put(&e.timestamp, sizeof e.timestamp);
    }
    return bytes;
}

// ----------------------------------------------------------------- manifest

class RunManifest {
public:
    RunManifest(fs::path path, const ExperimentConfig& cfg) : path_(std::move(path)) {
        doc_["status"] = "incomplete";
        doc_["config_hash"] = cfg.hash();
        doc_["config"] = cfg.to_json();
        doc_["seeds"] = {{"sir", cfg.sir.seed},
                         {"model_init", cfg.model.init_seed},
                         {"shuffle", cfg.model.train.seed}};
        if (cfg.dataset.synthetic) doc_["seeds"]["synthetic"] = cfg.dataset.synthetic->seed;
        doc_["stages"] = ojson::array();
        flush();
    }

    ojson& doc() { return doc_; }

    void stage_done(const std::string& name, double seconds) {
        doc_["stages"].push_back({{"name", name}, {"seconds", seconds}});
        flush();
    }

    void fail(const std::string& stage, const std::string& what) {
        doc_["failed_stage"] = stage;
        doc_["error"] = what;
        flush();
    }

    void complete() {
        doc_["status"] = "complete";
        flush();
    }

private:
    void flush() const { write_text(path_, doc_.dump(2) + "\n"); }

    fs::path path_;
    ojson doc_;
};

template <class F>
auto run_stage(RunManifest& manifest, const std::string& name, F&& body) {
    const auto start = clock_type::now();
    try {
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            manifest.stage_done(name, seconds_since(start));
        } else {
            auto result = body();
            manifest.stage_done(name, seconds_since(start));
            return result;
        }
    } catch (const stage_error&) {
        throw;
    } catch (const std::exception& e) {
        manifest.fail(name, e.what());
        throw stage_error(name, e.what());
    }
}

// ------------------------------------------------------------------- caches

struct Cache {
    fs::path dir;
    bool enabled = true;
    std::uint64_t dataset = 0;
    double delta = 0.0;

    std::string label_key(int t, const SirConfig& sir) const {
        std::ostringstream key;
        key << hex64(dataset) << '|' << format_double(delta) << '|' << t << '|' << format_double(sir.beta) << '|'
            << format_double(sir.mu) << '|' << sir.horizon << '|' << sir.runs << '|' << sir.seed;
        return hex64(fnv1a(key.str()));
    }

    std::vector<InfluenceLabel> labels(std::span<const WeightedSnapshot> snapshots, const TemporalEdgeList& edges,
                                       int t, const SirConfig& sir) const {
        const fs::path path = dir / ("labels-" + label_key(t, sir) + ".csv");
        if (enabled && fs::exists(path)) return labels_from_csv(path, edges);
        auto out = generate_labels(snapshots, t, sir);
        write_text(path, labels_to_csv(out, sir, edges.nodes));
        return out;
    }

    TrainResult model(const std::string& label_key, const FeatureOptions& features, const TrainConfig& train_cfg,
                      std::uint64_t init_seed, std::span<const Sample> samples) const {
        const int s = static_cast<int>(samples.front().sequence.size());
        std::ostringstream key;
        key << label_key << '|' << features.k << '|' << features.log1p << '|' << s << '|' << init_seed << '|'
            << format_double(train_cfg.learning_rate) << '|' << train_cfg.iterations << '|' << train_cfg.batch_size
            << '|' << train_cfg.seed << '|' << format_double(train_cfg.beta1) << '|' << format_double(train_cfg.beta2)
            << '|' << format_double(train_cfg.epsilon) << '|' << format_double(train_cfg.weight_decay) << '|'
            << to_string(train_cfg.label_scaling);
        const std::string h = hex64(fnv1a(key.str()));
        const fs::path model_path = dir / ("model-" + h + ".bin");
        const fs::path loss_path = dir / ("loss-" + h + ".csv");
        if (enabled && fs::exists(model_path) && fs::exists(loss_path)) {
            TrainResult cached;
            std::ifstream in(model_path, std::ios::binary);
            cached.params = load_params(in);
            const CsvTable table = read_csv(loss_path);
            const std::size_t col = table.column("loss");
            for (const auto& row : table.rows) cached.loss_history.push_back(parse_double(row.at(col)));
            cached.initial_loss = cached.final_loss = std::numeric_limits<double>::quiet_NaN();
            return cached;
        }
        TrainResult result = train(samples, train_cfg, init_seed);
        fs::create_directories(dir);
        {
            std::ofstream out(model_path, std::ios::binary);
            save_params(out, result.params);
            if (!out) throw error("cannot write " + model_path.string());
        }
        write_text(loss_path, loss_to_csv(result.loss_history));
        return result;
    }
};

// KONECT rows are "src dst weight time" (weight optional); keep src, dst, time.
// Comment lines are blanked rather than dropped so parse errors keep their line numbers.
std::string konect_to_plain(std::istream& in) {
    std::string out, line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = split_whitespace(line);
        if (tokens.empty() || tokens.front().front() == '%') {
            out += '\n';
            continue;
        }
        if (tokens.size() != 3 && tokens.size() != 4) {
            throw parse_error(line_no, "expected 3 or 4 fields (src dst [weight] time), found " +
                                           std::to_string(tokens.size()));
        }
        out.append(tokens[0]).append(" ").append(tokens[1]).append(" ").append(tokens.back()).append("\n");
    }
    return out;
}

}  // namespace

// ----------------------------------------------------------------- datasets

double timestamp_unit_seconds(const std::string& unit) {
    if (unit == "s") return 1.0;
    if (unit == "ms") return 1e-3;
    if (unit == "min") return 60.0;
    if (unit == "h") return 3600.0;
    if (unit == "d") return 86400.0;
    throw config_error("unknown timestamp unit '" + unit + "' (expected ms, s, min, h or d)");
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    check_keys(j, {"name", "path", "format", "directed", "timestamp_unit", "delta_hours", "rebase_time", "synthetic",
                   "expected", "source_url"},
               "dataset");
    DatasetManifest m;
    m.name = get_or<std::string>(j, "name", m.name);
    m.path = resolve(get_or<std::string>(j, "path", ""), base_dir);
    m.format = get_or<std::string>(j, "format", m.format);
    if (m.format != "plain" && m.format != "konect") throw config_error("unknown dataset format '" + m.format + "'");
    m.directed = get_or(j, "directed", m.directed);
    m.timestamp_unit = get_or<std::string>(j, "timestamp_unit", m.timestamp_unit);
    m.delta_hours = get_or(j, "delta_hours", m.delta_hours);
    m.rebase_time = get_or(j, "rebase_time", m.rebase_time);
    m.source_url = get_or<std::string>(j, "source_url", "");
    if (j.contains("synthetic")) {
        const auto& sj = j.at("synthetic");
        check_keys(sj, {"nodes", "snapshots", "mean_degree", "seed"}, "dataset.synthetic");
        SyntheticSpec spec;
        spec.nodes = get_or(sj, "nodes", spec.nodes);
        spec.snapshots = get_or(sj, "snapshots", spec.snapshots);
        spec.mean_degree = get_or(sj, "mean_degree", spec.mean_degree);
        spec.seed = get_or(sj, "seed", spec.seed);
        m.synthetic = spec;
    }
    if (j.contains("expected")) {
        const auto& ej = j.at("expected");
        check_keys(ej, {"nodes", "edges", "snapshots"}, "dataset.expected");
        if (ej.contains("nodes")) m.expected_nodes = ej.at("nodes").get<std::size_t>();
        if (ej.contains("edges")) m.expected_edges = ej.at("edges").get<std::size_t>();
        if (ej.contains("snapshots")) m.expected_snapshots = ej.at("snapshots").get<int>();
    }
    timestamp_unit_seconds(m.timestamp_unit);
    if (!(m.delta_hours > 0.0)) throw config_error("delta_hours must be positive");
    if (!m.synthetic && m.path.empty()) throw config_error("dataset needs a path or a synthetic block");
    return m;
}

ojson DatasetManifest::to_json() const {
    ojson j;
    j["name"] = name;
    if (!path.empty()) j["path"] = path.string();
    j["format"] = format;
    j["directed"] = directed;
    j["timestamp_unit"] = timestamp_unit;
    j["delta_hours"] = delta_hours;
    j["rebase_time"] = rebase_time;
    if (synthetic) {
        j["synthetic"] = {{"nodes", synthetic->nodes},
                          {"snapshots", synthetic->snapshots},
                          {"mean_degree", synthetic->mean_degree},
                          {"seed", synthetic->seed}};
    }
    if (expected_nodes || expected_edges || expected_snapshots) {
        ojson e = ojson::object();
        if (expected_nodes) e["nodes"] = *expected_nodes;
        if (expected_edges) e["edges"] = *expected_edges;
        if (expected_snapshots) e["snapshots"] = *expected_snapshots;
        j["expected"] = e;
    }
    if (!source_url.empty()) j["source_url"] = source_url;
    return j;
}

ojson DatasetStats::to_json() const {
    ojson j;
    j["nodes"] = nodes;
    j["edges"] = edges;
    j["snapshots"] = snapshots;
    j["span_seconds"] = span_seconds;
    j["dropped_self_loops"] = dropped_self_loops;
    j["warnings"] = warnings;
    return j;
}

IngestedDataset ingest(const DatasetManifest& manifest) {
    const auto start = clock_type::now();
    IngestedDataset out;
    if (manifest.synthetic) {
        const auto& sp = *manifest.synthetic;
        out.edges = generate_synthetic(sp.nodes, sp.snapshots, sp.mean_degree, sp.seed, manifest.delta_seconds());
    } else {
        std::ifstream in(manifest.path);
        if (!in) throw error("cannot open dataset file " + manifest.path.string());
        if (manifest.format == "konect") {
            std::istringstream plain(konect_to_plain(in));
            out.edges = parse_edge_list(plain, manifest.directed);
        } else {
            out.edges = parse_edge_list(in, manifest.directed);
        }
        scale_timestamps(out.edges, timestamp_unit_seconds(manifest.timestamp_unit));
        if (manifest.rebase_time) rebase_timestamps(out.edges);
    }
    out.snapshots = build_snapshots(out.edges, manifest.delta_seconds());

    auto& st = out.stats;
    st.nodes = out.edges.num_nodes();
    st.edges = out.edges.edges.size() + out.edges.dropped_self_loops;
    st.snapshots = static_cast<int>(out.snapshots.size());
    st.span_seconds = out.edges.span;
    st.dropped_self_loops = out.edges.dropped_self_loops;
    if (manifest.expected_nodes && *manifest.expected_nodes != st.nodes) {
        st.warnings.push_back("node count " + std::to_string(st.nodes) + " differs from expected " +
                              std::to_string(*manifest.expected_nodes));
    }
    if (manifest.expected_edges && *manifest.expected_edges != st.edges) {
        st.warnings.push_back("contact count " + std::to_string(st.edges) + " differs from expected " +
                              std::to_string(*manifest.expected_edges));
    }
    if (manifest.expected_snapshots && *manifest.expected_snapshots != st.snapshots) {
        const bool drift = std::abs(*manifest.expected_snapshots - st.snapshots) <= 2;
        st.warnings.push_back("snapshot count " + std::to_string(st.snapshots) + " differs from expected " +
                              std::to_string(*manifest.expected_snapshots) +
                              (drift ? " (within +-2)" : " (beyond +-2)"));
    }
    out.fingerprint = fnv1a(dump_edges(out.edges));
    st.seconds = seconds_since(start);
    return out;
}

// ------------------------------------------------------------------ config

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    check_keys(j, {"dataset", "model", "sir", "protocol", "methods", "hit_fractions", "output_dir", "use_cache"},
               "config");
    ExperimentConfig c;
    if (!j.contains("dataset")) throw config_error("config needs a dataset");
    const auto& dj = j.at("dataset");
    if (dj.is_string()) {
        // A string names a manifest file; its paths resolve next to it.
        const fs::path mpath = resolve(dj.get<std::string>(), base_dir);
        nlohmann::json mj;
        try {
            mj = nlohmann::json::parse(read_text(mpath));
        } catch (const nlohmann::json::exception& e) {
            throw config_error("cannot parse dataset manifest " + mpath.string() + ": " + e.what());
        }
        c.dataset = DatasetManifest::from_json(mj, mpath.parent_path());
    } else {
        c.dataset = DatasetManifest::from_json(dj, base_dir);
    }

    if (j.contains("model")) {
        const auto& mj = j.at("model");
        check_keys(mj, {"k", "log1p", "s", "s_candidates", "init_seed", "train"}, "model");
        c.model.features.k = get_or(mj, "k", c.model.features.k);
        c.model.features.log1p = get_or(mj, "log1p", c.model.features.log1p);
        c.model.s = get_or(mj, "s", c.model.s);
        c.model.s_candidates = get_or(mj, "s_candidates", c.model.s_candidates);
        c.model.init_seed = get_or(mj, "init_seed", c.model.init_seed);
        if (mj.contains("train")) {
            const auto& tj = mj.at("train");
            check_keys(tj, {"learning_rate", "iterations", "batch_size", "seed", "beta1", "beta2", "epsilon",
                            "weight_decay", "label_scaling"},
                       "model.train");
            auto& t = c.model.train;
            t.learning_rate = get_or(tj, "learning_rate", t.learning_rate);
            t.iterations = get_or(tj, "iterations", t.iterations);
            t.batch_size = get_or(tj, "batch_size", t.batch_size);
            t.seed = get_or(tj, "seed", t.seed);
            t.beta1 = get_or(tj, "beta1", t.beta1);
            t.beta2 = get_or(tj, "beta2", t.beta2);
            t.epsilon = get_or(tj, "epsilon", t.epsilon);
            t.weight_decay = get_or(tj, "weight_decay", t.weight_decay);
            t.label_scaling = label_scaling_from_string(get_or<std::string>(tj, "label_scaling", "divide_by_n"));
        }
    }
    if (j.contains("sir")) {
        const auto& sj = j.at("sir");
        check_keys(sj, {"beta_train", "beta_eval", "mu", "horizon", "runs", "seed"}, "sir");
        c.sir.beta = get_or(sj, "beta_train", c.sir.beta);
        c.beta_eval = get_or(sj, "beta_eval", c.beta_eval);
        c.sir.mu = get_or(sj, "mu", c.sir.mu);
        c.sir.horizon = get_or(sj, "horizon", c.sir.horizon);
        c.sir.runs = get_or(sj, "runs", c.sir.runs);
        c.sir.seed = get_or(sj, "seed", c.sir.seed);
    }
    if (j.contains("protocol")) {
        const auto& pj = j.at("protocol");
        check_keys(pj, {"train_label_snapshot", "test_label_snapshot", "baseline_first_snapshot"}, "protocol");
        c.protocol.train_label_snapshot = get_or(pj, "train_label_snapshot", c.protocol.train_label_snapshot);
        c.protocol.test_label_snapshot = get_or(pj, "test_label_snapshot", c.protocol.test_label_snapshot);
        c.protocol.baseline_first_snapshot = get_or(pj, "baseline_first_snapshot", c.protocol.baseline_first_snapshot);
    }
    c.methods = get_or(j, "methods", c.methods);
    c.hit_fractions = get_or(j, "hit_fractions", c.hit_fractions);
    c.use_cache = get_or(j, "use_cache", c.use_cache);

    fs::path out = get_or<std::string>(j, "output_dir", c.output_dir.string());
    if (out.is_relative()) {
        const char* root = std::getenv("DGCN_OUTPUT_ROOT");
        out = (root && *root) ? fs::path(root) / out : base_dir / out;
    }
    c.output_dir = out;
    return c;
}

ojson ExperimentConfig::to_json() const {
    ojson j;
    j["dataset"] = dataset.to_json();
    ojson train_j;
    train_j["learning_rate"] = model.train.learning_rate;
    train_j["iterations"] = model.train.iterations;
    train_j["batch_size"] = model.train.batch_size;
    train_j["seed"] = model.train.seed;
    train_j["beta1"] = model.train.beta1;
    train_j["beta2"] = model.train.beta2;
    train_j["epsilon"] = model.train.epsilon;
    train_j["weight_decay"] = model.train.weight_decay;
    train_j["label_scaling"] = to_string(model.train.label_scaling);
    j["model"] = {{"k", model.features.k},           {"log1p", model.features.log1p},
                  {"s", model.s},                    {"s_candidates", model.s_candidates},
                  {"init_seed", model.init_seed},    {"train", train_j}};
    j["sir"] = {{"beta_train", sir.beta}, {"beta_eval", beta_eval}, {"mu", sir.mu},
                {"horizon", sir.horizon}, {"runs", sir.runs},       {"seed", sir.seed}};
    j["protocol"] = {{"train_label_snapshot", protocol.train_label_snapshot},
                     {"test_label_snapshot", protocol.test_label_snapshot},
                     {"baseline_first_snapshot", protocol.baseline_first_snapshot}};
    j["methods"] = methods;
    j["hit_fractions"] = hit_fractions;
    j["output_dir"] = output_dir.string();
    j["use_cache"] = use_cache;
    return j;
}

std::string ExperimentConfig::hash() const {
    ojson j = to_json();
    j.erase("output_dir");
    j.erase("use_cache");
    return hex64(fnv1a(j.dump()));
}

void ExperimentConfig::validate(int available_snapshots) const {
    sir.validate();
    model.train.validate();
    if (model.features.k < min_neighborhood_size) {
        throw config_error("neighborhood size k must be at least " + std::to_string(min_neighborhood_size));
    }
    const int train_t = protocol.train_label_snapshot;
    const int test_t = protocol.test_label_snapshot;
    if (train_t + sir.horizon > test_t) {
        throw config_error("train label snapshot " + std::to_string(train_t) + " plus horizon " +
                           std::to_string(sir.horizon) + " exceeds test label snapshot " + std::to_string(test_t));
    }
    if (test_t + sir.horizon - 1 > available_snapshots) {
        throw config_error("test label window ends at snapshot " + std::to_string(test_t + sir.horizon - 1) +
                           " but only " + std::to_string(available_snapshots) + " exist");
    }
    if (model.s > 0) {
        if (train_t - model.s < 1) throw config_error("s = " + std::to_string(model.s) + " needs more history");
    } else {
        if (model.s_candidates.empty()) throw config_error("set model.s or model.s_candidates");
        if (validation_label_snapshot() < 2) {
            throw config_error("no room for a validation label snapshot before the training labels");
        }
    }
    if (protocol.baseline_first_snapshot < 1 || protocol.baseline_first_snapshot >= test_t) {
        throw config_error("baseline window must start in [1, test label snapshot)");
    }
    if (beta_eval.empty()) throw config_error("evaluation beta grid is empty");
    for (double b : beta_eval) {
        if (!(b >= 0.0 && b <= 1.0)) throw config_error("evaluation beta outside [0, 1]");
    }
    for (double f : hit_fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw config_error("hit-rate fraction outside (0, 1]");
    }
    if (methods.empty()) throw config_error("no methods requested");
    for (const auto& m : methods) {
        if (m != "dgcn" && m != "tk" && m != "tdc") throw config_error("unknown method '" + m + "'");
    }
}

// ------------------------------------------------------------------- CSV io

std::string labels_to_csv(std::span<const InfluenceLabel> labels, const SirConfig& cfg,
                          std::span<const raw_node_id> node_ids) {
    std::ostringstream out;
    out << "node,start_snapshot,beta,mu,horizon,runs,value\n";
    for (const auto& l : labels) {
        if (l.node >= node_ids.size()) throw contract_error("label node outside the node universe");
        out << node_ids[l.node] << ',' << l.start_snapshot << ',' << format_double(cfg.beta) << ','
            << format_double(cfg.mu) << ',' << cfg.horizon << ',' << cfg.runs << ',' << format_double(l.value) << '\n';
    }
    return out.str();
}

std::vector<InfluenceLabel> labels_from_csv(const fs::path& path, const TemporalEdgeList& edges) {
    const CsvTable table = read_csv(path);
    const std::size_t c_node = table.column("node");
    const std::size_t c_start = table.column("start_snapshot");
    const std::size_t c_value = table.column("value");
    std::vector<InfluenceLabel> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        const auto raw = static_cast<raw_node_id>(std::stoull(row.at(c_node)));
        const auto idx = edges.index_of(raw);
        if (!idx) throw lookup_error("label for unknown node " + row.at(c_node) + " in " + path.string());
        InfluenceLabel l;
        l.node = *idx;
        l.start_snapshot = std::stoi(row.at(c_start));
        l.value = parse_double(row.at(c_value));
        out.push_back(l);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.node < b.node; });
    return out;
}

std::string loss_to_csv(std::span<const double> history) {
    std::ostringstream out;
    out << "iteration,loss\n";
    for (std::size_t i = 0; i < history.size(); ++i) out << i + 1 << ',' << format_double(history[i]) << '\n';
    return out.str();
}

// -------------------------------------------------------------- experiment

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const fs::path out_dir = cfg.output_dir;
    fs::create_directories(out_dir);
    RunManifest manifest(out_dir / "manifest.json", cfg);

    ExperimentResult result;
    result.output_dir = out_dir;

    IngestedDataset data = run_stage(manifest, "ingest", [&] {
        auto d = ingest(cfg.dataset);
        std::ostringstream nodes;
        nodes << "index,node\n";
        for (std::size_t i = 0; i < d.edges.nodes.size(); ++i) nodes << i << ',' << d.edges.nodes[i] << '\n';
        write_text(out_dir / "nodes.csv", nodes.str());
        return d;
    });
    result.stats = data.stats;
    manifest.doc()["dataset_stats"] = data.stats.to_json();
    manifest.doc()["dataset_fingerprint"] = hex64(data.fingerprint);

    const std::span<const WeightedSnapshot> snaps = data.snapshots;
    run_stage(manifest, "snapshot", [&] {
        cfg.validate(static_cast<int>(snaps.size()));
        std::ostringstream csv;
        csv << "snapshot,arcs,total_weight\n";
        for (std::size_t t = 0; t < snaps.size(); ++t) {
            csv << t + 1 << ',' << snaps[t].num_arcs() << ',' << snaps[t].total_weight() << '\n';
        }
        write_text(out_dir / "snapshots.csv", csv.str());
    });

    Cache cache{out_dir / "cache", cfg.use_cache, data.fingerprint, cfg.dataset.delta_seconds()};
    const int train_t = cfg.protocol.train_label_snapshot;
    const int test_t = cfg.protocol.test_label_snapshot;
    const int val_t = cfg.validation_label_snapshot();
    const bool selecting = cfg.model.s <= 0;
    const bool want_dgcn = std::find(cfg.methods.begin(), cfg.methods.end(), "dgcn") != cfg.methods.end();

    std::vector<InfluenceLabel> train_labels, val_labels;
    std::vector<std::vector<InfluenceLabel>> test_labels;
    run_stage(manifest, "labels", [&] {
        if (want_dgcn) {
            train_labels = cache.labels(snaps, data.edges, train_t, cfg.sir);
            if (selecting) val_labels = cache.labels(snaps, data.edges, val_t, cfg.sir);
        }
        for (double beta : cfg.beta_eval) {
            SirConfig sc = cfg.sir;
            sc.beta = beta;
            test_labels.push_back(cache.labels(snaps, data.edges, test_t, sc));
        }
    });

    ModelParams params;
    if (want_dgcn) {
        run_stage(manifest, "train", [&] {
            const std::string label_key = cache.label_key(train_t, cfg.sir);
            auto trainer = [&](int, std::span<const Sample> samples) {
                return cache.model(label_key, cfg.model.features, cfg.model.train, cfg.model.init_seed, samples);
            };
            TrainResult chosen;
            if (selecting) {
                SelectionInputs in;
                in.train_label_snapshot = train_t;
                in.validation_label_snapshot = val_t;
                in.train_labels = label_values(train_labels);
                in.validation_labels = label_values(val_labels);
                in.features = cfg.model.features;
                in.train = cfg.model.train;
                in.init_seed = cfg.model.init_seed;
                in.trainer = trainer;
                auto sel = select_s(snaps, cfg.model.s_candidates, in);
                result.chosen_s = sel.best_s;
                std::ostringstream csv;
                csv << "s,validation_tau\n";
                ojson sj = ojson::array();
                for (std::size_t i = 0; i < sel.candidates.size(); ++i) {
                    const double tau = sel.validation_tau[i];
                    const std::string text = std::isnan(tau) ? "undefined" : format_double(tau);
                    csv << sel.candidates[i] << ',' << text << '\n';
                    sj.push_back({{"s", sel.candidates[i]}, {"validation_tau", text}});
                    if (sel.candidates[i] == sel.best_s) chosen = std::move(sel.models[i]);
                }
                write_text(out_dir / "s_selection.csv", csv.str());
                manifest.doc()["s_selection"] = sj;
            } else {
                result.chosen_s = cfg.model.s;
                const auto samples = make_samples(snaps, train_t, cfg.model.s, label_values(train_labels),
                                                  cfg.model.features, cfg.model.train.label_scaling);
                chosen = trainer(cfg.model.s, samples);
            }
            manifest.doc()["chosen_s"] = result.chosen_s;
            params = std::move(chosen.params);
            std::ofstream model_out(out_dir / "model.bin", std::ios::binary);
            save_params(model_out, params);
            if (!model_out) throw error("cannot write model checkpoint");
            write_text(out_dir / "loss.csv", loss_to_csv(chosen.loss_history));
        });
    }

    // Scores: DGCN and TK are beta-independent; TDC is computed per evaluation beta.
    std::vector<ScoreVector> scores;
    run_stage(manifest, "rank", [&] {
        const auto history = snaps.subspan(static_cast<std::size_t>(cfg.protocol.baseline_first_snapshot - 1),
                                           static_cast<std::size_t>(test_t - cfg.protocol.baseline_first_snapshot));
        for (const auto& method : cfg.methods) {
            if (method == "dgcn") {
                const auto inputs = make_inputs(snaps, test_t, result.chosen_s, cfg.model.features);
                scores.push_back({"dgcn", predict_batch(inputs, params), std::nullopt, std::nullopt});
            } else if (method == "tk") {
                scores.push_back(temporal_kshell(history));
            } else if (method == "tdc") {
                for (double beta : cfg.beta_eval) scores.push_back(tdc(history, beta, cfg.sir.mu));
            }
        }
        write_text(out_dir / "scores.csv", scores_to_csv(scores, data.edges.nodes));
    });

    run_stage(manifest, "evaluate", [&] {
        for (std::size_t b = 0; b < cfg.beta_eval.size(); ++b) {
            const double beta = cfg.beta_eval[b];
            for (const auto& sv : scores) {
                if (sv.beta && *sv.beta != beta) continue;
                result.reports.push_back(evaluate_method(sv, test_labels[b], beta, cfg.hit_fractions));
            }
        }
        write_text(out_dir / "report.csv", reports_to_csv(result.reports));
        write_text(out_dir / "report.json", reports_to_json(result.reports, "all") + "\n");
    });

    manifest.complete();
    return result;
}

// --------------------------------------------------------------- benchmark

std::vector<BenchRow> scaling_benchmark(const BenchConfig& cfg) {
    if (cfg.sizes.empty() || cfg.s_values.empty()) throw config_error("benchmark needs sizes and s values");
    const int max_s = *std::max_element(cfg.s_values.begin(), cfg.s_values.end());
    if (*std::min_element(cfg.s_values.begin(), cfg.s_values.end()) < 1) throw config_error("s must be >= 1");
    const int label_t = max_s + 1;
    const int snapshots = label_t + cfg.sir.horizon - 1;

    std::vector<BenchRow> rows;
    for (int n : cfg.sizes) {
        const auto edges = generate_synthetic(n, snapshots, cfg.mean_degree, cfg.seed);
        const auto snaps = build_snapshots(edges, 3600.0);
        auto start = clock_type::now();
        const auto labels = label_values(generate_labels(snaps, label_t, cfg.sir));
        const double label_seconds = seconds_since(start);
        for (int s : cfg.s_values) {
            start = clock_type::now();
            const auto samples = make_samples(snaps, label_t, s, labels, cfg.features, cfg.train.label_scaling);
            const double feature_seconds = seconds_since(start);
            start = clock_type::now();
            train(samples, cfg.train, cfg.seed);
            rows.push_back({n, s, seconds_since(start), feature_seconds, label_seconds});
        }
    }
    return rows;
}

double loglog_slope(std::span<const BenchRow> rows, int s) {
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
        if (r.s != s) continue;
        if (r.nodes <= 0 || !(r.train_seconds > 0.0)) throw contract_error("log-log fit needs positive values");
        xs.push_back(std::log(static_cast<double>(r.nodes)));
        ys.push_back(std::log(r.train_seconds));
    }
    if (xs.size() < 2) throw contract_error("log-log fit needs at least two sizes");
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx == 0.0) throw contract_error("log-log fit needs distinct sizes");
    return sxy / sxx;
}

std::string bench_to_csv(std::span<const BenchRow> rows) {
    std::ostringstream out;
    out << "nodes,s,train_seconds,feature_seconds,label_seconds\n";
    for (const auto& r : rows) {
        out << r.nodes << ',' << r.s << ',' << format_double(r.train_seconds) << ','
            << format_double(r.feature_seconds) << ',' << format_double(r.label_seconds) << '\n';
    }
    return out.str();
}

}  // namespace dgcn
