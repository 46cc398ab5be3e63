#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgcn/baselines.hpp"
#include "dgcn/error.hpp"
#include "dgcn/eval.hpp"
#include "dgcn/io.hpp"
#include "dgcn/runner.hpp"

namespace fs = std::filesystem;
using namespace dgcn;

namespace {

// Flags shared by every config-driven subcommand. Unset flags leave the
// config file untouched.
struct Overrides {
    std::string config;
    std::string output;
    std::optional<int> k, s, iterations, runs, horizon, batch_size;
    std::optional<double> beta_train, learning_rate, weight_decay;
    std::optional<std::uint64_t> sir_seed, init_seed;
    bool no_cache = false;
    bool log1p = false;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        app->add_option("-o,--output", output, "output directory");
        app->add_option("--k", k, "neighbourhood size");
        app->add_option("--s", s, "input snapshots (disables s selection)");
        app->add_option("--iterations", iterations, "training iterations");
        app->add_option("--batch-size", batch_size, "mini-batch size");
        app->add_option("--learning-rate", learning_rate, "Adam step size");
        app->add_option("--weight-decay", weight_decay, "decoupled weight decay");
        app->add_flag("--log1p", log1p, "log1p-compress feature matrices");
        app->add_option("--init-seed", init_seed, "parameter init seed");
        app->add_option("--runs", runs, "SIR runs per node");
        app->add_option("--horizon", horizon, "SIR horizon in intervals");
        app->add_option("--beta-train", beta_train, "training infection rate");
        app->add_option("--sir-seed", sir_seed, "SIR seed");
        app->add_flag("--no-cache", no_cache, "ignore cached labels and models");
    }

    ExperimentConfig load() const {
        const fs::path path = fs::absolute(config);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text(path));
        } catch (const nlohmann::json::exception& e) {
            throw config_error("cannot parse " + path.string() + ": " + e.what());
        }
        if (!output.empty()) j["output_dir"] = output;
        if (k) j["model"]["k"] = *k;
        if (s) j["model"]["s"] = *s;
        if (init_seed) j["model"]["init_seed"] = *init_seed;
        if (iterations) j["model"]["train"]["iterations"] = *iterations;
        if (batch_size) j["model"]["train"]["batch_size"] = *batch_size;
        if (learning_rate) j["model"]["train"]["learning_rate"] = *learning_rate;
        if (weight_decay) j["model"]["train"]["weight_decay"] = *weight_decay;
        if (log1p) j["model"]["log1p"] = true;
        if (runs) j["sir"]["runs"] = *runs;
        if (horizon) j["sir"]["horizon"] = *horizon;
        if (beta_train) j["sir"]["beta_train"] = *beta_train;
        if (sir_seed) j["sir"]["seed"] = *sir_seed;
        if (no_cache) j["use_cache"] = false;
        // -o is relative to the working directory, config paths to the file.
        if (!output.empty() && fs::path(output).is_relative() && !std::getenv("DGCN_OUTPUT_ROOT")) {
            j["output_dir"] = fs::absolute(output).string();
        }
        return ExperimentConfig::from_json(j, path.parent_path());
    }
};

IngestedDataset load_dataset(const ExperimentConfig& cfg) {
    auto d = ingest(cfg.dataset);
    for (const auto& w : d.stats.warnings) std::cerr << "warning: " << w << '\n';
    return d;
}

std::vector<InfluenceLabel> compute_labels(const IngestedDataset& d, int t, const SirConfig& sir) {
    if (t < 1 || t + sir.horizon - 1 > static_cast<int>(d.snapshots.size())) {
        throw range_error("label window " + std::to_string(t) + " + " + std::to_string(sir.horizon) +
                          " does not fit " + std::to_string(d.snapshots.size()) + " snapshots");
    }
    return generate_labels(d.snapshots, t, sir);
}

std::string stamp(double beta) {
    return format_double(beta);
}

std::vector<ScoreVector> read_scores(const fs::path& path, std::map<raw_node_id, std::size_t>& index) {
    const auto table = read_csv(path);
    if (table.header != std::vector<std::string>{"node", "method", "score"}) {
        throw parse_error(1, path.string() + ": expected header node,method,score");
    }
    std::map<std::string, std::map<raw_node_id, double>> by_method;
    for (const auto& row : table.rows) {
        const auto id = static_cast<raw_node_id>(std::stoull(row.at(0)));
        by_method[row.at(1)][id] = parse_double(row.at(2));
        index.emplace(id, 0);
    }
    std::size_t i = 0;
    for (auto& [id, pos] : index) pos = i++;
    std::vector<ScoreVector> out;
    for (const auto& [method, vals] : by_method) {
        if (vals.size() != index.size()) throw validation_error("method " + method + " does not score every node");
        ScoreVector sv{method, std::vector<double>(index.size()), std::nullopt, std::nullopt};
        for (const auto& [id, v] : vals) sv.scores[index.at(id)] = v;
        out.push_back(std::move(sv));
    }
    return out;
}

std::vector<InfluenceLabel> read_labels(const fs::path& path, const std::map<raw_node_id, std::size_t>& index,
                                        double& beta) {
    const auto table = read_csv(path);
    if (table.header.size() != 7 || table.header[0] != "node" || table.header[6] != "value") {
        throw parse_error(1, path.string() + ": not a label file");
    }
    std::vector<InfluenceLabel> out;
    for (const auto& row : table.rows) {
        const auto id = static_cast<raw_node_id>(std::stoull(row.at(0)));
        const auto it = index.find(id);
        if (it == index.end()) throw lookup_error("label for unscored node " + row.at(0));
        out.push_back({static_cast<node_id>(it->second), std::stoi(row.at(1)), parse_double(row.at(6)), 0.0});
        beta = parse_double(row.at(2));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal influence ranking: ingestion, SIR labels, DGCN training, baselines and evaluation"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "write a synthetic temporal edge list");
    int syn_nodes = 200, syn_snapshots = 45;
    double syn_degree = 6.0, syn_delta_hours = 1.0;
    std::uint64_t syn_seed = 1;
    std::string syn_out;
    synth->add_option("--nodes", syn_nodes);
    synth->add_option("--snapshots", syn_snapshots);
    synth->add_option("--mean-degree", syn_degree);
    synth->add_option("--delta-hours", syn_delta_hours);
    synth->add_option("--seed", syn_seed);
    synth->add_option("-o,--output", syn_out, "edge list path")->required();

    Overrides ingest_o, snapshot_o, labels_o, train_o, rank_o, run_o;
    auto* ingest_cmd = app.add_subcommand("ingest", "read a dataset and report N, M, L");
    ingest_o.attach(ingest_cmd);
    auto* snapshot_cmd = app.add_subcommand("snapshot", "write per-snapshot arc and weight totals");
    snapshot_o.attach(snapshot_cmd);

    auto* labels_cmd = app.add_subcommand("labels", "simulate SIR influence labels");
    labels_o.attach(labels_cmd);
    int label_t = 0;
    std::optional<double> label_beta;
    labels_cmd->add_option("--snapshot", label_t, "first snapshot of the label window")->required();
    labels_cmd->add_option("--beta", label_beta, "infection rate (default: training rate)");

    auto* train_cmd = app.add_subcommand("train", "train DGCN on the training labels");
    train_o.attach(train_cmd);

    auto* rank_cmd = app.add_subcommand("rank", "score the test window with every configured method");
    rank_o.attach(rank_cmd);
    std::string rank_model;
    rank_cmd->add_option("--model", rank_model, "DGCN checkpoint (needed for the dgcn method)")
        ->check(CLI::ExistingFile);

    auto* eval_cmd = app.add_subcommand("evaluate", "compare a score file against a label file");
    std::string eval_scores, eval_labels, eval_out;
    std::vector<double> eval_fractions{0.01, 0.05, 0.1};
    eval_cmd->add_option("--scores", eval_scores)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--labels", eval_labels)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--fractions", eval_fractions);
    eval_cmd->add_option("-o,--output", eval_out, "report CSV path (stdout when omitted)");

    auto* run_cmd = app.add_subcommand("run", "full pipeline");
    run_o.attach(run_cmd);

    auto* bench_cmd = app.add_subcommand("bench", "training time against node count");
    BenchConfig bc;
    bc.train.iterations = 3;
    bc.sir.horizon = 10;
    bc.sir.runs = 5;
    std::string bench_out;
    bench_cmd->add_option("--sizes", bc.sizes);
    bench_cmd->add_option("--s", bc.s_values);
    bench_cmd->add_option("--k", bc.features.k);
    bench_cmd->add_option("--mean-degree", bc.mean_degree);
    bench_cmd->add_option("--iterations", bc.train.iterations);
    bench_cmd->add_option("--runs", bc.sir.runs);
    bench_cmd->add_option("--seed", bc.seed);
    bench_cmd->add_option("-o,--output", bench_out, "CSV path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            const auto el = generate_synthetic(syn_nodes, syn_snapshots, syn_degree, syn_seed,
                                               syn_delta_hours * 3600.0);
            std::ofstream out(syn_out);
            if (!out) throw error("cannot write " + syn_out);
            write_edge_list(out, el);
            std::cout << el.edges.size() << " contacts over " << el.num_nodes() << " nodes\n";
        } else if (ingest_cmd->parsed()) {
            const auto cfg = ingest_o.load();
            const auto d = load_dataset(cfg);
            auto j = d.stats.to_json();
            j["fingerprint"] = hex64(d.fingerprint);
            fs::create_directories(cfg.output_dir);
            write_text(cfg.output_dir / "dataset_stats.json", j.dump(2) + "\n");
            std::cout << j.dump(2) << '\n';
        } else if (snapshot_cmd->parsed()) {
            const auto cfg = snapshot_o.load();
            const auto d = load_dataset(cfg);
            std::ostringstream csv;
            csv << "snapshot,arcs,total_weight\n";
            for (std::size_t t = 0; t < d.snapshots.size(); ++t) {
                csv << t + 1 << ',' << d.snapshots[t].num_arcs() << ',' << d.snapshots[t].total_weight() << '\n';
            }
            fs::create_directories(cfg.output_dir);
            write_text(cfg.output_dir / "snapshots.csv", csv.str());
            std::cout << csv.str();
        } else if (labels_cmd->parsed()) {
            const auto cfg = labels_o.load();
            const auto d = load_dataset(cfg);
            SirConfig sir = cfg.sir;
            if (label_beta) sir.beta = *label_beta;
            sir.validate();
            const auto labels = compute_labels(d, label_t, sir);
            fs::create_directories(cfg.output_dir);
            const fs::path out =
                cfg.output_dir / ("labels-t" + std::to_string(label_t) + "-b" + stamp(sir.beta) + ".csv");
            write_text(out, labels_to_csv(labels, sir, d.edges.nodes));
            std::cout << out.string() << '\n';
        } else if (train_cmd->parsed()) {
            const auto cfg = train_o.load();
            const auto d = load_dataset(cfg);
            cfg.validate(static_cast<int>(d.snapshots.size()));
            const int train_t = cfg.protocol.train_label_snapshot;
            const auto train_labels = label_values(compute_labels(d, train_t, cfg.sir));
            TrainResult result;
            int s = cfg.model.s;
            if (s > 0) {
                const auto samples = make_samples(d.snapshots, train_t, s, train_labels, cfg.model.features,
                                                  cfg.model.train.label_scaling);
                result = train(samples, cfg.model.train, cfg.model.init_seed);
            } else {
                SelectionInputs in;
                in.train_label_snapshot = train_t;
                in.validation_label_snapshot = cfg.validation_label_snapshot();
                in.train_labels = train_labels;
                in.validation_labels = label_values(compute_labels(d, in.validation_label_snapshot, cfg.sir));
                in.features = cfg.model.features;
                in.train = cfg.model.train;
                in.init_seed = cfg.model.init_seed;
                auto sel = select_s(d.snapshots, cfg.model.s_candidates, in);
                for (std::size_t i = 0; i < sel.candidates.size(); ++i) {
                    std::cout << "s=" << sel.candidates[i] << " validation tau " << sel.validation_tau[i] << '\n';
                    if (sel.candidates[i] == sel.best_s) result = std::move(sel.models[i]);
                }
                s = sel.best_s;
            }
            fs::create_directories(cfg.output_dir);
            std::ofstream out(cfg.output_dir / "model.bin", std::ios::binary);
            save_params(out, result.params);
            if (!out) throw error("cannot write model checkpoint");
            write_text(cfg.output_dir / "loss.csv", loss_to_csv(result.loss_history));
            std::cout << "s=" << s << " loss " << result.initial_loss << " -> " << result.final_loss << '\n';
        } else if (rank_cmd->parsed()) {
            const auto cfg = rank_o.load();
            const auto d = load_dataset(cfg);
            const int test_t = cfg.protocol.test_label_snapshot;
            const int first = cfg.protocol.baseline_first_snapshot;
            if (test_t < 2 || test_t - 1 > static_cast<int>(d.snapshots.size()) || first < 1 || first >= test_t) {
                throw range_error("test window does not fit the dataset");
            }
            const std::span<const WeightedSnapshot> snaps = d.snapshots;
            const auto history = snaps.subspan(static_cast<std::size_t>(first - 1),
                                               static_cast<std::size_t>(test_t - first));
            std::vector<ScoreVector> scores;
            for (const auto& m : cfg.methods) {
                if (m == "dgcn") {
                    if (rank_model.empty()) throw config_error("method dgcn needs --model");
                    std::ifstream in(rank_model, std::ios::binary);
                    const auto params = load_params(in);
                    if (params.k != cfg.model.features.k) throw config_error("checkpoint k differs from config k");
                    const auto inputs = make_inputs(snaps, test_t, params.s, cfg.model.features);
                    scores.push_back({"dgcn", predict_batch(inputs, params), std::nullopt, std::nullopt});
                } else if (m == "tk") {
                    scores.push_back(temporal_kshell(history));
                } else if (m == "tdc") {
                    for (double b : cfg.beta_eval) scores.push_back(tdc(history, b, cfg.sir.mu));
                } else {
                    throw config_error("unknown method '" + m + "'");
                }
            }
            // TDC columns get the beta in the method name so each row stays unique.
            for (auto& sv : scores) {
                if (sv.beta) sv.method += "@" + stamp(*sv.beta);
            }
            fs::create_directories(cfg.output_dir);
            write_text(cfg.output_dir / "scores.csv", scores_to_csv(scores, d.edges.nodes));
            std::cout << (cfg.output_dir / "scores.csv").string() << '\n';
        } else if (eval_cmd->parsed()) {
            std::map<raw_node_id, std::size_t> index;
            const auto scores = read_scores(eval_scores, index);
            double beta = 0.0;
            const auto labels = read_labels(eval_labels, index, beta);
            std::vector<RankingReport> reports;
            for (const auto& sv : scores) reports.push_back(evaluate_method(sv, labels, beta, eval_fractions));
            const std::string csv = reports_to_csv(reports);
            if (eval_out.empty()) {
                std::cout << csv;
            } else {
                write_text(eval_out, csv);
            }
        } else if (run_cmd->parsed()) {
            const auto cfg = run_o.load();
            const auto r = run_experiment(cfg);
            for (const auto& w : r.stats.warnings) std::cerr << "warning: " << w << '\n';
            std::cout << read_text(r.output_dir / "report.csv");
            if (r.chosen_s > 0) std::cout << "chosen s = " << r.chosen_s << '\n';
            std::cout << "artifacts in " << r.output_dir.string() << '\n';
        } else if (bench_cmd->parsed()) {
            const auto rows = scaling_benchmark(bc);
            const std::string csv = bench_to_csv(rows);
            if (bench_out.empty()) {
                std::cout << csv;
            } else {
                write_text(bench_out, csv);
            }
            if (bc.sizes.size() >= 2) {
                for (int s : bc.s_values) std::cout << "s=" << s << " log-log slope " << loglog_slope(rows, s) << '\n';
            }
        }
    } catch (const stage_error& e) {
        std::cerr << "error in stage " << e.stage() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
