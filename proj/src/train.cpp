#include "dgcn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dgcn/error.hpp"
#include "dgcn/eval.hpp"

namespace dgcn {

std::string to_string(LabelScaling mode) {
    switch (mode) {
        case LabelScaling::none: return "none";
        case LabelScaling::divide_by_n: return "divide_by_n";
    }
    return "unknown";
}

LabelScaling label_scaling_from_string(const std::string& name) {
    if (name == "none") return LabelScaling::none;
    if (name == "divide_by_n") return LabelScaling::divide_by_n;
    throw config_error("unknown label scaling '" + name + "'");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw config_error("learning rate must be positive");
    if (iterations < 1) throw config_error("iterations must be >= 1");
    if (batch_size < 1) throw config_error("batch size must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw config_error("Adam moment decay rates must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw config_error("Adam epsilon must be positive");
    if (!(weight_decay >= 0.0)) throw config_error("weight decay must be non-negative");
}

std::vector<std::vector<FeatureMatrix>> build_feature_window(std::span<const WeightedSnapshot> snapshots,
                                                             int first, int last, const FeatureOptions& opts) {
    if (first < 1 || last > static_cast<int>(snapshots.size()) || first > last) {
        throw range_error("feature window [" + std::to_string(first) + ", " + std::to_string(last) +
                          "] is outside the " + std::to_string(snapshots.size()) + " available snapshots");
    }
    std::vector<std::vector<FeatureMatrix>> out(static_cast<std::size_t>(last - first + 1));
    for (int t = first; t <= last; ++t) {
        const auto& snap = snapshots[static_cast<std::size_t>(t - 1)];
        auto& row = out[static_cast<std::size_t>(t - first)];
        row.resize(snap.num_nodes());
        const auto n = static_cast<std::int64_t>(snap.num_nodes());
#pragma omp parallel for schedule(dynamic, 32)
        for (std::int64_t u = 0; u < n; ++u) {
            auto m = node_feature_matrix(snap, static_cast<node_id>(u), opts.k);
            if (opts.log1p) {
                for (double& v : m.values) v = std::log1p(v);
            }
            row[static_cast<std::size_t>(u)] = std::move(m);
        }
    }
    return out;
}

std::vector<Sample> make_inputs(std::span<const WeightedSnapshot> snapshots, int target_snapshot, int s,
                                const FeatureOptions& opts) {
    if (s < 1) throw config_error("number of input snapshots must be positive");
    auto window = build_feature_window(snapshots, target_snapshot - s, target_snapshot - 1, opts);
    const std::size_t n = window.front().size();
    std::vector<Sample> samples(n);
    for (std::size_t u = 0; u < n; ++u) {
        samples[u].node = static_cast<node_id>(u);
        samples[u].sequence.reserve(static_cast<std::size_t>(s));
        for (auto& per_snapshot : window) samples[u].sequence.push_back(std::move(per_snapshot[u]));
    }
    return samples;
}

std::vector<Sample> make_samples(std::span<const WeightedSnapshot> snapshots, int label_snapshot, int s,
                                 std::span<const double> labels, const FeatureOptions& opts,
                                 LabelScaling scaling) {
    auto samples = make_inputs(snapshots, label_snapshot, s, opts);
    if (labels.size() != samples.size()) throw contract_error("need exactly one label per node");
    const double denom = scaling == LabelScaling::divide_by_n ? static_cast<double>(samples.size()) : 1.0;
    for (std::size_t u = 0; u < samples.size(); ++u) samples[u].label = labels[u] / denom;
    return samples;
}

TrainResult train(std::span<const Sample> dataset, const TrainConfig& cfg, std::uint64_t init_seed) {
    cfg.validate();
    if (dataset.empty()) throw contract_error("training set is empty");
    const int s = static_cast<int>(dataset.front().sequence.size());
    if (s < 1) throw contract_error("training samples carry no snapshots");
    const int k = dataset.front().sequence.front().k;

    TrainResult result;
    result.params = ModelParams::initialize(k, s, init_seed);
    ModelParams& params = result.params;
    result.initial_loss = batch_loss(dataset, params);

    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), dataset.size());
    GradientEngine engine(k, s, batch);
    std::vector<double> grad, m(params.values.size(), 0.0), v(params.values.size(), 0.0);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = rng_stream(cfg.seed, 0x5eed);

    double b1_pow = 1.0, b2_pow = 1.0;
    for (int it = 1; it <= cfg.iterations; ++it) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t lo = 0; lo < order.size(); lo += batch) {
            const std::size_t hi = std::min(lo + batch, order.size());
            const std::span<const std::size_t> ids(order.data() + lo, hi - lo);
            const double l = engine.compute(dataset, ids, params, 1.0, grad);
            if (!std::isfinite(l)) throw training_error(it, "loss is not finite");
            epoch_loss += l * static_cast<double>(hi - lo);

            b1_pow *= cfg.beta1;
            b2_pow *= cfg.beta2;
            const double c1 = 1.0 - b1_pow, c2 = 1.0 - b2_pow;
            for (std::size_t j = 0; j < params.values.size(); ++j) {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * grad[j];
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
                params.values[j] -= cfg.learning_rate * ((m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.epsilon) +
                                                         cfg.weight_decay * params.values[j]);
            }
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    result.final_loss = batch_loss(dataset, params);
    if (!std::isfinite(result.final_loss)) throw training_error(cfg.iterations, "final loss is not finite");
    return result;
}

SelectionResult select_s(std::span<const WeightedSnapshot> snapshots, std::span<const int> candidates,
                         const SelectionInputs& in) {
    std::vector<int> valid;
    for (int s : candidates) {
        if (s >= 1 && in.train_label_snapshot - s >= 1 && in.validation_label_snapshot - s >= 1) valid.push_back(s);
    }
    std::sort(valid.begin(), valid.end());
    valid.erase(std::unique(valid.begin(), valid.end()), valid.end());
    if (valid.empty()) throw config_error("no candidate s has enough history before the label snapshots");

    SelectionResult out;
    out.candidates = valid;
    double best_tau = -std::numeric_limits<double>::infinity();
    for (int s : valid) {
        auto samples = make_samples(snapshots, in.train_label_snapshot, s, in.train_labels, in.features,
                                    in.train.label_scaling);
        out.models.push_back(in.trainer ? in.trainer(s, samples) : train(samples, in.train, in.init_seed));
        const auto val_inputs = make_inputs(snapshots, in.validation_label_snapshot, s, in.features);
        const auto preds = predict_batch(val_inputs, out.models.back().params);
        double tau = std::numeric_limits<double>::quiet_NaN();
        try {
            tau = kendall_tau(preds, in.validation_labels);
        } catch (const undefined_correlation&) {
        }
        out.validation_tau.push_back(tau);
        if (tau > best_tau) {
            best_tau = tau;
            out.best_s = s;
        }
    }
    if (!(best_tau > -std::numeric_limits<double>::infinity())) out.best_s = valid.front();
    return out;
}

}  // namespace dgcn
