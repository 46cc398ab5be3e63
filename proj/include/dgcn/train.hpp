#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dgcn/model.hpp"
#include "dgcn/sir.hpp"

namespace dgcn {

enum class LabelScaling { none, divide_by_n };

std::string to_string(LabelScaling mode);
LabelScaling label_scaling_from_string(const std::string& name);

struct FeatureOptions {
    int k = 28;
    bool log1p = false;  // optional compression of raw counts, off by default
};

/// Adam on the squared loss. One iteration is a full pass over the training
/// set in mini-batches, so training cost grows linearly with the node count.
struct TrainConfig {
    double learning_rate = 1e-3;
    int iterations = 100;
    int batch_size = 64;
    std::uint64_t seed = 7;  // mini-batch shuffling
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;  // decoupled (AdamW-style), scaled by the learning rate
    LabelScaling label_scaling = LabelScaling::divide_by_n;

    void validate() const;
};

/// Feature matrices of every node for snapshots first..last (1-based,
/// inclusive). Result is indexed [snapshot - first][node].
std::vector<std::vector<FeatureMatrix>> build_feature_window(std::span<const WeightedSnapshot> snapshots,
                                                             int first, int last, const FeatureOptions& opts);

/// One sample per node: inputs are snapshots label_snapshot - s .. label_snapshot - 1
/// and the target is the node's label, scaled per `scaling`.
std::vector<Sample> make_samples(std::span<const WeightedSnapshot> snapshots, int label_snapshot, int s,
                                 std::span<const double> labels, const FeatureOptions& opts,
                                 LabelScaling scaling);

/// Unlabelled samples for scoring: inputs end at target_snapshot - 1.
std::vector<Sample> make_inputs(std::span<const WeightedSnapshot> snapshots, int target_snapshot, int s,
                                const FeatureOptions& opts);

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_history;  // mean mini-batch loss per iteration
    double initial_loss = 0.0;         // full-set loss before the first update
    double final_loss = 0.0;           // full-set loss after the last update
};

TrainResult train(std::span<const Sample> dataset, const TrainConfig& cfg, std::uint64_t init_seed);

struct SelectionInputs {
    int train_label_snapshot = 31;
    int validation_label_snapshot = 21;
    std::vector<double> train_labels;       // raw SIR values, index == node
    std::vector<double> validation_labels;  // raw SIR values, index == node
    FeatureOptions features;
    TrainConfig train;
    std::uint64_t init_seed = 1;
    // Replaces the plain train() call when set (the runner uses it for caching).
    std::function<TrainResult(int s, std::span<const Sample> samples)> trainer;
};

struct SelectionResult {
    int best_s = 1;
    std::vector<int> candidates;
    std::vector<double> validation_tau;  // NaN when undefined
    std::vector<TrainResult> models;     // aligned with candidates
};

/// Trains one model per candidate s and keeps the one whose validation
/// ranking has the highest Kendall tau; ties go to the smaller s.
SelectionResult select_s(std::span<const WeightedSnapshot> snapshots, std::span<const int> candidates,
                         const SelectionInputs& inputs);

}  // namespace dgcn
