#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "dgcn/temporal_graph.hpp"

namespace dgcn {

// conv(16, 3x3, pad 1) -> ReLU -> maxpool 2 -> conv(32, 3x3, pad 1) -> ReLU
// -> maxpool 2 -> flatten -> linear -> scalar per snapshot, then a 2-layer
// LSTM (input 1, hidden 64) and a linear head on the last hidden state.
inline constexpr int conv1_channels = 16;
inline constexpr int conv2_channels = 32;
inline constexpr int lstm_hidden = 64;
inline constexpr int lstm_gates = 4 * lstm_hidden;
inline constexpr std::string_view architecture_tag = "dgcn/cnn16-32/lstm64x2/v1";

/// Smallest k for which both pooling stages keep at least one cell.
inline constexpr int min_neighborhood_size = 4;

struct Slice {
    std::size_t offset = 0;
    std::size_t size = 0;
};

/// Offsets of every tensor inside the flat parameter buffer for a given k.
/// LSTM gate blocks are stacked in (input, forget, cell, output) order.
struct ParamLayout {
    explicit ParamLayout(int k);

    int k;
    int pooled1;  // k / 2
    int pooled2;  // pooled1 / 2
    Slice conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;
    Slice w_ih1, w_hh1, b1, w_ih2, w_hh2, b2, head_w, head_b;
    std::size_t total = 0;
};

struct CnnParams {
    int k = 0;
    std::span<const double> conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;
};

struct LstmParams {
    std::span<const double> w_ih1, w_hh1, b1, w_ih2, w_hh2, b2, head_w, head_b;
};

/// All trainable tensors plus the shape context (k, s). Gradients use the
/// same type and layout.
struct ModelParams {
    int k = 28;
    int s = 1;
    std::vector<double> values;

    static ModelParams zeros(int k, int s);
    /// Uniform in +-1/sqrt(fan_in) per tensor; biases share their layer's bound.
    static ModelParams initialize(int k, int s, std::uint64_t seed);

    ParamLayout layout() const { return ParamLayout(k); }
    CnnParams cnn() const;
    LstmParams lstm() const;

    std::span<double> tensor(Slice slice) { return {values.data() + slice.offset, slice.size}; }
    std::span<const double> tensor(Slice slice) const {
        return {values.data() + slice.offset, slice.size};
    }

    bool operator==(const ModelParams&) const = default;
};

double cnn_forward(const FeatureMatrix& matrix, const CnnParams& params);

/// Runs both LSTM layers from zero state and applies the head.
double lstm_forward(std::span<const double> inputs, const LstmParams& params);

/// Shared CNN over each matrix (ordered oldest first), then the LSTM.
double predict(std::span<const FeatureMatrix> sequence, const ModelParams& params);

/// Mean squared error.
double loss(std::span<const double> predictions, std::span<const double> labels);

struct Sample {
    node_id node = 0;
    std::vector<FeatureMatrix> sequence;
    double label = 0.0;
};

std::vector<double> predict_batch(std::span<const Sample> batch, const ModelParams& params);
double batch_loss(std::span<const Sample> batch, const ModelParams& params);

struct BatchGradient {
    double loss = 0.0;  // loss_scale * mean squared error
    ModelParams grad;
};

/// Exact gradient of loss_scale * batch_loss with respect to every parameter.
/// Per-sample gradients are reduced in batch order, so the result does not
/// depend on the thread count.
BatchGradient backward(std::span<const Sample> batch, const ModelParams& params, double loss_scale = 1.0);

/// Reusable buffers for repeated gradient evaluation during training.
class GradientEngine {
public:
    GradientEngine(int k, int s, std::size_t max_batch);
    ~GradientEngine();
    GradientEngine(const GradientEngine&) = delete;
    GradientEngine& operator=(const GradientEngine&) = delete;

    /// Writes the gradient into `grad` (resized to the parameter count) and
    /// returns the scaled loss.
    double compute(std::span<const Sample> batch, const ModelParams& params, double loss_scale,
                   std::vector<double>& grad);
    /// Same, for the samples pool[batch[0]], pool[batch[1]], ...
    double compute(std::span<const Sample> pool, std::span<const std::size_t> batch, const ModelParams& params,
                   double loss_scale, std::vector<double>& grad);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// ReLU on/off states and max-pool winners for every CNN evaluation in the
/// batch. Two parameter vectors with equal patterns lie on the same smooth
/// piece of the network.
std::vector<std::uint32_t> activation_pattern(std::span<const Sample> batch, const ModelParams& params);

void save_params(std::ostream& out, const ModelParams& params);
ModelParams load_params(std::istream& in);

}  // namespace dgcn
