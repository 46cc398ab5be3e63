#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "dgcn/temporal_graph.hpp"

namespace dgcn {

using Rng = std::mt19937_64;

/// Independent stream for (seed, key); used for per-node Monte-Carlo streams.
Rng rng_stream(std::uint64_t seed, std::uint64_t key);
std::uint64_t splitmix64(std::uint64_t x);

struct SirConfig {
    double beta = 0.05;  // infection probability per unit weight
    double mu = 1.0;     // recovery probability per interval
    int horizon = 10;    // number of simulated intervals
    int runs = 100;      // Monte-Carlo repetitions per seed node
    std::uint64_t seed = 2024;

    void validate() const;
};

struct InfluenceLabel {
    node_id node = 0;
    int start_snapshot = 1;
    double value = 1.0;      // mean |I| + |R| after `horizon` intervals
    double std_error = 0.0;  // sample standard deviation / sqrt(runs)
};

/// Reusable workspace for weighted-SIR runs over snapshots
/// start .. start + horizon - 1 (1-based). Not thread-safe; use one per thread.
///
/// In interval i every node infected at the start of the interval tries each
/// susceptible out-neighbour u in snapshot start + i - 1 with probability
/// 1 - (1 - beta)^W(v, u), then recovers with probability mu. Nodes infected
/// during an interval start transmitting in the next one.
class SirSimulator {
public:
    SirSimulator(std::span<const WeightedSnapshot> snapshots, int start_snapshot, const SirConfig& cfg);

    /// Returns |infected| + |recovered| after the horizon.
    int run(node_id seed_node, Rng& rng);

private:
    double infection_probability(std::uint32_t weight) const;

    std::span<const WeightedSnapshot> window_;
    SirConfig cfg_;
    std::vector<double> prob_by_weight_;
    std::vector<std::uint8_t> state_;
    std::vector<node_id> infected_, next_infected_, touched_;
};

int sir_single_run(std::span<const WeightedSnapshot> snapshots, int start_snapshot, node_id seed_node,
                   const SirConfig& cfg, Rng& rng);

/// Mean over cfg.runs runs on the stream rng_stream(cfg.seed, seed_node).
InfluenceLabel estimate_influence(std::span<const WeightedSnapshot> snapshots, int start_snapshot,
                                  node_id seed_node, const SirConfig& cfg);

/// One label per node (index == node id). Identical to calling
/// estimate_influence for each node, regardless of thread count.
std::vector<InfluenceLabel> generate_labels(std::span<const WeightedSnapshot> snapshots,
                                            int start_snapshot, const SirConfig& cfg);

std::vector<double> label_values(std::span<const InfluenceLabel> labels);

}  // namespace dgcn
