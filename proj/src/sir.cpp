#include "dgcn/sir.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dgcn/error.hpp"

namespace dgcn {

namespace {

enum : std::uint8_t { susceptible = 0, infected = 1, recovered = 2 };

std::span<const WeightedSnapshot> window_of(std::span<const WeightedSnapshot> snapshots, int start,
                                            int horizon) {
    if (start < 1) throw range_error("start snapshot must be >= 1");
    const auto last = static_cast<std::size_t>(start - 1) + static_cast<std::size_t>(horizon);
    if (last > snapshots.size()) {
        throw range_error("SIR from snapshot " + std::to_string(start) + " with horizon " +
                          std::to_string(horizon) + " needs " + std::to_string(last) +
                          " snapshots, have " + std::to_string(snapshots.size()));
    }
    return snapshots.subspan(static_cast<std::size_t>(start - 1), static_cast<std::size_t>(horizon));
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng rng_stream(std::uint64_t seed, std::uint64_t key) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(key + 0x632BE59BD9B4E019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Rng(seq);
}

void SirConfig::validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) throw validation_error("beta must lie in [0, 1]");
    if (!(mu >= 0.0 && mu <= 1.0)) throw validation_error("mu must lie in [0, 1]");
    if (horizon < 1) throw validation_error("horizon must be >= 1");
    if (runs < 1) throw validation_error("runs must be >= 1");
}

SirSimulator::SirSimulator(std::span<const WeightedSnapshot> snapshots, int start_snapshot,
                           const SirConfig& cfg)
    : cfg_(cfg) {
    cfg_.validate();
    window_ = window_of(snapshots, start_snapshot, cfg.horizon);
    const std::size_t n = window_.front().num_nodes();
    for (const auto& s : window_) {
        if (s.num_nodes() != n) throw contract_error("snapshots disagree on the node universe");
    }
    state_.assign(n, susceptible);
    prob_by_weight_.resize(64);
    for (std::size_t w = 0; w < prob_by_weight_.size(); ++w) {
        prob_by_weight_[w] = 1.0 - std::pow(1.0 - cfg_.beta, static_cast<double>(w));
    }
}

double SirSimulator::infection_probability(std::uint32_t weight) const {
    if (weight < prob_by_weight_.size()) return prob_by_weight_[weight];
    return 1.0 - std::pow(1.0 - cfg_.beta, static_cast<double>(weight));
}

int SirSimulator::run(node_id seed_node, Rng& rng) {
    if (seed_node >= state_.size()) throw lookup_error("seed node outside the node universe");
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    for (node_id v : touched_) state_[v] = susceptible;
    touched_.clear();
    infected_.assign(1, seed_node);
    state_[seed_node] = infected;
    touched_.push_back(seed_node);

    for (const auto& snap : window_) {
        if (infected_.empty()) break;
        next_infected_.clear();
        for (node_id v : infected_) {
            for (const auto& arc : snap.out_arcs(v)) {
                if (state_[arc.target] != susceptible) continue;
                if (uniform(rng) < infection_probability(arc.weight)) {
                    state_[arc.target] = infected;
                    touched_.push_back(arc.target);
                    next_infected_.push_back(arc.target);
                }
            }
        }
        // Recovery draws happen after every transmission attempt of the interval.
        std::size_t kept = 0;
        for (node_id v : infected_) {
            if (uniform(rng) < cfg_.mu) {
                state_[v] = recovered;
            } else {
                infected_[kept++] = v;
            }
        }
        infected_.resize(kept);
        infected_.insert(infected_.end(), next_infected_.begin(), next_infected_.end());
    }
    return static_cast<int>(touched_.size());
}

int sir_single_run(std::span<const WeightedSnapshot> snapshots, int start_snapshot, node_id seed_node,
                   const SirConfig& cfg, Rng& rng) {
    SirSimulator sim(snapshots, start_snapshot, cfg);
    return sim.run(seed_node, rng);
}

namespace {

InfluenceLabel estimate_with(SirSimulator& sim, int start_snapshot, node_id node, const SirConfig& cfg) {
    Rng rng = rng_stream(cfg.seed, node);
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < cfg.runs; ++r) {
        const double x = sim.run(node, rng);
        sum += x;
        sum_sq += x * x;
    }
    const double n = cfg.runs;
    const double mean = sum / n;
    double se = 0.0;
    if (cfg.runs > 1) {
        const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
        se = std::sqrt(var / n);
    }
    return {node, start_snapshot, mean, se};
}

}  // namespace

InfluenceLabel estimate_influence(std::span<const WeightedSnapshot> snapshots, int start_snapshot,
                                  node_id seed_node, const SirConfig& cfg) {
    SirSimulator sim(snapshots, start_snapshot, cfg);
    return estimate_with(sim, start_snapshot, seed_node, cfg);
}

std::vector<InfluenceLabel> generate_labels(std::span<const WeightedSnapshot> snapshots,
                                            int start_snapshot, const SirConfig& cfg) {
    // Validates the window once up front so worker threads never throw.
    SirSimulator probe(snapshots, start_snapshot, cfg);
    const auto n = static_cast<std::int64_t>(snapshots.front().num_nodes());
    std::vector<InfluenceLabel> labels(static_cast<std::size_t>(n));

#pragma omp parallel
    {
        SirSimulator sim(snapshots, start_snapshot, cfg);
#pragma omp for schedule(dynamic, 16)
        for (std::int64_t u = 0; u < n; ++u) {
            labels[static_cast<std::size_t>(u)] =
                estimate_with(sim, start_snapshot, static_cast<node_id>(u), cfg);
        }
    }
    return labels;
}

std::vector<double> label_values(std::span<const InfluenceLabel> labels) {
    std::vector<double> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(l.value);
    return out;
}

}  // namespace dgcn
