#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgcn/temporal_graph.hpp"

namespace dgcn {

/// One score per node (index == node id) produced by a ranking method.
struct ScoreVector {
    std::string method;
    std::vector<double> scores;
    std::optional<double> beta;
    std::optional<double> mu;
};

/// Shell index of every node on the symmetrised, unweighted snapshot.
/// Isolated nodes get shell 0.
std::vector<int> kshell_decomposition(const WeightedSnapshot& snapshot);

/// Temporal k-shell: TK(v) = sum over neighbours u seen in any snapshot of
/// sum_t min(ks_t(v), ks_t(u)).
ScoreVector temporal_kshell(std::span<const WeightedSnapshot> snapshots);

/// Temporal dynamics-sensitive centrality on the unweighted adjacency:
/// S = sum_{r=0}^{L-1} beta * H_r * A_{r+1} * 1 with
/// H_r = M_r ... M_1, M_a = beta * A_a + (1 - mu) * I, H_0 = I.
ScoreVector tdc(std::span<const WeightedSnapshot> snapshots, double beta, double mu,
                std::span<const double> x = {});

std::string scores_to_csv(std::span<const ScoreVector> scores, std::span<const raw_node_id> node_ids);

}  // namespace dgcn
