#include <algorithm>
#include <cmath>
#include <numeric>

#include "dgcn/error.hpp"
#include "dgcn/runner.hpp"

namespace dgcn {

namespace {

constexpr double pareto_alpha = 2.5;

// Sum over ordered pairs u != v of min(1, lambda * a_u * a_v); `sorted` ascending.
double expected_arcs(const std::vector<double>& sorted, const std::vector<double>& suffix, double lambda) {
    const std::size_t n = sorted.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = sorted[i];
        const double cut = 1.0 / (lambda * a);
        // Partners with a_v >= cut saturate at probability 1.
        const auto first_sat = static_cast<std::size_t>(
            std::lower_bound(sorted.begin(), sorted.end(), cut) - sorted.begin());
        double row = static_cast<double>(n - first_sat) + lambda * a * (suffix[0] - suffix[first_sat]);
        // Remove the self pair.
        row -= std::min(1.0, lambda * a * a);
        total += row;
    }
    return total;
}

}  // namespace

TemporalEdgeList generate_synthetic(int n, int snapshots, double mean_degree, std::uint64_t seed, double delta) {
    if (n < 2) throw config_error("synthetic networks need at least 2 nodes");
    if (snapshots < 1) throw config_error("synthetic networks need at least 1 snapshot");
    if (!(delta > 0.0)) throw config_error("snapshot interval must be positive");
    if (!(mean_degree >= 0.0) || mean_degree > n - 1) {
        throw config_error("mean degree " + std::to_string(mean_degree) + " is infeasible for " + std::to_string(n) +
                           " nodes");
    }

    Rng rng = rng_stream(seed, 0x5717);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    std::vector<double> activity(static_cast<std::size_t>(n));
    for (double& a : activity) a = std::pow(1.0 - uniform(rng), -1.0 / (pareto_alpha - 1.0));

    std::vector<double> sorted = activity;
    std::sort(sorted.begin(), sorted.end());
    // suffix[i] = sum of sorted[i..n)
    std::vector<double> suffix(sorted.size() + 1, 0.0);
    for (std::size_t i = sorted.size(); i-- > 0;) suffix[i] = suffix[i + 1] + sorted[i];

    const double target = mean_degree * n;
    double lambda = 0.0;
    if (target > 0.0) {
        double lo = 0.0, hi = 1.0;
        while (expected_arcs(sorted, suffix, hi) < target && hi < 1e300) hi *= 2.0;
        for (int iter = 0; iter < 200 && hi - lo > 1e-15 * hi; ++iter) {
            const double mid = 0.5 * (lo + hi);
            (expected_arcs(sorted, suffix, mid) < target ? lo : hi) = mid;
        }
        lambda = hi;
    }

    TemporalEdgeList out;
    out.directed = true;
    out.nodes.resize(static_cast<std::size_t>(n));
    std::iota(out.nodes.begin(), out.nodes.end(), raw_node_id{0});

    if (lambda > 0.0) {
        for (int t = 0; t < snapshots; ++t) {
            const double t0 = delta * t;
            for (int u = 0; u < n; ++u) {
                for (int v = 0; v < n; ++v) {
                    if (u == v) continue;
                    const double p = std::min(1.0, lambda * activity[static_cast<std::size_t>(u)] *
                                                       activity[static_cast<std::size_t>(v)]);
                    if (uniform(rng) >= p) continue;
                    const double c = uniform(rng) * 7.0;
                    const int count = c < 4.0 ? 1 : (c < 6.0 ? 2 : 3);
                    for (int r = 0; r < count; ++r) {
                        const double ts = t0 + uniform(rng) * delta;
                        out.edges.push_back({static_cast<node_id>(u), static_cast<node_id>(v), ts});
                    }
                }
            }
        }
    }
    // The horizon covers all requested intervals even when the last one is empty.
    out.span = delta * snapshots;
    return out;
}

}  // namespace dgcn
