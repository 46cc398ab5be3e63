#include "dgcn/baselines.hpp"

#include <algorithm>
#include <sstream>

#include "dgcn/error.hpp"
#include "dgcn/io.hpp"

namespace dgcn {

namespace {

// Undirected, unweighted, deduplicated adjacency in CSR form.
struct SimpleGraph {
    std::vector<std::size_t> offsets;
    std::vector<node_id> adj;
};

SimpleGraph symmetrise(const WeightedSnapshot& snap) {
    const std::size_t n = snap.num_nodes();
    std::vector<std::pair<node_id, node_id>> pairs;
    pairs.reserve(2 * snap.num_arcs());
    for (node_id u = 0; u < n; ++u) {
        for (const auto& a : snap.out_arcs(u)) {
            pairs.emplace_back(u, a.target);
            pairs.emplace_back(a.target, u);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    SimpleGraph g;
    g.offsets.assign(n + 1, 0);
    g.adj.reserve(pairs.size());
    for (const auto& [u, v] : pairs) {
        ++g.offsets[u + 1];
        g.adj.push_back(v);
    }
    for (std::size_t u = 0; u < n; ++u) g.offsets[u + 1] += g.offsets[u];
    return g;
}

}  // namespace

std::vector<int> kshell_decomposition(const WeightedSnapshot& snapshot) {
    // Batagelj-Zaversnik bucket peeling.
    const SimpleGraph g = symmetrise(snapshot);
    const std::size_t n = snapshot.num_nodes();
    std::vector<int> deg(n);
    int max_deg = 0;
    for (std::size_t u = 0; u < n; ++u) {
        deg[u] = static_cast<int>(g.offsets[u + 1] - g.offsets[u]);
        max_deg = std::max(max_deg, deg[u]);
    }

    std::vector<std::size_t> bin(static_cast<std::size_t>(max_deg) + 1, 0);
    for (int d : deg) ++bin[static_cast<std::size_t>(d)];
    std::size_t start = 0;
    for (auto& b : bin) {
        const std::size_t count = b;
        b = start;
        start += count;
    }
    std::vector<std::size_t> pos(n);
    std::vector<node_id> vert(n);
    for (std::size_t u = 0; u < n; ++u) {
        pos[u] = bin[static_cast<std::size_t>(deg[u])]++;
        vert[pos[u]] = static_cast<node_id>(u);
    }
    for (int d = max_deg; d > 0; --d) bin[static_cast<std::size_t>(d)] = bin[static_cast<std::size_t>(d) - 1];
    if (!bin.empty()) bin[0] = 0;

    for (std::size_t i = 0; i < n; ++i) {
        const node_id v = vert[i];
        for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
            const node_id u = g.adj[e];
            if (deg[u] > deg[v]) {
                const auto du = static_cast<std::size_t>(deg[u]);
                const std::size_t pu = pos[u];
                const std::size_t pw = bin[du];
                const node_id w = vert[pw];
                if (u != w) {
                    pos[u] = pw;
                    vert[pu] = w;
                    pos[w] = pu;
                    vert[pw] = u;
                }
                ++bin[du];
                --deg[u];
            }
        }
    }
    return deg;
}

ScoreVector temporal_kshell(std::span<const WeightedSnapshot> snapshots) {
    if (snapshots.empty()) throw contract_error("temporal k-shell needs at least one snapshot");
    const std::size_t n = snapshots.front().num_nodes();

    std::vector<std::vector<int>> shells;
    shells.reserve(snapshots.size());
    std::vector<std::pair<node_id, node_id>> pairs;
    for (const auto& snap : snapshots) {
        if (snap.num_nodes() != n) throw contract_error("snapshots disagree on the node universe");
        shells.push_back(kshell_decomposition(snap));
        for (node_id u = 0; u < n; ++u) {
            for (const auto& a : snap.out_arcs(u)) {
                pairs.emplace_back(std::min(u, a.target), std::max(u, a.target));
            }
        }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    ScoreVector out;
    out.method = "tk";
    out.scores.assign(n, 0.0);
    for (const auto& [u, v] : pairs) {
        long long sum = 0;
        for (const auto& ks : shells) sum += std::min(ks[u], ks[v]);
        out.scores[u] += static_cast<double>(sum);
        out.scores[v] += static_cast<double>(sum);
    }
    return out;
}

ScoreVector tdc(std::span<const WeightedSnapshot> snapshots, double beta, double mu, std::span<const double> x) {
    if (snapshots.empty()) throw contract_error("TDC needs at least one snapshot");
    if (!(beta >= 0.0 && beta <= 1.0) || !(mu >= 0.0 && mu <= 1.0)) {
        throw validation_error("TDC needs beta and mu in [0, 1]");
    }
    const std::size_t n = snapshots.front().num_nodes();
    for (const auto& s : snapshots) {
        if (s.num_nodes() != n) throw contract_error("snapshot adjacency matrices differ in dimension");
    }
    std::vector<double> ones;
    if (x.empty()) {
        ones.assign(n, 1.0);
        x = ones;
    }
    if (x.size() != n) throw contract_error("TDC vector length does not match the node count");

    // H_r * y = M_r (... (M_1 y)), so each term applies M_1 first.
    auto adjacency_times = [&](const WeightedSnapshot& snap, const std::vector<double>& y, std::vector<double>& out) {
        for (node_id i = 0; i < n; ++i) {
            double acc = 0.0;
            for (const auto& a : snap.out_arcs(i)) acc += y[a.target];
            out[i] = acc;
        }
    };

    ScoreVector result;
    result.method = "tdc";
    result.beta = beta;
    result.mu = mu;
    result.scores.assign(n, 0.0);
    std::vector<double> y(n), tmp(n);
    const double keep = 1.0 - mu;
    for (std::size_t r = 0; r < snapshots.size(); ++r) {
        adjacency_times(snapshots[r], std::vector<double>(x.begin(), x.end()), y);
        for (std::size_t alpha = 0; alpha < r; ++alpha) {
            adjacency_times(snapshots[alpha], y, tmp);
            for (std::size_t i = 0; i < n; ++i) y[i] = beta * tmp[i] + keep * y[i];
        }
        for (std::size_t i = 0; i < n; ++i) result.scores[i] += beta * y[i];
    }
    return result;
}

std::string scores_to_csv(std::span<const ScoreVector> scores, std::span<const raw_node_id> node_ids) {
    std::ostringstream out;
    out << "node,method,score\n";
    for (const auto& sv : scores) {
        if (sv.scores.size() != node_ids.size()) throw contract_error("score vector does not cover the node set");
        for (std::size_t u = 0; u < sv.scores.size(); ++u) {
            out << node_ids[u] << ',' << sv.method << ',' << format_double(sv.scores[u]) << '\n';
        }
    }
    return out.str();
}

}  // namespace dgcn
