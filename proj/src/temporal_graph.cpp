#include "dgcn/temporal_graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "dgcn/error.hpp"
#include "dgcn/io.hpp"

namespace dgcn {

std::optional<node_id> TemporalEdgeList::index_of(raw_node_id id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
    if (it == nodes.end() || *it != id) return std::nullopt;
    return static_cast<node_id>(it - nodes.begin());
}

TemporalEdgeList make_edge_list(std::span<const RawContact> contacts, bool directed) {
    TemporalEdgeList out;
    out.directed = directed;

    out.nodes.reserve(contacts.size() * 2);
    for (const auto& c : contacts) {
        if (!(c.timestamp >= 0.0)) throw validation_error("negative or non-finite timestamp");
        out.nodes.push_back(c.src);
        out.nodes.push_back(c.dst);
    }
    std::sort(out.nodes.begin(), out.nodes.end());
    out.nodes.erase(std::unique(out.nodes.begin(), out.nodes.end()), out.nodes.end());

    out.edges.reserve(contacts.size());
    for (const auto& c : contacts) {
        if (c.src == c.dst) {
            ++out.dropped_self_loops;
            continue;
        }
        out.edges.push_back({*out.index_of(c.src), *out.index_of(c.dst), c.timestamp});
        out.span = std::max(out.span, c.timestamp);
    }
    return out;
}

namespace {

template <typename T>
bool parse_number(std::string_view token, T& value) {
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    return ec == std::errc() && ptr == token.data() + token.size();
}

}  // namespace

TemporalEdgeList parse_edge_list(std::istream& in, bool directed) {
    std::vector<RawContact> contacts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::replace(line.begin(), line.end(), ',', ' ');
        auto tokens = split_whitespace(line);
        if (tokens.empty() || tokens.front().front() == '#') continue;
        if (tokens.size() != 3) {
            throw parse_error(line_no, "expected 3 fields (src dst timestamp), found " +
                                           std::to_string(tokens.size()));
        }
        RawContact c{};
        if (!parse_number(tokens[0], c.src) || !parse_number(tokens[1], c.dst)) {
            throw parse_error(line_no, "node ids must be non-negative integers");
        }
        if (!parse_number(tokens[2], c.timestamp) || !std::isfinite(c.timestamp)) {
            throw parse_error(line_no, "timestamp is not a number");
        }
        if (c.timestamp < 0.0) {
            throw validation_error("line " + std::to_string(line_no) + ": negative timestamp");
        }
        contacts.push_back(c);
    }
    return make_edge_list(contacts, directed);
}

void write_edge_list(std::ostream& out, const TemporalEdgeList& edges) {
    for (const auto& e : edges.edges) {
        out << edges.nodes[e.src] << ' ' << edges.nodes[e.dst] << ' ' << format_double(e.timestamp)
            << '\n';
    }
}

void scale_timestamps(TemporalEdgeList& edges, double factor) {
    if (!(factor > 0.0)) throw validation_error("timestamp scale must be positive");
    for (auto& e : edges.edges) e.timestamp *= factor;
    edges.span *= factor;
}

void rebase_timestamps(TemporalEdgeList& edges) {
    if (edges.edges.empty()) return;
    double lo = edges.edges.front().timestamp;
    for (const auto& e : edges.edges) lo = std::min(lo, e.timestamp);
    for (auto& e : edges.edges) e.timestamp -= lo;
    edges.span -= lo;
}

WeightedSnapshot::WeightedSnapshot(int index, std::size_t num_nodes, bool directed)
    : index_(index), directed_(directed), offsets_(num_nodes + 1, 0), in_degree_(num_nodes, 0) {}

WeightedSnapshot WeightedSnapshot::from_pairs(int index, std::size_t num_nodes, bool directed,
                                              std::vector<std::pair<node_id, node_id>> arcs) {
    WeightedSnapshot snap(index, num_nodes, directed);
    if (!directed) {
        const std::size_t n = arcs.size();
        arcs.reserve(2 * n);
        for (std::size_t i = 0; i < n; ++i) arcs.emplace_back(arcs[i].second, arcs[i].first);
    }
    std::sort(arcs.begin(), arcs.end());

    snap.arcs_.reserve(arcs.size());
    std::vector<std::size_t> counts(num_nodes, 0);
    for (std::size_t i = 0; i < arcs.size();) {
        std::size_t j = i;
        while (j < arcs.size() && arcs[j] == arcs[i]) ++j;
        const auto [u, v] = arcs[i];
        if (u >= num_nodes || v >= num_nodes) throw contract_error("arc endpoint outside node universe");
        snap.arcs_.push_back({v, static_cast<std::uint32_t>(j - i)});
        ++counts[u];
        ++snap.in_degree_[v];
        i = j;
    }
    for (std::size_t u = 0; u < num_nodes; ++u) snap.offsets_[u + 1] = snap.offsets_[u] + counts[u];
    return snap;
}

std::uint32_t WeightedSnapshot::weight(node_id u, node_id v) const {
    auto row = out_arcs(u);
    auto it = std::lower_bound(row.begin(), row.end(), v,
                               [](const Arc& a, node_id target) { return a.target < target; });
    return (it != row.end() && it->target == v) ? it->weight : 0;
}

std::uint64_t WeightedSnapshot::total_weight() const {
    std::uint64_t total = 0;
    for (const auto& a : arcs_) total += a.weight;
    return total;
}

bool WeightedSnapshot::operator==(const WeightedSnapshot& o) const {
    auto same_arcs = std::equal(arcs_.begin(), arcs_.end(), o.arcs_.begin(), o.arcs_.end(),
                                [](const Arc& a, const Arc& b) {
                                    return a.target == b.target && a.weight == b.weight;
                                });
    return index_ == o.index_ && directed_ == o.directed_ && offsets_ == o.offsets_ && same_arcs &&
           in_degree_ == o.in_degree_;
}

int snapshot_count(double span, double delta) {
    if (!(delta > 0.0)) throw validation_error("snapshot interval must be positive");
    return std::max(1, static_cast<int>(std::ceil(span / delta)));
}

std::vector<WeightedSnapshot> build_snapshots(const TemporalEdgeList& edges, double delta) {
    const int count = snapshot_count(edges.span, delta);
    std::vector<std::vector<std::pair<node_id, node_id>>> buckets(static_cast<std::size_t>(count));
    for (const auto& e : edges.edges) {
        auto t = static_cast<long long>(std::floor(e.timestamp / delta));
        t = std::clamp<long long>(t, 0, count - 1);
        buckets[static_cast<std::size_t>(t)].emplace_back(e.src, e.dst);
    }

    std::vector<WeightedSnapshot> out;
    out.reserve(buckets.size());
    for (int t = 0; t < count; ++t) {
        out.push_back(WeightedSnapshot::from_pairs(t + 1, edges.num_nodes(), edges.directed,
                                                   std::move(buckets[static_cast<std::size_t>(t)])));
    }
    return out;
}

Neighborhood select_neighborhood(const WeightedSnapshot& snapshot, node_id center, int k) {
    if (center >= snapshot.num_nodes()) {
        throw lookup_error("node " + std::to_string(center) + " is not in the snapshot");
    }
    if (k < 1) throw validation_error("neighborhood size must be at least 1");

    Neighborhood nbhd;
    nbhd.center = center;
    nbhd.k = k;
    nbhd.members.push_back(center);

    const auto wanted = static_cast<std::size_t>(k);
    std::vector<bool> seen(snapshot.num_nodes(), false);
    seen[center] = true;
    std::vector<node_id> frontier{center};
    std::vector<node_id> next;
    while (nbhd.members.size() < wanted && !frontier.empty()) {
        next.clear();
        for (node_id u : frontier) {
            for (const auto& arc : snapshot.out_arcs(u)) {
                if (!seen[arc.target]) {
                    seen[arc.target] = true;
                    next.push_back(arc.target);
                }
            }
        }
        std::sort(next.begin(), next.end(), [&](node_id a, node_id b) {
            const auto da = snapshot.degree(a), db = snapshot.degree(b);
            return da != db ? da > db : a < b;
        });
        for (node_id v : next) {
            if (nbhd.members.size() == wanted) break;
            nbhd.members.push_back(v);
        }
        std::swap(frontier, next);
    }
    return nbhd;
}

FeatureMatrix build_feature_matrix(const WeightedSnapshot& snapshot, const Neighborhood& nbhd) {
    if (nbhd.members.empty() || nbhd.members.size() > static_cast<std::size_t>(nbhd.k)) {
        throw contract_error("neighborhood has an invalid member count");
    }
    FeatureMatrix m;
    m.k = nbhd.k;
    m.center = nbhd.center;
    m.snapshot_index = snapshot.index();
    m.values.assign(static_cast<std::size_t>(nbhd.k) * nbhd.k, 0.0);

    const int size = static_cast<int>(nbhd.members.size());
    for (int i = 0; i < size; ++i) {
        const node_id u = nbhd.members[i];
        m(i, i) = static_cast<double>(snapshot.out_degree(u));
        for (int j = 0; j < size; ++j) {
            if (i != j) m(i, j) = snapshot.weight(u, nbhd.members[j]);
        }
    }
    return m;
}

FeatureMatrix node_feature_matrix(const WeightedSnapshot& snapshot, node_id center, int k) {
    return build_feature_matrix(snapshot, select_neighborhood(snapshot, center, k));
}

}  // namespace dgcn
