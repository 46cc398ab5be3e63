#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace dgcn {

/// Dense node index in [0, N). Original ids live in TemporalEdgeList::nodes.
using node_id = std::uint32_t;
using raw_node_id = std::uint64_t;

struct TemporalEdge {
    node_id src = 0;
    node_id dst = 0;
    double timestamp = 0.0;  // seconds since the data epoch
};

/// Timestamped contacts in input order over a dense node universe.
struct TemporalEdgeList {
    std::vector<TemporalEdge> edges;
    std::vector<raw_node_id> nodes;  // dense index -> original id, ascending
    double span = 0.0;               // max timestamp, 0 when empty
    bool directed = true;
    std::size_t dropped_self_loops = 0;

    std::size_t num_nodes() const { return nodes.size(); }
    std::optional<node_id> index_of(raw_node_id id) const;
};

/// Builds an edge list from raw (src, dst, timestamp) triples, remapping ids
/// to the dense range in ascending original-id order. Self-loops are dropped
/// but their endpoints still join the node universe.
struct RawContact {
    raw_node_id src;
    raw_node_id dst;
    double timestamp;
};
TemporalEdgeList make_edge_list(std::span<const RawContact> contacts, bool directed);

/// Reads "src dst timestamp" lines separated by whitespace or commas. Blank
/// lines and lines starting with '#' are skipped.
TemporalEdgeList parse_edge_list(std::istream& in, bool directed);

/// Writes the same text format back out using original node ids.
void write_edge_list(std::ostream& out, const TemporalEdgeList& edges);

/// Multiplies every timestamp by `factor` (unit conversion to seconds).
void scale_timestamps(TemporalEdgeList& edges, double factor);

/// Shifts timestamps so the earliest contact sits at 0.
void rebase_timestamps(TemporalEdgeList& edges);

/// One interval of the network collapsed to occurrence-count weights. Every
/// snapshot of a network carries the full node universe. Arcs are kept in
/// CSR form sorted by target; undirected snapshots store both directions.
class WeightedSnapshot {
public:
    struct Arc {
        node_id target;
        std::uint32_t weight;
    };

    WeightedSnapshot(int index, std::size_t num_nodes, bool directed);

    /// `arcs` are (src, dst) pairs; repeated pairs accumulate into the weight.
    /// For undirected snapshots each pair is mirrored.
    static WeightedSnapshot from_pairs(int index, std::size_t num_nodes, bool directed,
                                       std::vector<std::pair<node_id, node_id>> arcs);

    int index() const { return index_; }
    std::size_t num_nodes() const { return in_degree_.size(); }
    bool directed() const { return directed_; }

    std::span<const Arc> out_arcs(node_id u) const {
        return {arcs_.data() + offsets_[u], arcs_.data() + offsets_[u + 1]};
    }
    std::size_t out_degree(node_id u) const { return offsets_[u + 1] - offsets_[u]; }
    std::size_t in_degree(node_id u) const { return in_degree_[u]; }
    /// in + out for directed snapshots, the plain degree otherwise.
    std::size_t degree(node_id u) const {
        return directed_ ? out_degree(u) + in_degree(u) : out_degree(u);
    }
    /// W(u, v), or 0 when the arc is absent.
    std::uint32_t weight(node_id u, node_id v) const;

    std::size_t num_arcs() const { return arcs_.size(); }
    /// Sum of W over stored arcs (mirrored arcs count twice when undirected).
    std::uint64_t total_weight() const;

    bool operator==(const WeightedSnapshot&) const;

private:
    int index_;
    bool directed_;
    std::vector<std::size_t> offsets_;
    std::vector<Arc> arcs_;
    std::vector<std::uint32_t> in_degree_;
};

/// Number of intervals of width `delta` needed to cover `span`, at least 1.
int snapshot_count(double span, double delta);

/// Slices contacts into L = max(1, ceil(span / delta)) weighted snapshots.
/// Snapshot t (1-based) takes timestamps in [delta (t-1), delta t); the
/// final interval is closed so a contact at exactly `span` lands in L.
std::vector<WeightedSnapshot> build_snapshots(const TemporalEdgeList& edges, double delta);

struct Neighborhood {
    node_id center = 0;
    std::vector<node_id> members;  // members[0] == center
    int k = 1;
};

/// Center plus up to k-1 reachable nodes ordered by (BFS distance along
/// out-arcs, descending degree, ascending id).
Neighborhood select_neighborhood(const WeightedSnapshot& snapshot, node_id center, int k);

/// Row-major k x k matrix: out-degrees on the diagonal, induced-subgraph
/// weights off it, zero padding past the neighborhood.
struct FeatureMatrix {
    int k = 0;
    node_id center = 0;
    int snapshot_index = 0;
    std::vector<double> values;

    double operator()(int i, int j) const { return values[static_cast<std::size_t>(i) * k + j]; }
    double& operator()(int i, int j) { return values[static_cast<std::size_t>(i) * k + j]; }
};

FeatureMatrix build_feature_matrix(const WeightedSnapshot& snapshot, const Neighborhood& nbhd);

/// select_neighborhood followed by build_feature_matrix.
FeatureMatrix node_feature_matrix(const WeightedSnapshot& snapshot, node_id center, int k);

}  // namespace dgcn
