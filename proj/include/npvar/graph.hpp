#pragma once

#include <string>
#include <utility>
#include <vector>

namespace npvar {

// Immutable directed acyclic graph over nodes 0..d-1. Acyclicity and index
// bounds are checked on construction; duplicate edges collapse (edge set
// semantics).
class Dag {
public:
    Dag(int d, std::vector<std::pair<int, int>> edges);

    int node_count() const { return d_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<int>& parents(int node) const { return parents_[node]; }
    const std::vector<int>& children(int node) const { return children_[node]; }
    bool has_edge(int from, int to) const;

    bool operator==(const Dag& other) const {
        return d_ == other.d_ && edges_ == other.edges_;
    }

private:
    int d_;
    std::vector<std::pair<int, int>> edges_;  // sorted, unique
    std::vector<std::vector<int>> parents_;   // sorted ascending
    std::vector<std::vector<int>> children_;  // sorted ascending
};

// Ordered partition (L1,...,Lr) of the nodes; each layer sorted ascending.
struct LayerDecomposition {
    std::vector<std::vector<int>> layers;

    int layer_count() const { return static_cast<int>(layers.size()); }
    // layer index of each node, or -1 if absent
    std::vector<int> layer_of(int d) const;
};

// Permutation of 0..d-1; perm[k] is the node placed at position k.
struct Ordering {
    std::vector<int> perm;

    int size() const { return static_cast<int>(perm.size()); }
    // position of each node in the ordering
    std::vector<int> positions() const;
};

// Unique layer decomposition: L1 = sources, L_{j+1} = sources of the
// subgraph after removing the first j layers.
LayerDecomposition layer_decomposition(const Dag& dag);

// True iff every edge (i,j) has i placed before j.
bool is_consistent_ordering(const Dag& dag, const Ordering& ord);

// Canonical ordering of a decomposition: layers in sequence, ascending
// index within a layer.
Ordering ordering_from_layers(const LayerDecomposition& ld);

// Structural Hamming distance; a reversed edge counts as one edit.
int shd(const Dag& estimate, const Dag& truth);

// Edge-list CSV with a "# d=<int>" comment line and 1-based node ids.
void write_dag_csv(const Dag& dag, const std::string& path);
Dag read_dag_csv(const std::string& path);

}  // namespace npvar
