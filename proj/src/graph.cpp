#include "npvar/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "npvar/errors.hpp"

namespace npvar {

Dag::Dag(int d, std::vector<std::pair<int, int>> edges) : d_(d) {
    if (d < 1) throw config_error("Dag: node count must be positive");
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    parents_.assign(d, {});
    children_.assign(d, {});
    for (const auto& [from, to] : edges) {
        if (from < 0 || from >= d || to < 0 || to >= d)
            throw config_error("Dag: edge index out of range");
        if (from == to) throw config_error("Dag: self-loop not allowed");
        parents_[to].push_back(from);
        children_[from].push_back(to);
    }
    edges_ = std::move(edges);

    // Kahn's algorithm; failing to place every node means there is a cycle.
    std::vector<int> indeg(d, 0);
    for (int j = 0; j < d; ++j) indeg[j] = static_cast<int>(parents_[j].size());
    std::vector<int> stack;
    for (int j = 0; j < d; ++j)
        if (indeg[j] == 0) stack.push_back(j);
    int placed = 0;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        ++placed;
        for (int v : children_[u])
            if (--indeg[v] == 0) stack.push_back(v);
    }
    if (placed != d) throw config_error("Dag: edge set contains a directed cycle");
}

bool Dag::has_edge(int from, int to) const {
    const auto& ch = children_[from];
    return std::binary_search(ch.begin(), ch.end(), to);
}

std::vector<int> LayerDecomposition::layer_of(int d) const {
    std::vector<int> out(d, -1);
    for (int li = 0; li < static_cast<int>(layers.size()); ++li)
        for (int node : layers[li]) out[node] = li;
    return out;
}

std::vector<int> Ordering::positions() const {
    std::vector<int> pos(perm.size(), -1);
    for (int k = 0; k < static_cast<int>(perm.size()); ++k) {
        int node = perm[k];
        if (node < 0 || node >= static_cast<int>(perm.size()) || pos[node] != -1)
            throw config_error("Ordering: not a permutation of the node indices");
        pos[node] = k;
    }
    return pos;
}

LayerDecomposition layer_decomposition(const Dag& dag) {
    const int d = dag.node_count();
    std::vector<int> indeg(d, 0);
    for (int j = 0; j < d; ++j) indeg[j] = static_cast<int>(dag.parents(j).size());

    LayerDecomposition ld;
    std::vector<bool> assigned(d, false);
    std::vector<int> frontier;
    for (int j = 0; j < d; ++j)
        if (indeg[j] == 0) frontier.push_back(j);

    while (!frontier.empty()) {
        std::sort(frontier.begin(), frontier.end());
        ld.layers.push_back(frontier);
        std::vector<int> next;
        for (int u : frontier) {
            assigned[u] = true;
            for (int v : dag.children(u))
                if (--indeg[v] == 0) next.push_back(v);
        }
        frontier = std::move(next);
    }
    return ld;
}

bool is_consistent_ordering(const Dag& dag, const Ordering& ord) {
    if (ord.size() != dag.node_count())
        throw config_error("is_consistent_ordering: ordering length does not match node count");
    std::vector<int> pos = ord.positions();
    for (const auto& [from, to] : dag.edges())
        if (pos[from] >= pos[to]) return false;
    return true;
}

Ordering ordering_from_layers(const LayerDecomposition& ld) {
    Ordering ord;
    for (const auto& layer : ld.layers) {
        std::vector<int> sorted = layer;
        std::sort(sorted.begin(), sorted.end());
        ord.perm.insert(ord.perm.end(), sorted.begin(), sorted.end());
    }
    return ord;
}

int shd(const Dag& estimate, const Dag& truth) {
    if (estimate.node_count() != truth.node_count())
        throw config_error("shd: graphs have different node counts");
    const int d = truth.node_count();
    int dist = 0;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            bool t_ij = truth.has_edge(i, j), t_ji = truth.has_edge(j, i);
            bool e_ij = estimate.has_edge(i, j), e_ji = estimate.has_edge(j, i);
            bool t_any = t_ij || t_ji, e_any = e_ij || e_ji;
            if (t_any != e_any) {
                ++dist;  // addition or deletion
            } else if (t_any && (t_ij != e_ij)) {
                ++dist;  // reversal counts once
            }
        }
    }
    return dist;
}

void write_dag_csv(const Dag& dag, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("write_dag_csv: cannot open " + path);
    out << "# d=" << dag.node_count() << "\n";
    out << "parent,child\n";
    for (const auto& [from, to] : dag.edges())
        out << (from + 1) << "," << (to + 1) << "\n";
    if (!out) throw data_error("write_dag_csv: write failed for " + path);
}

Dag read_dag_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("read_dag_csv: cannot open " + path);
    std::string line;
    int d = -1;
    bool header_seen = false;
    std::vector<std::pair<int, int>> edges;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto pos = line.find("d=");
            if (pos != std::string::npos) d = std::atoi(line.c_str() + pos + 2);
            continue;
        }
        if (!header_seen) {
            if (line != "parent,child")
                throw data_error("read_dag_csv: expected 'parent,child' header at line " +
                                 std::to_string(lineno) + " of " + path);
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b))
            throw data_error("read_dag_csv: malformed edge at line " + std::to_string(lineno));
        edges.emplace_back(std::stoi(a) - 1, std::stoi(b) - 1);
    }
    if (d < 1) throw data_error("read_dag_csv: missing '# d=<int>' line in " + path);
    return Dag(d, std::move(edges));
}

}  // namespace npvar
