#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "npvar/errors.hpp"
#include "npvar/graph.hpp"
#include "npvar/rng.hpp"
#include "npvar/simulate.hpp"

using namespace npvar;

namespace {

// Independent O(d^3) reference: repeatedly strip nodes with no remaining
// parents, recomputing from the raw edge list each round.
LayerDecomposition reference_layers(int d, const std::vector<std::pair<int, int>>& edges) {
    LayerDecomposition ld;
    std::vector<bool> removed(d, false);
    int left = d;
    while (left > 0) {
        std::vector<int> layer;
        for (int j = 0; j < d; ++j) {
            if (removed[j]) continue;
            bool source = true;
            for (const auto& [from, to] : edges)
                if (to == j && !removed[from]) source = false;
            if (source) layer.push_back(j);
        }
        for (int j : layer) removed[j] = true;
        left -= static_cast<int>(layer.size());
        ld.layers.push_back(std::move(layer));
    }
    return ld;
}

Dag random_er_dag(int d, double expected_edges, std::uint64_t seed) {
    return gen_graph(GraphKind::er, d, expected_edges, seed);
}

}  // namespace

TEST_CASE("dag construction validates") {
    CHECK_THROWS_AS(Dag(3, {{0, 0}}), config_error);
    CHECK_THROWS_AS(Dag(3, {{0, 1}, {1, 2}, {2, 0}}), config_error);
    CHECK_THROWS_AS(Dag(2, {{0, 5}}), config_error);
    Dag dag(3, {{0, 1}, {1, 2}, {0, 1}});  // duplicate collapses
    CHECK(dag.edge_count() == 2);
    CHECK(dag.parents(2) == std::vector<int>{1});
    CHECK(dag.children(0) == std::vector<int>{1});
}

TEST_CASE("layer decomposition of a chain is one node per layer") {
    Dag chain(3, {{0, 1}, {1, 2}});
    auto ld = layer_decomposition(chain);
    REQUIRE(ld.layer_count() == 3);
    CHECK(ld.layers[0] == std::vector<int>{0});
    CHECK(ld.layers[1] == std::vector<int>{1});
    CHECK(ld.layers[2] == std::vector<int>{2});
}

TEST_CASE("edgeless graph is a single layer") {
    Dag dag(4, {});
    auto ld = layer_decomposition(dag);
    REQUIRE(ld.layer_count() == 1);
    CHECK(ld.layers[0] == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("layer decomposition matches the brute-force reference on random dags") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Dag dag = random_er_dag(8, 10.0, seed);
        auto got = layer_decomposition(dag);
        auto want = reference_layers(8, dag.edges());
        REQUIRE(got.layer_count() == want.layer_count());
        for (int li = 0; li < got.layer_count(); ++li) CHECK(got.layers[li] == want.layers[li]);
    }
}

TEST_CASE("layer property: every later-layer node has a parent one layer up") {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        Dag dag = random_er_dag(9, 12.0, seed);
        auto ld = layer_decomposition(dag);
        auto layer_idx = ld.layer_of(9);
        for (int li = 1; li < ld.layer_count(); ++li) {
            for (int node : ld.layers[li]) {
                bool has_prev_layer_parent = false;
                for (int p : dag.parents(node))
                    if (layer_idx[p] == li - 1) has_prev_layer_parent = true;
                CHECK(has_prev_layer_parent);
            }
        }
        // edges never point from a later layer to an earlier-or-same one
        for (const auto& [from, to] : dag.edges()) CHECK(layer_idx[from] < layer_idx[to]);
    }
}

TEST_CASE("layer decomposition commutes with relabeling") {
    for (std::uint64_t seed = 7; seed < 17; ++seed) {
        Dag dag = random_er_dag(7, 8.0, seed);
        std::vector<int> relabel(7);
        std::iota(relabel.begin(), relabel.end(), 0);
        Rng rng(seed * 31 + 5);
        for (int i = 6; i > 0; --i)
            std::swap(relabel[i], relabel[rng.uniform_index(i + 1)]);

        std::vector<std::pair<int, int>> mapped;
        for (const auto& [from, to] : dag.edges()) mapped.emplace_back(relabel[from], relabel[to]);
        Dag permuted(7, mapped);

        auto base = layer_decomposition(dag);
        auto perm = layer_decomposition(permuted);
        REQUIRE(base.layer_count() == perm.layer_count());
        for (int li = 0; li < base.layer_count(); ++li) {
            std::vector<int> expect;
            for (int node : base.layers[li]) expect.push_back(relabel[node]);
            std::sort(expect.begin(), expect.end());
            CHECK(perm.layers[li] == expect);
        }
    }
}

TEST_CASE("ordering consistency") {
    Dag chain(3, {{0, 1}, {1, 2}});
    CHECK(is_consistent_ordering(chain, Ordering{{0, 1, 2}}));
    CHECK_FALSE(is_consistent_ordering(chain, Ordering{{1, 0, 2}}));
    Dag vstruct(3, {{0, 2}, {1, 2}});
    CHECK(is_consistent_ordering(vstruct, Ordering{{1, 0, 2}}));
    CHECK_THROWS_AS(is_consistent_ordering(chain, Ordering{{0, 1}}), config_error);
}

TEST_CASE("canonical ordering from layers") {
    LayerDecomposition ld;
    ld.layers = {{1}, {0, 2}};
    CHECK(ordering_from_layers(ld).perm == std::vector<int>{1, 0, 2});
    LayerDecomposition chain;
    chain.layers = {{0}, {1}, {2}};
    CHECK(ordering_from_layers(chain).perm == std::vector<int>{0, 1, 2});
    LayerDecomposition two;
    two.layers = {{0, 1}, {2}};
    CHECK(ordering_from_layers(two).perm == std::vector<int>{0, 1, 2});
}

TEST_CASE("canonical ordering is consistent for any dag with that decomposition") {
    for (std::uint64_t seed = 3; seed < 23; ++seed) {
        Dag dag = random_er_dag(8, 11.0, seed);
        CHECK(is_consistent_ordering(dag, ordering_from_layers(layer_decomposition(dag))));
    }
}

TEST_CASE("shd counts additions, deletions, and reversals") {
    Dag chain(3, {{0, 1}, {1, 2}});
    CHECK(shd(chain, chain) == 0);
    Dag reversed_tail(3, {{0, 1}, {2, 1}});
    CHECK(shd(reversed_tail, chain) == 1);
    Dag er = random_er_dag(6, 8.0, 42);
    Dag empty(6, {});
    CHECK(shd(empty, er) == er.edge_count());
    CHECK_THROWS_AS(shd(chain, empty), config_error);
}

TEST_CASE("shd is a metric on random triples") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Dag a = random_er_dag(6, 7.0, 3 * seed);
        Dag b = random_er_dag(6, 7.0, 3 * seed + 1);
        Dag c = random_er_dag(6, 7.0, 3 * seed + 2);
        CHECK(shd(a, b) == shd(b, a));
        CHECK(shd(a, a) == 0);
        if (!(a == b)) CHECK(shd(a, b) > 0);
        CHECK(shd(a, c) <= shd(a, b) + shd(b, c));
    }
}

TEST_CASE("dag csv round trip, including edgeless nodes") {
    Dag dag(5, {{0, 2}, {3, 4}});
    std::string path = "test_dag_roundtrip.csv";
    write_dag_csv(dag, path);
    Dag back = read_dag_csv(path);
    CHECK(back == dag);
    CHECK(back.node_count() == 5);
    std::remove(path.c_str());
}
