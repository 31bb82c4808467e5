#pragma once

#include <cstdint>
#include <optional>

#include "npvar/data.hpp"
#include "npvar/graph.hpp"
#include "npvar/regress.hpp"

namespace npvar {

struct PruneConfig {
    RegressorSpec spec;
    double tau = 0.05;             // relative residual-variance-drop threshold
    double holdout = 0.5;          // evaluation fraction
    std::optional<int> max_parents;  // defaults to d-1
    std::uint64_t seed = 0;        // drives the fit/holdout partition
    bool backward_pass = true;     // forward-only runs are monotone in tau
};

// Parent recovery given an ordering: per node, greedy forward selection over
// its predecessors by held-out residual-variance reduction, then one
// backward sweep dropping parents whose removal costs less than tau. Edges
// respect the ordering, so the result is a DAG by construction.
Dag prune_parents(const Dataset& ds, const Ordering& ord, const PruneConfig& cfg);

}  // namespace npvar
