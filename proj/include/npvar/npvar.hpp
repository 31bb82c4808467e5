#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "npvar/data.hpp"
#include "npvar/graph.hpp"
#include "npvar/regress.hpp"

namespace npvar {

// Source of residual variances E var(X_target | X_cond). Implementations are
// either exact (closed form, enumeration) or estimated (plug-in on data).
// An empty conditioning set means Var(X_target).
class VarianceOracle {
public:
    virtual ~VarianceOracle() = default;
    virtual double query(int target, const std::vector<int>& cond) const = 0;
    virtual int dim() const = 0;
};

struct NpvarConfig {
    std::optional<double> eta;  // nullopt selects the auto rule
    RegressorSpec spec;
    std::uint64_t seed = 0;
    bool disable_split = false;
    std::optional<int> max_layers;  // defaults to d
    bool centered_plugin = false;   // non-default alternative to the
                                    // uncentered plug-in moments
    int workers = 1;  // per-iteration fits are independent; results reduce
                      // by node index, so any worker count is bit-identical
};

struct TraceEntry {
    int iteration;  // 0 = marginal variances
    int node;
    double sigma2;
};

struct NpvarResult {
    LayerDecomposition layers;
    std::vector<TraceEntry> trace;           // every (iteration, unassigned node)
    std::vector<TraceEntry> chosen;          // per-iteration argmin
    double eta_used = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> split_seeds;  // one per regression iteration
    long regression_calls = 0;               // estimator fits performed

    Ordering ordering() const { return ordering_from_layers(layers); }
};

// Iterative argmin of residual variances over all remaining nodes; ties go
// to the lowest index. d oracle sweeps, O(d^2) queries.
Ordering population_order(const VarianceOracle& oracle, int d);

// Layer recovery from data: marginal variances on the full sample, then one
// resplit + regression round per layer with the plug-in estimator.
NpvarResult npvar_layers(const Dataset& ds, const NpvarConfig& cfg);

// Same layering loop fed by an exact oracle instead of the plug-in; used by
// tests and by the large-eta failure analysis.
NpvarResult npvar_layers_from_oracle(const VarianceOracle& oracle, double eta,
                                     std::optional<int> max_layers = std::nullopt);

// Threshold rule used when eta is not given: a quarter of the gap between
// the two smallest first-round estimates, floored at 1e-6.
double auto_eta(const std::vector<double>& first_iteration_estimates);

// Per-pair report for the unequal-variance identifiability condition: for
// ordering position j (node i = pi_j) and every later node k, tests
//   sigma_i^2 < sigma_k^2 + E var(E(X_k|pa(k)) | X_{pi[1:j-1]})
// where the second term is oracle(k, prefix) - sigma_k^2 by the law of total
// variance. Same-layer pairs may instead satisfy sigma_i^2 = sigma_k^2.
// The condition is sufficient, not necessary: a later-layer node whose
// parents are already inside the prefix sits exactly at sigma_k^2 and is
// reported as violated even for models that remain identifiable.
struct UnequalCondPair {
    int j = 0;  // 1-based position in the ordering
    int i = -1;
    int k = -1;
    double sigma_i_sq = 0.0;
    double sigma_k_sq = 0.0;
    double rhs = 0.0;  // sigma_k^2 + E var(E(X_k|pa(k)) | prefix)
    bool same_layer = false;
    bool parents_explained = false;  // pa(k) inside the prefix
    bool holds_strict = false;
    bool holds_equal_same_layer = false;
    bool violated = false;
};

struct UnequalCondReport {
    std::vector<UnequalCondPair> pairs;
    bool satisfied = true;  // no violated pair
};

UnequalCondReport check_unequal_condition(const VarianceOracle& oracle, const Dag& dag,
                                          const std::vector<double>& node_residual_variance,
                                          const Ordering& pi);

}  // namespace npvar
