#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "npvar/data.hpp"
#include "npvar/graph.hpp"
#include "npvar/npvar.hpp"
#include "npvar/regress.hpp"
#include "npvar/simulate.hpp"

namespace npvar {

// Linear Gaussian SEM X_j = <w_.j, X> + z_j with acyclic support; every
// conditional variance is a Schur complement of the implied covariance.
struct GaussianLinearModel {
    int d = 0;
    std::vector<std::vector<double>> weights;  // weights[k][j]: edge k -> j
    std::vector<double> noise_var;

    static GaussianLinearModel from_edges(int d, const std::vector<std::pair<int, int>>& edges,
                                          const std::vector<double>& edge_weights,
                                          const std::vector<double>& noise_var);
    std::vector<std::vector<double>> covariance() const;
    Dag dag() const;
};

// The three-node linear model of the greedy-failure analysis: unit weights
// on 1->2, 1->3, 2->3 and unit noise everywhere.
GaussianLinearModel appendix_c_model();

double gaussian_linear_cond_var(const GaussianLinearModel& model, int target,
                                const std::vector<int>& cond);

// Binary Bayesian network with full conditional probability tables;
// conditional variances are computed by exhaustive joint enumeration with
// Kahan summation (d <= 20).
struct BinaryModel {
    Dag dag;
    // cpt[j][c] = P(X_j = 1 | parent configuration c); bit m of c is the
    // value of the m-th parent in ascending parent order
    std::vector<std::vector<double>> cpt;
};

double discrete_enum_cond_var(const BinaryModel& model, int target, const std::vector<int>& cond);

// GLM chain: transition table {p, 1-p}, per-node direction given by flip.
BinaryModel glm_chain_binary(int d, double p, const std::vector<bool>& flip);

// Random table with every entry in {p, 1-p}, resampled until it depends on
// each declared parent; all nodes then have residual variance p(1-p).
BinaryModel random_equal_variance_binary(const Dag& dag, double p, std::uint64_t seed);

// All ancestral sets of a DAG (sets closed under taking parents), each
// sorted ascending; exponential in d, intended for small reference checks.
std::vector<std::vector<int>> all_ancestral_sets(const Dag& dag);

struct McEstimate {
    double value = 0.0;
    double se = 0.0;
};

// Nested Monte Carlo for Markov-chain models via the law of total variance:
// E var(X_t | prefix) = sigma_t^2 + E var(f_t(X_{t-1}) | prefix). The outer
// loop draws the prefix, the inner loop simulates the chain conditionally.
McEstimate chain_mc_cond_var(const SemModel& model, int target, int prefix_len, int n_outer,
                             int n_inner, std::uint64_t seed);

// ---- VarianceOracle implementations ----

class GaussianLinearOracle final : public VarianceOracle {
public:
    explicit GaussianLinearOracle(GaussianLinearModel model) : model_(std::move(model)) {}
    double query(int target, const std::vector<int>& cond) const override {
        return gaussian_linear_cond_var(model_, target, cond);
    }
    int dim() const override { return model_.d; }

private:
    GaussianLinearModel model_;
};

class BinaryEnumOracle final : public VarianceOracle {
public:
    explicit BinaryEnumOracle(BinaryModel model) : model_(std::move(model)) {}
    double query(int target, const std::vector<int>& cond) const override {
        return discrete_enum_cond_var(model_, target, cond);
    }
    int dim() const override { return model_.dag.node_count(); }

private:
    BinaryModel model_;
};

// Closed-form residual variances of the quadratic chain X2 = X1^2/2 + z2,
// X3 = X2^2/3 + z3 with var(z2) = 2/3; supports ancestral-prefix queries.
class ExampleB1Oracle final : public VarianceOracle {
public:
    explicit ExampleB1Oracle(double sigma3_sq) : v3_(sigma3_sq) {}
    double query(int target, const std::vector<int>& cond) const override;
    int dim() const override { return 3; }

private:
    double v3_;
};

// Decorator that appends every query to an audit log as one JSON line per
// query: {"oracle": name, "target": t, "cond": [...], "value": v}. Node ids
// are 1-based in the log.
class QueryLoggingOracle final : public VarianceOracle {
public:
    QueryLoggingOracle(const VarianceOracle& inner, std::string name, const std::string& path);
    double query(int target, const std::vector<int>& cond) const override;
    int dim() const override { return inner_.dim(); }

private:
    const VarianceOracle& inner_;
    std::string name_;
    mutable std::ofstream log_;
};

// Estimated variances: full-sample fit + plug-in on the same sample (no
// splitting); queries are cached. Used for data-driven greedy scoring.
class PluginVarianceOracle final : public VarianceOracle {
public:
    PluginVarianceOracle(Dataset ds, RegressorSpec spec)
        : ds_(std::move(ds)), spec_(spec) {}
    double query(int target, const std::vector<int>& cond) const override;
    int dim() const override { return ds_.col_count(); }

private:
    Dataset ds_;
    RegressorSpec spec_;
    mutable std::map<std::pair<int, std::vector<int>>, double> cache_;
};

// ---- baseline order estimators ----

// Linear EqVar baseline: iterative argmin of Schur-complement conditional
// variances of the sample covariance matrix.
Ordering eqvar_linear_order(const Dataset& ds);

struct GreedyEdgeStep {
    int from = -1;
    int to = -1;
    double score = 0.0;  // log variance ratio of the added edge
};

struct GreedyResult {
    Ordering order;  // canonical ordering of the grown graph
    std::vector<GreedyEdgeStep> steps;
    Dag graph;
};

// CAM-style greedy IncEdge loop: repeatedly add the acyclicity-preserving
// edge maximizing log E var(X_j|S_j) - log E var(X_j|S_j + i), stopping when
// no addition improves by more than 1e-12; ties break (i,j)-lexicographic.
GreedyResult greedy_incedge_order(const VarianceOracle& variances);

}  // namespace npvar
