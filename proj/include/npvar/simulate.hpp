#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "npvar/data.hpp"
#include "npvar/graph.hpp"
#include "npvar/rng.hpp"

namespace npvar {

// A fixed function drawn via random Fourier features, approximating a
// Gaussian-process sample with RBF kernel of length-scale one. Evaluable at
// arbitrary points; the same input always gives the same value.
struct GpFunction {
    std::vector<std::vector<double>> frequencies;  // D x p
    std::vector<double> phases;                    // D
    double amplitude = 1.0;

    double eval(std::span<const double> x) const;
    static GpFunction sample(int input_dim, int num_features, Rng& rng);
};

struct Mechanism {
    enum class Kind { source, linear, sine_additive, gp_additive, gp_nonadditive, glm_binary, custom };

    Kind kind = Kind::source;
    std::vector<double> weights;  // linear, one per parent
    std::vector<GpFunction> gps;  // gp_additive: one per parent; gp_nonadditive: one joint
    double glm_p = 0.0;
    bool glm_flip = false;  // swaps the {p, 1-p} transition direction
    std::function<double(std::span<const double>)> custom;
    std::string label;  // describes custom mechanisms in manifests

    // Conditional mean of the node given its parents' values (for GLM nodes,
    // the success probability).
    double mean(std::span<const double> parent_values) const;
    std::string describe() const;
};

// Generative ground-truth model: graph plus one structural equation per
// node. Continuous nodes add Gaussian noise; binary nodes draw Bernoulli.
struct SemModel {
    Dag dag;
    std::vector<Mechanism> mechanisms;  // indexed by node
    std::vector<double> noise_var;      // per node; unused for binary nodes
    std::vector<bool> binary;           // GLM nodes

    // E var(X_j | pa(j)): noise variance for continuous nodes, p(1-p) for
    // binary ones.
    double node_residual_variance(int node) const;
};

enum class GraphKind { mc, er, sf };
enum class ModelKind { sin, agp, ngp, glm, linear };

GraphKind parse_graph_kind(const std::string& text);
ModelKind parse_model_kind(const std::string& text);

// mc: the chain X_{i-1} -> X_i. er: each unordered pair kept independently
// with probability expected_edges / (d(d-1)/2), oriented by a random
// permutation. sf: Barabasi-Albert with ceil(expected_edges/d) attachments
// per new node, oriented old -> new.
Dag gen_graph(GraphKind kind, int d, double expected_edges, std::uint64_t seed);

SemModel attach_mechanisms(const Dag& dag, ModelKind kind, double sigma2, std::uint64_t seed,
                           double glm_p = 0.1);

// Nodes are generated in topological order; per-node noise comes from a
// stream derived from (seed, node), so any valid processing order yields the
// same dataset. order_override must be a consistent ordering when given.
Dataset simulate_dataset(const SemModel& model, int n, std::uint64_t seed,
                         const std::optional<Ordering>& order_override = std::nullopt);

// Exact jointly-Gaussian function values at the given input rows (RBF
// kernel, length-scale one, unit amplitude). Unlike a GpFunction these
// values exist only at the supplied points; they serve fidelity studies of
// the RFF approximation.
std::vector<double> sample_gp_values_exact(const std::vector<std::vector<double>>& points,
                                           Rng& rng);

// Dataset synthesis for agp/ngp mechanisms where each node's function
// values are drawn exactly at the realized parent rows instead of through
// an RFF function. Non-default mode; the mechanisms are not reusable
// functions afterwards.
Dataset simulate_dataset_exact_gp(const Dag& dag, ModelKind kind, double sigma2, int n,
                                  std::uint64_t seed);

// Closed-form counterexample models.
enum class Nonlinearity { sigpow14, sine };  // sgn(u)|u|^{1.4} and sin(u)

struct NamedModelId {
    enum class Family { camfail_linear, camfail_gdelta, camfail_quadratic, eq5, example_b1 };
    Family family = Family::camfail_linear;
    Nonlinearity g = Nonlinearity::sine;
    double delta = 0.0;      // camfail_gdelta
    double sigma3_sq = 0.5;  // example_b1
};

SemModel named_model(const NamedModelId& id);
NamedModelId parse_named_model(const std::string& text);
std::string named_model_label(const NamedModelId& id);

}  // namespace npvar
