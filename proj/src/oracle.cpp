#include "npvar/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "npvar/errors.hpp"
#include "npvar/rng.hpp"

namespace npvar {

namespace {

// Solve A x = b for symmetric positive definite A (in-place Cholesky).
std::vector<double> spd_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const int m = static_cast<int>(b.size());
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[i][j];
            for (int k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
            if (i == j) {
                if (s <= 0.0) throw numeric_error("spd_solve: matrix not positive definite");
                a[i][i] = std::sqrt(s);
            } else {
                a[i][j] = s / a[j][j];
            }
        }
    }
    for (int i = 0; i < m; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= a[i][k] * b[k];
        b[i] = s / a[i][i];
    }
    for (int i = m - 1; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k < m; ++k) s -= a[k][i] * b[k];
        b[i] = s / a[i][i];
    }
    return b;
}

// Schur complement Sigma_tt - Sigma_tC Sigma_CC^{-1} Sigma_Ct.
double schur_cond_var(const std::vector<std::vector<double>>& sigma, int target,
                      const std::vector<int>& cond) {
    if (cond.empty()) return sigma[target][target];
    const int m = static_cast<int>(cond.size());
    std::vector<std::vector<double>> scc(m, std::vector<double>(m));
    std::vector<double> sct(m);
    for (int a = 0; a < m; ++a) {
        sct[a] = sigma[cond[a]][target];
        for (int b = 0; b < m; ++b) scc[a][b] = sigma[cond[a]][cond[b]];
    }
    std::vector<double> x = spd_solve(std::move(scc), sct);
    double quad = 0.0;
    for (int a = 0; a < m; ++a) quad += sct[a] * x[a];
    return sigma[target][target] - quad;
}

struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        double y = v - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

double sample_variance(const std::vector<double>& v) {
    const size_t n = v.size();
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
}

void require_chain(const SemModel& model) {
    const int d = model.dag.node_count();
    for (int j = 0; j < d; ++j) {
        const auto& pa = model.dag.parents(j);
        bool ok = (j == 0 && pa.empty()) || (j > 0 && pa.size() == 1 && pa[0] == j - 1);
        if (!ok) throw config_error("chain_mc_cond_var: model is not a Markov chain");
        if (model.binary[j])
            throw config_error("chain_mc_cond_var: binary nodes are not supported");
    }
}

}  // namespace

GaussianLinearModel GaussianLinearModel::from_edges(int d,
                                                    const std::vector<std::pair<int, int>>& edges,
                                                    const std::vector<double>& edge_weights,
                                                    const std::vector<double>& noise_var) {
    if (edges.size() != edge_weights.size() || static_cast<int>(noise_var.size()) != d)
        throw config_error("GaussianLinearModel: size mismatch");
    Dag check(d, edges);  // validates acyclicity
    GaussianLinearModel m;
    m.d = d;
    m.weights.assign(d, std::vector<double>(d, 0.0));
    for (size_t e = 0; e < edges.size(); ++e) {
        if (edge_weights[e] == 0.0)
            throw config_error("GaussianLinearModel: zero weight on a declared edge");
        m.weights[edges[e].first][edges[e].second] = edge_weights[e];
    }
    m.noise_var = noise_var;
    for (double v : noise_var)
        if (v <= 0.0) throw config_error("GaussianLinearModel: noise variances must be positive");
    return m;
}

Dag GaussianLinearModel::dag() const {
    std::vector<std::pair<int, int>> edges;
    for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j)
            if (weights[k][j] != 0.0) edges.emplace_back(k, j);
    return Dag(d, std::move(edges));
}

std::vector<std::vector<double>> GaussianLinearModel::covariance() const {
    // X = M z with M = (I - W^T)^{-1}; Sigma = M diag(v) M^T. M is built by
    // accumulating ancestor contributions in topological order.
    Dag g = dag();
    Ordering topo = ordering_from_layers(layer_decomposition(g));
    std::vector<std::vector<double>> m(d, std::vector<double>(d, 0.0));
    for (int node : topo.perm) {
        m[node][node] = 1.0;
        for (int p : g.parents(node)) {
            double w = weights[p][node];
            for (int z = 0; z < d; ++z) m[node][z] += w * m[p][z];
        }
    }
    std::vector<std::vector<double>> sigma(d, std::vector<double>(d, 0.0));
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            double s = 0.0;
            for (int z = 0; z < d; ++z) s += m[a][z] * noise_var[z] * m[b][z];
            sigma[a][b] = sigma[b][a] = s;
        }
    return sigma;
}

GaussianLinearModel appendix_c_model() {
    return GaussianLinearModel::from_edges(3, {{0, 1}, {0, 2}, {1, 2}}, {1.0, 1.0, 1.0},
                                           {1.0, 1.0, 1.0});
}

double gaussian_linear_cond_var(const GaussianLinearModel& model, int target,
                                const std::vector<int>& cond) {
    for (int c : cond)
        if (c == target) throw config_error("gaussian_linear_cond_var: target in cond set");
    return schur_cond_var(model.covariance(), target, cond);
}

double discrete_enum_cond_var(const BinaryModel& model, int target,
                              const std::vector<int>& cond) {
    const int d = model.dag.node_count();
    if (d > 20) throw config_error("discrete_enum_cond_var: d must be at most 20");
    for (int c : cond)
        if (c == target) throw config_error("discrete_enum_cond_var: target in cond set");

    // accumulate P(C = c) and P(C = c, X_t = 1) over the full joint
    const int nc = static_cast<int>(cond.size());
    const size_t groups = size_t{1} << nc;
    std::vector<KahanSum> qc(groups), mc(groups);

    const std::uint32_t total = 1u << d;
    for (std::uint32_t assign = 0; assign < total; ++assign) {
        double prob = 1.0;
        for (int j = 0; j < d; ++j) {
            const auto& pa = model.dag.parents(j);
            std::uint32_t config = 0;
            for (size_t m = 0; m < pa.size(); ++m)
                config |= ((assign >> pa[m]) & 1u) << m;
            double p1 = model.cpt[j][config];
            prob *= ((assign >> j) & 1u) ? p1 : 1.0 - p1;
        }
        size_t group = 0;
        for (int m = 0; m < nc; ++m) group |= size_t{(assign >> cond[m]) & 1u} << m;
        qc[group].add(prob);
        if ((assign >> target) & 1u) mc[group].add(prob);
    }

    KahanSum out;
    for (size_t g = 0; g < groups; ++g) {
        double q = qc[g].sum;
        if (q <= 0.0) continue;
        double mu = mc[g].sum / q;
        out.add(q * mu * (1.0 - mu));
    }
    return out.sum;
}

BinaryModel glm_chain_binary(int d, double p, const std::vector<bool>& flip) {
    if (p <= 0.0 || p >= 1.0) throw config_error("glm_chain_binary: p must lie in (0,1)");
    if (static_cast<int>(flip.size()) != d) throw config_error("glm_chain_binary: flip size");
    std::vector<std::pair<int, int>> edges;
    for (int i = 1; i < d; ++i) edges.emplace_back(i - 1, i);
    BinaryModel model{Dag(d, std::move(edges)), {}};
    model.cpt.resize(d);
    for (int j = 0; j < d; ++j) {
        double hi = flip[j] ? 1.0 - p : p;
        if (j == 0)
            model.cpt[j] = {hi};
        else
            model.cpt[j] = {1.0 - hi, hi};  // parent = 0, parent = 1
    }
    return model;
}

BinaryModel random_equal_variance_binary(const Dag& dag, double p, std::uint64_t seed) {
    if (p <= 0.0 || p >= 1.0 || p == 0.5)
        throw config_error("random_equal_variance_binary: p must lie in (0,1) and differ from 0.5");
    const int d = dag.node_count();
    BinaryModel model{dag, {}};
    model.cpt.resize(d);
    Rng rng(seed);
    for (int j = 0; j < d; ++j) {
        const int np = static_cast<int>(dag.parents(j).size());
        const size_t rows = size_t{1} << np;
        auto& table = model.cpt[j];
        for (int attempt = 0; attempt < 1000; ++attempt) {
            table.resize(rows);
            for (size_t c = 0; c < rows; ++c) table[c] = rng.uniform() < 0.5 ? p : 1.0 - p;
            // keep only tables that react to every declared parent
            bool ok = true;
            for (int m = 0; m < np && ok; ++m) {
                bool reacts = false;
                for (size_t c = 0; c < rows && !reacts; ++c)
                    if (table[c] != table[c ^ (size_t{1} << m)]) reacts = true;
                ok = reacts;
            }
            if (ok) break;
            if (attempt == 999)
                throw numeric_error("random_equal_variance_binary: could not sample a table");
        }
    }
    return model;
}

std::vector<std::vector<int>> all_ancestral_sets(const Dag& dag) {
    const int d = dag.node_count();
    if (d > 20) throw config_error("all_ancestral_sets: d must be at most 20");
    std::vector<std::vector<int>> out;
    const std::uint32_t total = 1u << d;
    for (std::uint32_t mask = 0; mask < total; ++mask) {
        bool closed = true;
        for (int j = 0; j < d && closed; ++j) {
            if (!((mask >> j) & 1u)) continue;
            for (int parent : dag.parents(j))
                if (!((mask >> parent) & 1u)) {
                    closed = false;
                    break;
                }
        }
        if (!closed) continue;
        std::vector<int> set;
        for (int j = 0; j < d; ++j)
            if ((mask >> j) & 1u) set.push_back(j);
        out.push_back(std::move(set));
    }
    return out;
}

McEstimate chain_mc_cond_var(const SemModel& model, int target, int prefix_len, int n_outer,
                             int n_inner, std::uint64_t seed) {
    require_chain(model);
    const int d = model.dag.node_count();
    if (target < 0 || target >= d) throw config_error("chain_mc_cond_var: bad target");
    if (prefix_len < 0 || prefix_len > target)
        throw config_error("chain_mc_cond_var: cond must be a prefix of the chain before target");
    if (n_outer < 2 || n_inner < 2) throw config_error("chain_mc_cond_var: need n >= 2");

    Rng rng(seed);
    const double sigma_t_sq = model.noise_var[target];
    std::vector<double> outer_vals(n_outer);
    std::vector<double> fvals(n_inner);

    for (int rep = 0; rep < n_outer; ++rep) {
        // draw the prefix unconditionally
        double last = 0.0;
        for (int j = 0; j < prefix_len; ++j) {
            double mean = j == 0 ? 0.0 : model.mechanisms[j].mean({&last, 1});
            last = mean + std::sqrt(model.noise_var[j]) * rng.normal();
        }
        const double prefix_end = last;
        // conditionally simulate up to the target's parent, then evaluate
        // the target's mean function
        for (int i = 0; i < n_inner; ++i) {
            double x = prefix_end;
            for (int j = prefix_len; j < target; ++j) {
                double mean = j == 0 ? 0.0 : model.mechanisms[j].mean({&x, 1});
                x = mean + std::sqrt(model.noise_var[j]) * rng.normal();
            }
            fvals[i] = target == 0 ? 0.0 : model.mechanisms[target].mean({&x, 1});
        }
        outer_vals[rep] = sample_variance(fvals);
    }

    double mean_v =
        std::accumulate(outer_vals.begin(), outer_vals.end(), 0.0) / static_cast<double>(n_outer);
    McEstimate est;
    est.value = sigma_t_sq + mean_v;
    est.se = std::sqrt(sample_variance(outer_vals) / static_cast<double>(n_outer));
    return est;
}

double ExampleB1Oracle::query(int target, const std::vector<int>& cond) const {
    std::vector<int> c = cond;
    std::sort(c.begin(), c.end());
    bool prefix_ok = true;
    for (size_t m = 0; m < c.size(); ++m) prefix_ok = prefix_ok && c[m] == static_cast<int>(m);
    if (!prefix_ok || static_cast<int>(c.size()) > target)
        throw config_error("ExampleB1Oracle: only ancestral-prefix queries have closed forms");

    const double v2 = 2.0 / 3.0;
    const int q = static_cast<int>(c.size());
    if (target == 0) return 1.0;
    if (target == 1) {
        // X2 = X1^2/2 + z2; var(X1^2/2) = 1/2
        return q == 0 ? v2 + 0.5 : v2;
    }
    // X3 = X2^2/3 + z3
    if (q == 2) return v3_;
    if (q == 1) {
        // E var(X2^2 | X1) = 4 E[(X1^2/2)^2] v2 + 2 v2^2 = 3 v2 + 2 v2^2
        return v3_ + (3.0 * v2 + 2.0 * v2 * v2) / 9.0;
    }
    // var(X2^2) with X2 = a + b, a = X1^2/2, b = z2:
    // E X2^2 = Ea^2... moments of a: Ea=1/2, Ea2=3/4, Ea3=15/8, Ea4=105/16
    const double ea2 = 0.75, ea4 = 105.0 / 16.0;
    const double ex2_sq = ea2 + v2;
    const double ex2_4 = ea4 + 6.0 * ea2 * v2 + 3.0 * v2 * v2;
    return v3_ + (ex2_4 - ex2_sq * ex2_sq) / 9.0;
}

QueryLoggingOracle::QueryLoggingOracle(const VarianceOracle& inner, std::string name,
                                       const std::string& path)
    : inner_(inner), name_(std::move(name)), log_(path) {
    if (!log_) throw data_error("QueryLoggingOracle: cannot open " + path);
}

double QueryLoggingOracle::query(int target, const std::vector<int>& cond) const {
    double value = inner_.query(target, cond);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    log_ << "{\"oracle\":\"" << name_ << "\",\"target\":" << target + 1 << ",\"cond\":[";
    for (size_t m = 0; m < cond.size(); ++m) log_ << (m ? "," : "") << cond[m] + 1;
    log_ << "],\"value\":" << buf << "}\n";
    return value;
}

double PluginVarianceOracle::query(int target, const std::vector<int>& cond) const {
    std::vector<int> key = cond;
    std::sort(key.begin(), key.end());
    auto it = cache_.find({target, key});
    if (it != cache_.end()) return it->second;
    double value = key.empty()
                       ? marginal_variance(ds_, target)
                       : residual_variance_plugin(spec_, ds_, ds_, target, key).value;
    cache_.emplace(std::make_pair(target, std::move(key)), value);
    return value;
}

Ordering eqvar_linear_order(const Dataset& ds) {
    const int d = ds.col_count();
    const int n = ds.row_count();
    if (n <= d) throw config_error("eqvar_linear_order: need n > d");

    std::vector<double> means(d);
    for (int j = 0; j < d; ++j) {
        auto col = ds.col(j);
        means[j] = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
    }
    std::vector<std::vector<double>> sigma(d, std::vector<double>(d, 0.0));
    for (int a = 0; a < d; ++a) {
        auto ca = ds.col(a);
        for (int b = a; b < d; ++b) {
            auto cb = ds.col(b);
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += (ca[i] - means[a]) * (cb[i] - means[b]);
            sigma[a][b] = sigma[b][a] = s / static_cast<double>(n - 1);
        }
    }

    Ordering ord;
    std::vector<bool> chosen(d, false);
    std::vector<int> prefix;
    for (int step = 0; step < d; ++step) {
        int best = -1;
        double best_val = std::numeric_limits<double>::infinity();
        for (int node = 0; node < d; ++node) {
            if (chosen[node]) continue;
            double v = schur_cond_var(sigma, node, prefix);
            if (v < best_val) {
                best_val = v;
                best = node;
            }
        }
        chosen[best] = true;
        prefix.push_back(best);
        ord.perm.push_back(best);
    }
    return ord;
}

GreedyResult greedy_incedge_order(const VarianceOracle& variances) {
    const int d = variances.dim();
    if (d < 2) throw config_error("greedy_incedge_order: need at least 2 nodes");
    constexpr double kMinGain = 1e-12;
    constexpr double kVarFloor = 1e-12;

    std::vector<std::vector<int>> parents(d);
    std::vector<std::vector<bool>> adj(d, std::vector<bool>(d, false));
    std::vector<double> current(d);
    for (int j = 0; j < d; ++j) current[j] = std::max(variances.query(j, {}), kVarFloor);

    auto has_path = [&](int src, int dst) {
        if (src == dst) return true;
        std::vector<bool> seen(d, false);
        std::vector<int> stack{src};
        seen[src] = true;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < d; ++v) {
                if (!adj[u][v] || seen[v]) continue;
                if (v == dst) return true;
                seen[v] = true;
                stack.push_back(v);
            }
        }
        return false;
    };

    GreedyResult result{Ordering{}, {}, Dag(d, {})};
    std::vector<std::pair<int, int>> edges;
    while (true) {
        int best_i = -1, best_j = -1;
        double best_gain = kMinGain, best_new_var = 0.0;
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                if (i == j || adj[i][j]) continue;
                if (has_path(j, i)) continue;  // adding i->j would close a cycle
                std::vector<int> cand = parents[j];
                cand.push_back(i);
                std::sort(cand.begin(), cand.end());
                double v = std::max(variances.query(j, cand), kVarFloor);
                double gain = std::log(current[j]) - std::log(v);
                // a later candidate must beat the incumbent by more than the
                // tie tolerance, so near-ties resolve (i,j)-lexicographically
                if (gain > best_gain + kMinGain) {
                    best_gain = gain;
                    best_i = i;
                    best_j = j;
                    best_new_var = v;
                }
            }
        }
        if (best_i < 0) break;
        adj[best_i][best_j] = true;
        parents[best_j].push_back(best_i);
        std::sort(parents[best_j].begin(), parents[best_j].end());
        current[best_j] = best_new_var;
        edges.emplace_back(best_i, best_j);
        result.steps.push_back({best_i, best_j, best_gain});
    }

    result.graph = Dag(d, edges);
    result.order = ordering_from_layers(layer_decomposition(result.graph));
    return result;
}

}  // namespace npvar
