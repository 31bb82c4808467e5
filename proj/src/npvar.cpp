#include "npvar/npvar.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "npvar/errors.hpp"
#include "npvar/rng.hpp"

namespace npvar {

namespace {

// Shared layering loop of the empirical algorithm. estimate_round returns
// sigma^2 estimates for the unassigned nodes of one iteration (iteration 0
// is the marginal-variance round).
NpvarResult run_layering(
    int d, double eta, int max_layers,
    const std::function<std::vector<double>(int iter, const std::vector<int>& unassigned,
                                            const std::vector<int>& assigned)>& estimate_round) {
    if (eta <= 0.0) throw config_error("npvar: eta must be positive");

    NpvarResult result;
    result.eta_used = eta;
    std::vector<bool> assigned(d, false);
    std::vector<int> assigned_list;
    int iter = 0;

    while (static_cast<int>(assigned_list.size()) < d) {
        std::vector<int> unassigned;
        for (int j = 0; j < d; ++j)
            if (!assigned[j]) unassigned.push_back(j);

        std::vector<double> est = estimate_round(iter, unassigned, assigned_list);
        int best = 0;
        for (size_t i = 0; i < unassigned.size(); ++i) {
            if (!std::isfinite(est[i]))
                throw numeric_error("npvar: non-finite residual-variance estimate for node " +
                                    std::to_string(unassigned[i] + 1));
            result.trace.push_back({iter, unassigned[i], est[i]});
            if (est[i] < est[best]) best = i;  // strict: ties keep the lowest index
        }
        result.chosen.push_back({iter, unassigned[best], est[best]});

        std::vector<int> layer;
        const bool last_allowed = static_cast<int>(result.layers.layers.size()) + 1 >= max_layers;
        for (size_t i = 0; i < unassigned.size(); ++i)
            if (last_allowed || std::abs(est[i] - est[best]) < eta) layer.push_back(unassigned[i]);
        for (int node : layer) {
            assigned[node] = true;
            assigned_list.push_back(node);
        }
        std::sort(assigned_list.begin(), assigned_list.end());
        result.layers.layers.push_back(std::move(layer));
        ++iter;
    }
    return result;
}

}  // namespace

Ordering population_order(const VarianceOracle& oracle, int d) {
    if (d < 1) throw config_error("population_order: d must be positive");
    Ordering ord;
    std::vector<bool> chosen(d, false);
    std::vector<int> prefix;
    for (int step = 0; step < d; ++step) {
        int best = -1;
        double best_val = std::numeric_limits<double>::infinity();
        for (int node = 0; node < d; ++node) {
            if (chosen[node]) continue;
            double v = oracle.query(node, prefix);
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

NpvarResult npvar_layers(const Dataset& ds, const NpvarConfig& cfg) {
    const int d = ds.col_count();
    const int n = ds.row_count();
    if (d < 1) throw config_error("npvar: dataset has no columns");
    if (n < 8) throw config_error("npvar: need at least 8 rows");

    // Step 1 runs on the full sample; eta is fixed from this round when auto.
    std::vector<double> marginals(d);
    for (int j = 0; j < d; ++j) marginals[j] = marginal_variance(ds, j);
    double eta;
    if (cfg.eta) {
        eta = *cfg.eta;
        if (eta <= 0.0) throw config_error("npvar: eta must be positive");
    } else {
        eta = d >= 2 ? auto_eta(marginals) : 1e-6;
    }
    const int max_layers = cfg.max_layers ? std::min(*cfg.max_layers, d) : d;

    std::vector<std::uint64_t> split_seeds;
    long regressions = 0;
    auto estimate_round = [&](int iter, const std::vector<int>& unassigned,
                              const std::vector<int>& assigned) -> std::vector<double> {
        std::vector<double> est(unassigned.size());
        if (iter == 0) {
            for (size_t i = 0; i < unassigned.size(); ++i) est[i] = marginals[unassigned[i]];
            return est;
        }
        const Dataset* fit_half = &ds;
        const Dataset* eval_half = &ds;
        std::optional<SplitPair> split;
        std::uint64_t sub = derive_seed(cfg.seed, static_cast<std::uint64_t>(iter));
        split_seeds.push_back(sub);
        if (!cfg.disable_split) {
            split = split_half(ds, sub);
            fit_half = &split->first;
            eval_half = &split->second;
        }
        auto fit_one = [&](size_t i) {
            est[i] = residual_variance_plugin(cfg.spec, *fit_half, *eval_half, unassigned[i],
                                              assigned, cfg.centered_plugin)
                         .value;
        };
        if (cfg.workers <= 1) {
            for (size_t i = 0; i < unassigned.size(); ++i) fit_one(i);
        } else {
            // independent fits over the shared read-only split; each worker
            // writes its own slot, so the reduction is by node index
            std::atomic<size_t> next{0};
            std::exception_ptr first_error = nullptr;
            std::mutex error_mutex;
            auto drain = [&] {
                try {
                    for (size_t i = next.fetch_add(1); i < unassigned.size();
                         i = next.fetch_add(1))
                        fit_one(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            };
            std::vector<std::thread> pool;
            int nw = std::min<int>(cfg.workers, static_cast<int>(unassigned.size()));
            for (int w = 0; w < nw; ++w) pool.emplace_back(drain);
            for (auto& t : pool) t.join();
            if (first_error) std::rethrow_exception(first_error);
        }
        regressions += static_cast<long>(unassigned.size());
        return est;
    };

    NpvarResult out = run_layering(d, eta, max_layers, estimate_round);
    out.seed = cfg.seed;
    out.split_seeds = std::move(split_seeds);
    out.regression_calls = regressions;
    return out;
}

NpvarResult npvar_layers_from_oracle(const VarianceOracle& oracle, double eta,
                                     std::optional<int> max_layers) {
    const int d = oracle.dim();
    const int cap = max_layers ? std::min(*max_layers, d) : d;
    NpvarResult out = run_layering(
        d, eta, cap,
        [&](int, const std::vector<int>& unassigned,
            const std::vector<int>& assigned) -> std::vector<double> {
            std::vector<double> est(unassigned.size());
            for (size_t i = 0; i < unassigned.size(); ++i)
                est[i] = oracle.query(unassigned[i], assigned);
            return est;
        });
    return out;
}

double auto_eta(const std::vector<double>& first_iteration_estimates) {
    if (first_iteration_estimates.size() < 2)
        throw config_error("auto_eta: need at least 2 estimates");
    std::vector<double> sorted = first_iteration_estimates;
    std::sort(sorted.begin(), sorted.end());
    double gap = sorted[1] - sorted[0];
    return std::max(0.25 * gap, 1e-6);
}

UnequalCondReport check_unequal_condition(const VarianceOracle& oracle, const Dag& dag,
                                          const std::vector<double>& node_residual_variance,
                                          const Ordering& pi) {
    const int d = dag.node_count();
    if (pi.size() != d || static_cast<int>(node_residual_variance.size()) != d)
        throw config_error("check_unequal_condition: dimension mismatch");

    const auto layer_idx = layer_decomposition(dag).layer_of(d);
    constexpr double kTol = 1e-12;

    UnequalCondReport report;
    std::vector<int> prefix;
    for (int j = 1; j <= d; ++j) {
        const int i = pi.perm[j - 1];
        for (int later = j; later < d; ++later) {
            const int k = pi.perm[later];
            UnequalCondPair pair;
            pair.j = j;
            pair.i = i;
            pair.k = k;
            pair.sigma_i_sq = node_residual_variance[i];
            pair.sigma_k_sq = node_residual_variance[k];
            // law of total variance: E var(E(X_k|pa(k)) | S) = E var(X_k|S) - sigma_k^2
            pair.rhs = oracle.query(k, prefix);
            pair.same_layer = layer_idx[i] == layer_idx[k];
            pair.parents_explained = true;
            for (int p : dag.parents(k))
                if (std::find(prefix.begin(), prefix.end(), p) == prefix.end())
                    pair.parents_explained = false;
            pair.holds_strict = pair.sigma_i_sq < pair.rhs - kTol;
            pair.holds_equal_same_layer =
                pair.same_layer && std::abs(pair.sigma_i_sq - pair.sigma_k_sq) <= kTol;
            pair.violated = !pair.holds_strict && !pair.holds_equal_same_layer;
            if (pair.violated) report.satisfied = false;
            report.pairs.push_back(pair);
        }
        prefix.push_back(i);
    }
    return report;
}

}  // namespace npvar
