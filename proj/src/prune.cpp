#include "npvar/prune.hpp"

#include <algorithm>
#include <cmath>

#include "npvar/errors.hpp"
#include "npvar/rng.hpp"

namespace npvar {

namespace {
constexpr double kVarFloor = 1e-12;

// Centered held-out residuals: the uncentered moment form rewards overfit
// predictors (their second moment grows even off-sample), which is exactly
// what a selection criterion must penalize.
double heldout_variance(const RegressorSpec& spec, const Dataset& fit_half,
                        const Dataset& eval_half, int target, const std::vector<int>& cond) {
    if (cond.empty()) return marginal_variance(eval_half, target);
    return residual_variance_plugin(spec, fit_half, eval_half, target, cond,
                                    /*centered=*/true)
        .value;
}
}  // namespace

Dag prune_parents(const Dataset& ds, const Ordering& ord, const PruneConfig& cfg) {
    const int d = ds.col_count();
    if (ord.size() != d) throw config_error("prune_parents: ordering length mismatch");
    if (cfg.tau <= 0.0 || cfg.tau >= 1.0) throw config_error("prune_parents: tau must lie in (0,1)");
    if (cfg.holdout <= 0.0 || cfg.holdout >= 1.0)
        throw config_error("prune_parents: holdout fraction must lie in (0,1)");

    // one fit/holdout partition shared by every node's selection problem
    const int n = ds.row_count();
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    Rng rng(cfg.seed);
    for (int i = n - 1; i > 0; --i) {
        int k = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
        std::swap(idx[i], idx[k]);
    }
    const int n_fit = static_cast<int>(std::ceil((1.0 - cfg.holdout) * n));
    if (n_fit < 2 || n - n_fit < 2) throw config_error("prune_parents: not enough rows to split");
    std::vector<int> fit_rows(idx.begin(), idx.begin() + n_fit);
    std::vector<int> eval_rows(idx.begin() + n_fit, idx.end());
    std::sort(fit_rows.begin(), fit_rows.end());
    std::sort(eval_rows.begin(), eval_rows.end());
    const Dataset fit_half = ds.select_rows(fit_rows);
    const Dataset eval_half = ds.select_rows(eval_rows);

    const int max_parents = cfg.max_parents ? *cfg.max_parents : d - 1;
    std::vector<int> pos = ord.positions();
    std::vector<std::pair<int, int>> edges;

    for (int node = 0; node < d; ++node) {
        std::vector<int> predecessors;
        for (int other = 0; other < d; ++other)
            if (other != node && pos[other] < pos[node]) predecessors.push_back(other);
        if (predecessors.empty()) continue;

        std::vector<int> selected;
        double current = heldout_variance(cfg.spec, fit_half, eval_half, node, {});

        // forward: add the predecessor with the largest relative drop
        while (static_cast<int>(selected.size()) < max_parents) {
            int best = -1;
            double best_var = 0.0;
            for (int cand : predecessors) {
                if (std::find(selected.begin(), selected.end(), cand) != selected.end()) continue;
                std::vector<int> trial = selected;
                trial.push_back(cand);
                std::sort(trial.begin(), trial.end());
                double v = heldout_variance(cfg.spec, fit_half, eval_half, node, trial);
                if (best < 0 || v < best_var) {
                    best = cand;
                    best_var = v;
                }
            }
            if (best < 0) break;
            double rel = (current - best_var) / std::max(current, kVarFloor);
            if (rel < cfg.tau) break;
            selected.push_back(best);
            std::sort(selected.begin(), selected.end());
            current = best_var;
        }

        // backward: drop parents whose removal costs less than tau
        if (cfg.backward_pass && selected.size() > 1) {
            for (size_t s = 0; s < selected.size();) {
                std::vector<int> without = selected;
                without.erase(without.begin() + s);
                double v = heldout_variance(cfg.spec, fit_half, eval_half, node, without);
                double rel = (v - current) / std::max(current, kVarFloor);
                if (rel < cfg.tau) {
                    selected = std::move(without);
                    current = v;
                } else {
                    ++s;
                }
            }
        }

        for (int parent : selected) edges.emplace_back(parent, node);
    }
    return Dag(d, std::move(edges));
}

}  // namespace npvar
