#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "npvar/data.hpp"

namespace npvar {

// Pluggable conditional-mean estimator. Every kind keeps its predictions
// inside the training response range, so fitted means stay bounded whenever
// the true mean is.
struct RegressorSpec {
    enum class Kind { kernel_smoother, knn, additive_backfit };

    Kind kind = Kind::kernel_smoother;
    double bandwidth_scale = 1.0;  // kernel / additive: c in h = c * sd * n^{-1/(2+p)}
    int k = 0;                     // knn; 0 selects k = ceil(n^{2/(2+p)})
    int max_sweeps = 20;           // additive backfitting
    double tolerance = 1e-6;       // additive convergence, max componentwise change

    static RegressorSpec kernel(double c = 1.0);
    static RegressorSpec nearest(int k = 0);
    static RegressorSpec additive(double c = 1.0);
    std::string describe() const;
};

RegressorSpec parse_regressor(const std::string& text);

// Column views into a design matrix: p columns, each of length n.
using Columns = std::vector<std::span<const double>>;

class FittedRegressor {
public:
    int input_dim() const;
    double y_min() const;
    double y_max() const;

    double predict_one(std::span<const double> x) const;
    // Vectorized predict over column views (m rows); equals a loop of
    // predict_one calls.
    std::vector<double> predict(const Columns& x) const;

    struct Impl;
    explicit FittedRegressor(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

private:
    std::shared_ptr<const Impl> impl_;
};

FittedRegressor fit(const RegressorSpec& spec, const Columns& x, std::span<const double> y);

struct ResidualVarianceEstimate {
    double value = 0.0;  // may be negative; clamp only in reports
    int target = -1;
    std::vector<int> conditioning;
    int fit_n = 0;
    int eval_n = 0;
};

// Plug-in residual variance: fit the conditional mean on fit_half, then
// return mean(Y^2) - mean(fhat^2) over eval_half (uncentered second
// moments). With `centered` the alternative mean((Y - fhat)^2) is used.
ResidualVarianceEstimate residual_variance_plugin(const RegressorSpec& spec,
                                                  const Dataset& fit_half,
                                                  const Dataset& eval_half,
                                                  int target,
                                                  const std::vector<int>& cond,
                                                  bool centered = false);

// Unbiased sample variance (divisor n-1) of one column.
double marginal_variance(const Dataset& ds, int node);

}  // namespace npvar
