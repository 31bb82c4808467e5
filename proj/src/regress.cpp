#include "npvar/regress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "npvar/errors.hpp"

namespace npvar {

namespace {

double column_sd(std::span<const double> x) {
    const size_t n = x.size();
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n > 1 ? n - 1 : 1));
}

// h_m = c * sd(X_m) * n^{-1/(2+p)}; a degenerate column falls back to 1.0.
std::vector<double> bandwidths(const Columns& x, double scale, int rate_dim) {
    const double n = static_cast<double>(x[0].size());
    const double rate = std::pow(n, -1.0 / (2.0 + static_cast<double>(rate_dim)));
    std::vector<double> h(x.size());
    for (size_t m = 0; m < x.size(); ++m) {
        double sd = column_sd(x[m]);
        h[m] = sd > 0.0 ? scale * sd * rate : 1.0;
    }
    return h;
}

constexpr double kWeightFloor = 1e-300;

// One Nadaraya-Watson evaluation with a product Gaussian kernel.
double nw_eval(const std::vector<std::vector<double>>& train, const std::vector<double>& y,
               const std::vector<double>& inv2h2, std::span<const double> q, double fallback) {
    const size_t n = y.size();
    const size_t p = train.size();
    double wsum = 0.0, wy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (size_t m = 0; m < p; ++m) {
            double dlt = q[m] - train[m][i];
            s += dlt * dlt * inv2h2[m];
        }
        double w = std::exp(-s);
        wsum += w;
        wy += w * y[i];
    }
    if (wsum < kWeightFloor) return fallback;
    return wy / wsum;
}

double nw_eval_1d(const std::vector<double>& xm, const std::vector<double>& y, double inv2h2,
                  double q, double fallback) {
    const size_t n = y.size();
    double wsum = 0.0, wy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dlt = q - xm[i];
        double w = std::exp(-dlt * dlt * inv2h2);
        wsum += w;
        wy += w * y[i];
    }
    if (wsum < kWeightFloor) return fallback;
    return wy / wsum;
}

}  // namespace

RegressorSpec RegressorSpec::kernel(double c) {
    RegressorSpec s;
    s.kind = Kind::kernel_smoother;
    s.bandwidth_scale = c;
    return s;
}

RegressorSpec RegressorSpec::nearest(int k) {
    RegressorSpec s;
    s.kind = Kind::knn;
    s.k = k;
    return s;
}

RegressorSpec RegressorSpec::additive(double c) {
    RegressorSpec s;
    s.kind = Kind::additive_backfit;
    s.bandwidth_scale = c;
    return s;
}

std::string RegressorSpec::describe() const {
    switch (kind) {
        case Kind::kernel_smoother:
            return "kernel(c=" + std::to_string(bandwidth_scale) + ")";
        case Kind::knn:
            return k > 0 ? "knn(k=" + std::to_string(k) + ")" : "knn(k=auto)";
        case Kind::additive_backfit:
            return "additive(c=" + std::to_string(bandwidth_scale) + ")";
    }
    return "?";
}

RegressorSpec parse_regressor(const std::string& text) {
    if (text == "kernel") return RegressorSpec::kernel();
    if (text == "knn") return RegressorSpec::nearest();
    if (text == "additive") return RegressorSpec::additive();
    throw config_error("unknown regressor '" + text + "' (use kernel, knn, or additive)");
}

struct FittedRegressor::Impl {
    RegressorSpec spec;
    std::vector<std::vector<double>> train;  // p columns, owned copies
    std::vector<double> y;
    double y_lo = 0.0, y_hi = 0.0, y_mean = 0.0;

    // kernel / additive
    std::vector<double> inv2h2;  // 1 / (2 h_m^2) per dimension
    // knn
    int k = 1;
    // additive backfit: g_m(q) = NW(q; train[m], add_targets[m]) - add_centers[m]
    std::vector<std::vector<double>> add_targets;  // last partial residuals per dim
    std::vector<double> add_centers;
    double add_intercept = 0.0;

    double clamp(double v) const { return std::min(y_hi, std::max(y_lo, v)); }

    double eval(std::span<const double> q) const {
        switch (spec.kind) {
            case RegressorSpec::Kind::kernel_smoother:
                return clamp(nw_eval(train, y, inv2h2, q, y_mean));
            case RegressorSpec::Kind::knn:
                return clamp(knn_eval(q));
            case RegressorSpec::Kind::additive_backfit: {
                double out = add_intercept;
                for (size_t m = 0; m < train.size(); ++m)
                    out += nw_eval_1d(train[m], add_targets[m], inv2h2[m], q[m], 0.0) -
                           add_centers[m];
                return clamp(out);
            }
        }
        return y_mean;
    }

    double knn_eval(std::span<const double> q) const {
        const int n = static_cast<int>(y.size());
        std::vector<std::pair<double, int>> dist(n);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (size_t m = 0; m < train.size(); ++m) {
                double dlt = q[m] - train[m][i];
                s += dlt * dlt;
            }
            dist[i] = {s, i};
        }
        const int kk = std::min(k, n);
        std::nth_element(dist.begin(), dist.begin() + (kk - 1), dist.end());
        double sum = 0.0;
        for (int i = 0; i < kk; ++i) sum += y[dist[i].second];
        return sum / static_cast<double>(kk);
    }
};

int FittedRegressor::input_dim() const { return static_cast<int>(impl_->train.size()); }
double FittedRegressor::y_min() const { return impl_->y_lo; }
double FittedRegressor::y_max() const { return impl_->y_hi; }

double FittedRegressor::predict_one(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim())
        throw config_error("predict: query dimension does not match fit dimension");
    return impl_->eval(x);
}

std::vector<double> FittedRegressor::predict(const Columns& x) const {
    if (static_cast<int>(x.size()) != input_dim())
        throw config_error("predict: query dimension does not match fit dimension");
    const size_t m = x.empty() ? 0 : x[0].size();
    std::vector<double> out(m);
    std::vector<double> q(x.size());
    for (size_t i = 0; i < m; ++i) {
        for (size_t j = 0; j < x.size(); ++j) q[j] = x[j][i];
        out[i] = impl_->eval(q);
    }
    return out;
}

FittedRegressor fit(const RegressorSpec& spec, const Columns& x, std::span<const double> y) {
    if (x.empty()) throw config_error("fit: need at least one predictor column");
    const int n = static_cast<int>(y.size());
    if (n < 2) throw config_error("fit: need at least 2 samples");
    for (const auto& col : x)
        if (static_cast<int>(col.size()) != n)
            throw config_error("fit: predictor/response length mismatch");
    const int p = static_cast<int>(x.size());

    auto impl = std::make_shared<FittedRegressor::Impl>();
    impl->spec = spec;
    impl->train.reserve(p);
    for (const auto& col : x) impl->train.emplace_back(col.begin(), col.end());
    impl->y.assign(y.begin(), y.end());
    impl->y_lo = *std::min_element(y.begin(), y.end());
    impl->y_hi = *std::max_element(y.begin(), y.end());
    impl->y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    switch (spec.kind) {
        case RegressorSpec::Kind::kernel_smoother: {
            auto h = bandwidths(x, spec.bandwidth_scale, p);
            impl->inv2h2.resize(p);
            for (int m = 0; m < p; ++m) impl->inv2h2[m] = 0.5 / (h[m] * h[m]);
            break;
        }
        case RegressorSpec::Kind::knn: {
            int k = spec.k;
            if (k <= 0)
                k = static_cast<int>(std::ceil(
                    std::pow(static_cast<double>(n), 2.0 / (2.0 + static_cast<double>(p)))));
            impl->k = std::min(std::max(k, 1), n);
            break;
        }
        case RegressorSpec::Kind::additive_backfit: {
            // componentwise 1-D smoothers, so the 1-D bandwidth rate applies
            auto h = bandwidths(x, spec.bandwidth_scale, 1);
            impl->inv2h2.resize(p);
            for (int m = 0; m < p; ++m) impl->inv2h2[m] = 0.5 / (h[m] * h[m]);
            impl->add_intercept = impl->y_mean;

            // Precompute normalized per-dimension weight matrices once; the
            // sweeps are then plain matrix-vector products.
            std::vector<std::vector<double>> weights(p);
            for (int m = 0; m < p; ++m) {
                weights[m].assign(static_cast<size_t>(n) * n, 0.0);
                const auto& xm = impl->train[m];
                for (int a = 0; a < n; ++a) {
                    double rowsum = 0.0;
                    double* row = &weights[m][static_cast<size_t>(a) * n];
                    for (int b = 0; b < n; ++b) {
                        double dlt = xm[a] - xm[b];
                        row[b] = std::exp(-dlt * dlt * impl->inv2h2[m]);
                        rowsum += row[b];
                    }
                    if (rowsum < kWeightFloor) rowsum = 1.0;
                    for (int b = 0; b < n; ++b) row[b] /= rowsum;
                }
            }

            std::vector<std::vector<double>> g(p, std::vector<double>(n, 0.0));
            impl->add_targets.assign(p, std::vector<double>(n, 0.0));
            impl->add_centers.assign(p, 0.0);
            std::vector<double> partial(n), smoothed(n);
            for (int sweep = 0; sweep < spec.max_sweeps; ++sweep) {
                double max_change = 0.0;
                for (int m = 0; m < p; ++m) {
                    for (int i = 0; i < n; ++i) {
                        double acc = impl->y[i] - impl->add_intercept;
                        for (int mm = 0; mm < p; ++mm)
                            if (mm != m) acc -= g[mm][i];
                        partial[i] = acc;
                    }
                    for (int a = 0; a < n; ++a) {
                        const double* row = &weights[m][static_cast<size_t>(a) * n];
                        double acc = 0.0;
                        for (int b = 0; b < n; ++b) acc += row[b] * partial[b];
                        smoothed[a] = acc;
                    }
                    // center each component so the intercept carries the level
                    double mean_g =
                        std::accumulate(smoothed.begin(), smoothed.end(), 0.0) / n;
                    for (int a = 0; a < n; ++a) {
                        double next = smoothed[a] - mean_g;
                        max_change = std::max(max_change, std::abs(next - g[m][a]));
                        g[m][a] = next;
                    }
                    impl->add_targets[m] = partial;
                    impl->add_centers[m] = mean_g;
                }
                if (max_change < spec.tolerance) break;
            }
            break;
        }
    }
    return FittedRegressor(std::move(impl));
}

ResidualVarianceEstimate residual_variance_plugin(const RegressorSpec& spec,
                                                  const Dataset& fit_half,
                                                  const Dataset& eval_half, int target,
                                                  const std::vector<int>& cond, bool centered) {
    if (cond.empty())
        throw config_error("residual_variance_plugin: empty conditioning set "
                           "(use marginal_variance)");
    for (int c : cond)
        if (c == target)
            throw config_error("residual_variance_plugin: target appears in conditioning set");

    Columns xf, xe;
    xf.reserve(cond.size());
    xe.reserve(cond.size());
    for (int c : cond) {
        xf.push_back(fit_half.col(c));
        xe.push_back(eval_half.col(c));
    }
    FittedRegressor fr = fit(spec, xf, fit_half.col(target));
    std::vector<double> fhat = fr.predict(xe);

    auto ye = eval_half.col(target);
    const int m = eval_half.row_count();
    double acc = 0.0;
    if (centered) {
        for (int i = 0; i < m; ++i) {
            double r = ye[i] - fhat[i];
            acc += r * r;
        }
    } else {
        for (int i = 0; i < m; ++i) acc += ye[i] * ye[i] - fhat[i] * fhat[i];
    }
    double value = acc / static_cast<double>(m);
    if (!std::isfinite(value))
        throw numeric_error("residual_variance_plugin: non-finite estimate");

    ResidualVarianceEstimate est;
    est.value = value;
    est.target = target;
    est.conditioning = cond;
    est.fit_n = fit_half.row_count();
    est.eval_n = m;
    return est;
}

double marginal_variance(const Dataset& ds, int node) {
    const int n = ds.row_count();
    if (n < 2) throw config_error("marginal_variance: need at least 2 rows");
    auto col = ds.col(node);
    double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(n - 1);
}

}  // namespace npvar
