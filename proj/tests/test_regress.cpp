#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "npvar/errors.hpp"
#include "npvar/oracle.hpp"
#include "npvar/regress.hpp"
#include "npvar/rng.hpp"
#include "npvar/simulate.hpp"

using namespace npvar;

namespace {

Dataset two_columns(const std::vector<double>& a, const std::vector<double>& b) {
    return Dataset({"X1", "X2"}, {a, b});
}

}  // namespace

TEST_CASE("constant response predicts the constant, every estimator kind") {
    Rng rng(1);
    std::vector<double> x(200), y(200, 0.7);
    for (auto& v : x) v = rng.normal();
    for (auto spec : {RegressorSpec::kernel(), RegressorSpec::nearest(),
                      RegressorSpec::additive()}) {
        FittedRegressor fr = fit(spec, {x}, y);
        for (double q : {-2.0, 0.0, 0.3, 5.0})
            CHECK(fr.predict_one({&q, 1}) == doctest::Approx(0.7).epsilon(1e-9));
    }
}

TEST_CASE("identity function is learned to small grid error") {
    Rng rng(2);
    const int n = 1000;
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.uniform();
        y[i] = x[i];
    }
    FittedRegressor fr = fit(RegressorSpec::kernel(), {x}, y);
    double mse = 0.0;
    int grid = 0;
    for (double q = 0.05; q <= 0.951; q += 0.05, ++grid) {
        double err = fr.predict_one({&q, 1}) - q;
        mse += err * err;
    }
    mse /= grid;
    CHECK(mse <= 0.01);
}

TEST_CASE("knn with k = n collapses to the sample mean") {
    Rng rng(3);
    const int n = 50;
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = rng.normal();
    }
    double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    FittedRegressor fr = fit(RegressorSpec::nearest(n), {x}, y);
    for (double q : {-3.0, 0.0, 2.5})
        CHECK(fr.predict_one({&q, 1}) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("tiny bandwidth interpolates the training points") {
    std::vector<double> x{0.0, 1.0, 2.0, 3.0};
    std::vector<double> y{5.0, -1.0, 2.0, 0.5};
    RegressorSpec spec = RegressorSpec::kernel(0.005);
    FittedRegressor fr = fit(spec, {x}, y);
    for (int i = 0; i < 4; ++i)
        CHECK(fr.predict_one({&x[i], 1}) == doctest::Approx(y[i]).epsilon(1e-6));
}

TEST_CASE("queries far outside the support fall back to the training mean") {
    std::vector<double> x{0.0, 0.1, 0.2, 0.3};
    std::vector<double> y{1.0, 2.0, 3.0, 4.0};
    FittedRegressor fr = fit(RegressorSpec::kernel(0.01), {x}, y);
    double far = 1e6;
    CHECK(fr.predict_one({&far, 1}) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("vectorized predict equals a loop of scalar predicts") {
    Rng rng(4);
    const int n = 120, m = 40;
    std::vector<double> x1(n), x2(n), y(n), q1(m), q2(m);
    for (int i = 0; i < n; ++i) {
        x1[i] = rng.normal();
        x2[i] = rng.normal();
        y[i] = std::sin(x1[i]) + x2[i];
    }
    for (int i = 0; i < m; ++i) {
        q1[i] = rng.normal();
        q2[i] = rng.normal();
    }
    for (auto spec : {RegressorSpec::kernel(), RegressorSpec::nearest(),
                      RegressorSpec::additive()}) {
        FittedRegressor fr = fit(spec, {x1, x2}, y);
        std::vector<double> batch = fr.predict({q1, q2});
        for (int i = 0; i < m; ++i) {
            double point[2] = {q1[i], q2[i]};
            CHECK(batch[i] == fr.predict_one({point, 2}));
        }
    }
}

TEST_CASE("predictions never leave the training response range") {
    Rng rng(5);
    const int n = 300;
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = x[i] * x[i] * x[i] + 0.3 * rng.normal();
    }
    for (auto spec : {RegressorSpec::kernel(0.3), RegressorSpec::nearest(3),
                      RegressorSpec::additive(0.3)}) {
        FittedRegressor fr = fit(spec, {x}, y);
        for (double q = -6.0; q <= 6.0; q += 0.25) {
            double pred = fr.predict_one({&q, 1});
            CHECK(pred >= fr.y_min());
            CHECK(pred <= fr.y_max());
        }
    }
}

TEST_CASE("degenerate predictor column falls back to unit bandwidth") {
    std::vector<double> x(50, 1.0), y(50);
    Rng rng(6);
    for (auto& v : y) v = rng.normal();
    FittedRegressor fr = fit(RegressorSpec::kernel(), {x}, y);
    double q = 1.0;
    CHECK(std::isfinite(fr.predict_one({&q, 1})));
    CHECK_THROWS_AS(fit(RegressorSpec::kernel(), {x}, std::span<const double>(y.data(), 1)),
                    config_error);
}

TEST_CASE("dimension mismatches are rejected") {
    std::vector<double> x{1, 2, 3, 4}, y{1, 2, 3, 4};
    FittedRegressor fr = fit(RegressorSpec::kernel(), {x}, y);
    double q[2] = {0.0, 0.0};
    CHECK_THROWS_AS(fr.predict_one({q, 2}), config_error);
}

TEST_CASE("plug-in on a copied column is close to zero") {
    Rng rng(7);
    const int n = 2000;
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    Dataset ds = two_columns(x, x);
    SplitPair sp = split_half(ds, 11);
    auto est = residual_variance_plugin(RegressorSpec::kernel(), sp.first, sp.second, 1, {0});
    CHECK(std::abs(est.value) < 0.05);
}

TEST_CASE("plug-in on independent uniform target estimates 1/12") {
    const int reps = 20, n = 2000;
    std::vector<double> vals(reps);
    for (int r = 0; r < reps; ++r) {
        Rng rng(100 + r);
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = rng.normal();
            y[i] = rng.uniform();
        }
        Dataset ds = two_columns(x, y);
        SplitPair sp = split_half(ds, r);
        vals[r] = residual_variance_plugin(RegressorSpec::kernel(), sp.first, sp.second, 1, {0})
                      .value;
    }
    double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / reps;
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    double se = std::sqrt(ss / (reps - 1) / reps);
    CHECK(std::abs(mean - 1.0 / 12.0) < 3.0 * se + 1e-3);
}

TEST_CASE("plug-in recovers the exampleB1 noise variance of X2 given X1") {
    NamedModelId id;
    id.family = NamedModelId::Family::example_b1;
    id.sigma3_sq = 0.5;
    Dataset ds = simulate_dataset(named_model(id), 20000, 55);
    SplitPair sp = split_half(ds, 56);
    auto est = residual_variance_plugin(RegressorSpec::kernel(), sp.first, sp.second, 1, {0});
    // summand spread on the evaluation half gives the standard error
    FittedRegressor fr = fit(RegressorSpec::kernel(), {sp.first.col(0)}, sp.first.col(1));
    std::vector<double> fhat = fr.predict({sp.second.col(0)});
    std::vector<double> summand(fhat.size());
    for (size_t i = 0; i < fhat.size(); ++i) {
        double y = sp.second.col(1)[i];
        summand[i] = y * y - fhat[i] * fhat[i];
    }
    double mean = std::accumulate(summand.begin(), summand.end(), 0.0) / summand.size();
    double ss = 0.0;
    for (double v : summand) ss += (v - mean) * (v - mean);
    double se = std::sqrt(ss / (summand.size() - 1) / summand.size());
    CHECK(std::abs(est.value - 2.0 / 3.0) < 3.0 * se + 5e-3);
}

TEST_CASE("plug-in validates its preconditions") {
    Dataset ds = two_columns({1, 2, 3, 4}, {4, 3, 2, 1});
    CHECK_THROWS_AS(residual_variance_plugin(RegressorSpec::kernel(), ds, ds, 0, {}),
                    config_error);
    CHECK_THROWS_AS(residual_variance_plugin(RegressorSpec::kernel(), ds, ds, 0, {0}),
                    config_error);
}

TEST_CASE("forcing a zero predictor makes the plug-in the raw second moment") {
    // kernel fit on a constant-zero response predicts exactly zero, so the
    // plug-in reduces to mean(Y^2) on the evaluation half
    Rng rng(8);
    const int n = 400;
    std::vector<double> x(n), zero(n, 0.0), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = rng.normal() + 1.0;
    }
    Dataset fit_half({"X1", "X2"}, {x, zero});
    Dataset eval_half({"X1", "X2"}, {x, y});
    auto est = residual_variance_plugin(RegressorSpec::kernel(), fit_half, eval_half, 1, {0});
    double m2 = 0.0;
    for (double v : y) m2 += v * v;
    m2 /= n;
    CHECK(est.value == doctest::Approx(m2).epsilon(1e-12));
}

TEST_CASE("marginal variance basics") {
    Dataset ds = two_columns({1.0, 1.0, 1.0}, {0.0, 1.0, 0.5});
    CHECK(marginal_variance(ds, 0) == doctest::Approx(0.0));
    Dataset two = two_columns({0.0, 1.0}, {1.0, 1.0});
    CHECK(marginal_variance(two, 0) == doctest::Approx(0.5).epsilon(1e-12));
    Dataset one({"X1"}, {std::vector<double>{3.0}});
    CHECK_THROWS_AS(marginal_variance(one, 0), config_error);

    Rng rng(9);
    const int n = 100000;
    std::vector<double> z(n);
    for (auto& v : z) v = rng.normal();
    Dataset big({"X1"}, {z});
    // var of the sample variance of n normals is 2 sigma^4 / (n-1)
    double se = std::sqrt(2.0 / (n - 1));
    CHECK(std::abs(marginal_variance(big, 0) - 1.0) < 3.0 * se);
}

TEST_CASE("plug-in error shrinks as n doubles (consistency drift)") {
    const std::vector<int> sizes{500, 1000, 2000, 4000, 8000};
    const int reps = 20;
    std::vector<double> medians;
    for (int n : sizes) {
        std::vector<double> errs(reps);
        for (int r = 0; r < reps; ++r) {
            Rng rng(9000 + r);
            std::vector<double> x(n), y(n);
            for (int i = 0; i < n; ++i) {
                x[i] = rng.normal();
                y[i] = std::sin(x[i]) + 0.5 * rng.normal();
            }
            Dataset ds = two_columns(x, y);
            SplitPair sp = split_half(ds, 70 + r);
            double est =
                residual_variance_plugin(RegressorSpec::kernel(), sp.first, sp.second, 1, {0})
                    .value;
            errs[r] = std::abs(est - 0.25);
        }
        std::sort(errs.begin(), errs.end());
        medians.push_back(0.5 * (errs[reps / 2 - 1] + errs[reps / 2]));
    }
    for (size_t i = 1; i < medians.size(); ++i) CHECK(medians[i] < medians[i - 1]);
}

TEST_CASE("plug-in tracks the oracle's monotone ordering on the exampleB1 chain") {
    ExampleB1Oracle oracle(0.5);
    NamedModelId id;
    id.family = NamedModelId::Family::example_b1;
    id.sigma3_sq = 0.5;
    Dataset ds = simulate_dataset(named_model(id), 10000, 321);
    SplitPair sp = split_half(ds, 322);
    auto plugin = [&](int t, std::vector<int> c) {
        return residual_variance_plugin(RegressorSpec::kernel(), sp.first, sp.second, t, c).value;
    };
    // exact oracle: growing ancestral sets never increase the value
    CHECK(oracle.query(2, {0}) <= oracle.query(2, {}));
    CHECK(oracle.query(2, {0, 1}) <= oracle.query(2, {0}));
    // plug-in preserves that ordering at n = 10^4
    double e0 = marginal_variance(ds, 2);
    double e1 = plugin(2, {0});
    double e2 = plugin(2, {0, 1});
    CHECK(e1 < e0);
    CHECK(e2 < e1);
}
