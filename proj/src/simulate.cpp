#include "npvar/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "npvar/errors.hpp"

namespace npvar {

namespace {
constexpr int kRffFeatures = 200;
constexpr double kTwoPi = 6.283185307179586476925286766559;

double sigpow14(double u) { return (u < 0 ? -1.0 : 1.0) * std::pow(std::abs(u), 1.4); }

double apply_nonlinearity(Nonlinearity g, double u) {
    return g == Nonlinearity::sigpow14 ? sigpow14(u) : std::sin(u);
}

std::string nonlinearity_name(Nonlinearity g) {
    return g == Nonlinearity::sigpow14 ? "sigpow14" : "sin";
}
}  // namespace

double GpFunction::eval(std::span<const double> x) const {
    const int D = static_cast<int>(phases.size());
    double acc = 0.0;
    for (int r = 0; r < D; ++r) {
        double arg = phases[r];
        const auto& w = frequencies[r];
        for (size_t m = 0; m < w.size(); ++m) arg += w[m] * x[m];
        acc += std::cos(arg);
    }
    return amplitude * std::sqrt(2.0 / static_cast<double>(D)) * acc;
}

GpFunction GpFunction::sample(int input_dim, int num_features, Rng& rng) {
    GpFunction f;
    f.frequencies.resize(num_features);
    f.phases.resize(num_features);
    for (int r = 0; r < num_features; ++r) {
        f.frequencies[r].resize(input_dim);
        for (int m = 0; m < input_dim; ++m) f.frequencies[r][m] = rng.normal();
        f.phases[r] = rng.uniform(0.0, kTwoPi);
    }
    return f;
}

double Mechanism::mean(std::span<const double> pv) const {
    switch (kind) {
        case Kind::source:
            return 0.0;
        case Kind::linear: {
            double acc = 0.0;
            for (size_t m = 0; m < pv.size(); ++m) acc += weights[m] * pv[m];
            return acc;
        }
        case Kind::sine_additive: {
            double acc = 0.0;
            for (double v : pv) acc += std::sin(v);
            return acc;
        }
        case Kind::gp_additive: {
            double acc = 0.0;
            for (size_t m = 0; m < pv.size(); ++m)
                acc += gps[m].eval(std::span<const double>(&pv[m], 1));
            return acc;
        }
        case Kind::gp_nonadditive:
            return gps[0].eval(pv);
        case Kind::glm_binary: {
            if (pv.empty()) return glm_flip ? 1.0 - glm_p : glm_p;
            bool one = pv[0] >= 0.5;
            double high = glm_flip ? 1.0 - glm_p : glm_p;
            return one ? high : 1.0 - high;
        }
        case Kind::custom:
            return custom(pv);
    }
    return 0.0;
}

std::string Mechanism::describe() const {
    switch (kind) {
        case Kind::source:
            return "source";
        case Kind::linear: {
            std::ostringstream os;
            os << "linear(";
            for (size_t m = 0; m < weights.size(); ++m) os << (m ? "," : "") << weights[m];
            os << ")";
            return os.str();
        }
        case Kind::sine_additive:
            return "sin_additive";
        case Kind::gp_additive:
            return "gp_additive";
        case Kind::gp_nonadditive:
            return "gp_nonadditive";
        case Kind::glm_binary:
            return "glm(p=" + std::to_string(glm_p) + (glm_flip ? ",flipped" : "") + ")";
        case Kind::custom:
            return label.empty() ? "custom" : label;
    }
    return "?";
}

double SemModel::node_residual_variance(int node) const {
    if (binary[node]) {
        double p = mechanisms[node].glm_p;
        return p * (1.0 - p);
    }
    return noise_var[node];
}

GraphKind parse_graph_kind(const std::string& text) {
    if (text == "mc") return GraphKind::mc;
    if (text == "er") return GraphKind::er;
    if (text == "sf") return GraphKind::sf;
    throw config_error("unknown graph kind '" + text + "' (use mc, er, or sf)");
}

ModelKind parse_model_kind(const std::string& text) {
    if (text == "sin") return ModelKind::sin;
    if (text == "agp") return ModelKind::agp;
    if (text == "ngp") return ModelKind::ngp;
    if (text == "glm") return ModelKind::glm;
    if (text == "linear") return ModelKind::linear;
    throw config_error("unknown model kind '" + text + "' (use sin, agp, ngp, glm, or linear)");
}

Dag gen_graph(GraphKind kind, int d, double expected_edges, std::uint64_t seed) {
    if (d < 1) throw config_error("gen_graph: d must be positive");
    std::vector<std::pair<int, int>> edges;
    Rng rng(seed);

    switch (kind) {
        case GraphKind::mc:
            for (int i = 1; i < d; ++i) edges.emplace_back(i - 1, i);
            break;
        case GraphKind::er: {
            const double max_edges = 0.5 * d * (d - 1);
            if (expected_edges < 0 || expected_edges > max_edges)
                throw config_error("gen_graph: infeasible expected edge count");
            const double q = max_edges > 0 ? expected_edges / max_edges : 0.0;
            std::vector<int> pos(d);
            std::iota(pos.begin(), pos.end(), 0);
            for (int i = d - 1; i > 0; --i) {
                int k = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
                std::swap(pos[i], pos[k]);
            }
            for (int i = 0; i < d; ++i) {
                for (int j = i + 1; j < d; ++j) {
                    if (rng.uniform() < q) {
                        if (pos[i] < pos[j])
                            edges.emplace_back(i, j);
                        else
                            edges.emplace_back(j, i);
                    }
                }
            }
            break;
        }
        case GraphKind::sf: {
            int m = std::max(1, static_cast<int>(std::ceil(expected_edges / std::max(1, d))));
            if (m >= d && d > 1)
                throw config_error("gen_graph: infeasible expected edge count for sf graph");
            std::vector<int> degree(d, 0);
            for (int t = m; t < d; ++t) {
                int attach = std::min(m, t);
                std::vector<int> chosen;
                for (int a = 0; a < attach; ++a) {
                    // preferential attachment; +1 keeps isolated nodes reachable
                    double total = 0.0;
                    for (int u = 0; u < t; ++u)
                        if (std::find(chosen.begin(), chosen.end(), u) == chosen.end())
                            total += degree[u] + 1.0;
                    double pick = rng.uniform() * total;
                    int sel = -1;
                    for (int u = 0; u < t; ++u) {
                        if (std::find(chosen.begin(), chosen.end(), u) != chosen.end()) continue;
                        pick -= degree[u] + 1.0;
                        if (pick <= 0.0) {
                            sel = u;
                            break;
                        }
                    }
                    if (sel < 0) sel = t - 1;
                    chosen.push_back(sel);
                }
                std::sort(chosen.begin(), chosen.end());
                for (int u : chosen) {
                    edges.emplace_back(u, t);
                    ++degree[u];
                    ++degree[t];
                }
            }
            break;
        }
    }
    return Dag(d, std::move(edges));
}

SemModel attach_mechanisms(const Dag& dag, ModelKind kind, double sigma2, std::uint64_t seed,
                           double glm_p) {
    const int d = dag.node_count();
    if (sigma2 <= 0.0 && kind != ModelKind::glm)
        throw config_error("attach_mechanisms: noise variance must be positive");
    if (kind == ModelKind::glm) {
        if (glm_p <= 0.0 || glm_p >= 1.0)
            throw config_error("attach_mechanisms: glm p must lie in (0,1)");
        for (int j = 0; j < d; ++j)
            if (dag.parents(j).size() > 1 ||
                (dag.parents(j).size() == 1 && dag.parents(j)[0] != j - 1))
                throw config_error("attach_mechanisms: glm model is defined for chains only");
    }

    SemModel model{dag, {}, {}, {}};
    model.mechanisms.resize(d);
    model.noise_var.assign(d, sigma2);
    model.binary.assign(d, kind == ModelKind::glm);

    for (int j = 0; j < d; ++j) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j) + 1000));
        const int np = static_cast<int>(dag.parents(j).size());
        Mechanism& mech = model.mechanisms[j];
        if (kind == ModelKind::glm) {
            mech.kind = Mechanism::Kind::glm_binary;
            mech.glm_p = glm_p;
            mech.glm_flip = rng.uniform() < 0.5;
            continue;
        }
        if (np == 0) {
            mech.kind = Mechanism::Kind::source;
            continue;
        }
        switch (kind) {
            case ModelKind::sin:
                mech.kind = Mechanism::Kind::sine_additive;
                break;
            case ModelKind::agp:
                mech.kind = Mechanism::Kind::gp_additive;
                for (int m = 0; m < np; ++m)
                    mech.gps.push_back(GpFunction::sample(1, kRffFeatures, rng));
                break;
            case ModelKind::ngp:
                mech.kind = Mechanism::Kind::gp_nonadditive;
                mech.gps.push_back(GpFunction::sample(np, kRffFeatures, rng));
                break;
            case ModelKind::linear:
                mech.kind = Mechanism::Kind::linear;
                for (int m = 0; m < np; ++m) {
                    double w = rng.uniform(0.5, 2.0);
                    mech.weights.push_back(rng.uniform() < 0.5 ? -w : w);
                }
                break;
            case ModelKind::glm:
                break;  // handled above
        }
    }
    return model;
}

Dataset simulate_dataset(const SemModel& model, int n, std::uint64_t seed,
                         const std::optional<Ordering>& order_override) {
    if (n < 1) throw config_error("simulate_dataset: n must be positive");
    const int d = model.dag.node_count();

    Ordering order =
        order_override ? *order_override : ordering_from_layers(layer_decomposition(model.dag));
    if (!is_consistent_ordering(model.dag, order))
        throw config_error("simulate_dataset: processing order is not a valid topological order");

    std::vector<std::vector<double>> cols(d, std::vector<double>(n, 0.0));
    std::vector<double> pv;
    for (int node : order.perm) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(node)));
        const auto& parents = model.dag.parents(node);
        pv.resize(parents.size());
        const Mechanism& mech = model.mechanisms[node];
        if (model.binary[node]) {
            for (int i = 0; i < n; ++i) {
                for (size_t m = 0; m < parents.size(); ++m) pv[m] = cols[parents[m]][i];
                cols[node][i] = rng.uniform() < mech.mean(pv) ? 1.0 : 0.0;
            }
        } else {
            const double sd = std::sqrt(model.noise_var[node]);
            for (int i = 0; i < n; ++i) {
                for (size_t m = 0; m < parents.size(); ++m) pv[m] = cols[parents[m]][i];
                cols[node][i] = mech.mean(pv) + sd * rng.normal();
            }
        }
    }

    std::vector<std::string> names(d);
    for (int j = 0; j < d; ++j) names[j] = "X" + std::to_string(j + 1);
    return Dataset(std::move(names), std::move(cols));
}

std::vector<double> sample_gp_values_exact(const std::vector<std::vector<double>>& points,
                                           Rng& rng) {
    const int n = static_cast<int>(points.size());
    // K_ab = exp(-|x_a - x_b|^2 / 2) with a small diagonal jitter, then
    // values = chol(K) z
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
            double s = 0.0;
            for (size_t m = 0; m < points[a].size(); ++m) {
                double dlt = points[a][m] - points[b][m];
                s += dlt * dlt;
            }
            k[a][b] = k[b][a] = std::exp(-0.5 * s);
        }
        k[a][a] += 1e-10;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = k[i][j];
            for (int m = 0; m < j; ++m) s -= k[i][m] * k[j][m];
            if (i == j) {
                if (s <= 0.0) throw numeric_error("sample_gp_values_exact: kernel not PD");
                k[i][i] = std::sqrt(s);
            } else {
                k[i][j] = s / k[j][j];
            }
        }
    }
    std::vector<double> z(n), values(n, 0.0);
    for (int i = 0; i < n; ++i) z[i] = rng.normal();
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += k[i][j] * z[j];
        values[i] = s;
    }
    return values;
}

Dataset simulate_dataset_exact_gp(const Dag& dag, ModelKind kind, double sigma2, int n,
                                  std::uint64_t seed) {
    if (kind != ModelKind::agp && kind != ModelKind::ngp)
        throw config_error("simulate_dataset_exact_gp: only agp and ngp mechanisms");
    if (n < 1) throw config_error("simulate_dataset_exact_gp: n must be positive");
    if (sigma2 <= 0.0) throw config_error("simulate_dataset_exact_gp: noise variance > 0");

    const int d = dag.node_count();
    Ordering order = ordering_from_layers(layer_decomposition(dag));
    std::vector<std::vector<double>> cols(d, std::vector<double>(n, 0.0));
    const double sd = std::sqrt(sigma2);

    for (int node : order.perm) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(node)));
        const auto& parents = dag.parents(node);
        std::vector<double> mean(n, 0.0);
        if (!parents.empty()) {
            if (kind == ModelKind::agp) {
                for (int p : parents) {
                    std::vector<std::vector<double>> pts(n, std::vector<double>(1));
                    for (int i = 0; i < n; ++i) pts[i][0] = cols[p][i];
                    std::vector<double> f = sample_gp_values_exact(pts, rng);
                    for (int i = 0; i < n; ++i) mean[i] += f[i];
                }
            } else {
                std::vector<std::vector<double>> pts(n, std::vector<double>(parents.size()));
                for (int i = 0; i < n; ++i)
                    for (size_t m = 0; m < parents.size(); ++m) pts[i][m] = cols[parents[m]][i];
                mean = sample_gp_values_exact(pts, rng);
            }
        }
        for (int i = 0; i < n; ++i) cols[node][i] = mean[i] + sd * rng.normal();
    }

    std::vector<std::string> names(d);
    for (int j = 0; j < d; ++j) names[j] = "X" + std::to_string(j + 1);
    return Dataset(std::move(names), std::move(cols));
}

SemModel named_model(const NamedModelId& id) {
    using Family = NamedModelId::Family;

    auto custom1 = [](std::function<double(double)> f, std::string label) {
        Mechanism m;
        m.kind = Mechanism::Kind::custom;
        m.custom = [f = std::move(f)](std::span<const double> pv) { return f(pv[0]); };
        m.label = std::move(label);
        return m;
    };
    auto custom2 = [](std::function<double(double, double)> f, std::string label) {
        Mechanism m;
        m.kind = Mechanism::Kind::custom;
        m.custom = [f = std::move(f)](std::span<const double> pv) { return f(pv[0], pv[1]); };
        m.label = std::move(label);
        return m;
    };
    Mechanism source;
    source.kind = Mechanism::Kind::source;

    switch (id.family) {
        case Family::camfail_linear: {
            Dag dag(3, {{0, 1}, {0, 2}, {1, 2}});
            SemModel model{dag, {}, {1.0, 1.0, 1.0}, {false, false, false}};
            Mechanism m2;
            m2.kind = Mechanism::Kind::linear;
            m2.weights = {1.0};
            Mechanism m3;
            m3.kind = Mechanism::Kind::linear;
            m3.weights = {1.0, 1.0};
            model.mechanisms = {source, m2, m3};
            return model;
        }
        case Family::camfail_gdelta: {
            Dag dag(3, {{0, 1}, {0, 2}, {1, 2}});
            const Nonlinearity g = id.g;
            const double delta = id.delta;
            auto gd = [g, delta](double u) { return u + delta * apply_nonlinearity(g, u); };
            std::string gname = "u+" + std::to_string(delta) + "*" + nonlinearity_name(g) + "(u)";
            SemModel model{dag, {}, {1.0, 1.0, 1.0}, {false, false, false}};
            model.mechanisms = {source, custom1(gd, "gdelta[" + gname + "]"),
                                custom2([gd](double a, double b) { return gd(a) + gd(b); },
                                        "gdelta_sum[" + gname + "]")};
            return model;
        }
        case Family::eq5: {
            Dag dag(3, {{0, 1}, {0, 2}, {1, 2}});
            const Nonlinearity g = id.g;
            auto gf = [g](double u) { return apply_nonlinearity(g, u); };
            std::string gname = nonlinearity_name(g);
            SemModel model{dag, {}, {1.0, 1.0, 1.0}, {false, false, false}};
            model.mechanisms = {source, custom1(gf, gname + "(x1)"),
                                custom2([gf](double a, double b) { return gf(a) + gf(b); },
                                        gname + "(x1)+" + gname + "(x2)")};
            return model;
        }
        case Family::camfail_quadratic: {
            Dag dag(3, {{0, 1}, {0, 2}, {1, 2}});
            const Nonlinearity g = id.g;
            auto hf = [g](double u) { return apply_nonlinearity(g, u); };
            std::string hname = nonlinearity_name(g);
            SemModel model{dag, {}, {1.0, 1.0, 1.0}, {false, false, false}};
            model.mechanisms = {source, custom1([](double u) { return u * u; }, "x1^2"),
                                custom2([hf](double a, double b) { return 4.0 * a * a + hf(b); },
                                        "4*x1^2+" + hname + "(x2)")};
            return model;
        }
        case Family::example_b1: {
            Dag dag(3, {{0, 1}, {1, 2}});
            SemModel model{dag, {}, {1.0, 2.0 / 3.0, id.sigma3_sq}, {false, false, false}};
            model.mechanisms = {source, custom1([](double u) { return 0.5 * u * u; }, "x1^2/2"),
                                custom1([](double u) { return u * u / 3.0; }, "x2^2/3")};
            return model;
        }
    }
    throw config_error("named_model: unknown model id");
}

NamedModelId parse_named_model(const std::string& text) {
    NamedModelId id;
    auto open = text.find('(');
    std::string base = open == std::string::npos ? text : text.substr(0, open);
    std::vector<std::string> args;
    if (open != std::string::npos) {
        auto close = text.rfind(')');
        if (close == std::string::npos || close < open)
            throw config_error("named model: unbalanced parentheses in '" + text + "'");
        std::istringstream ss(text.substr(open + 1, close - open - 1));
        std::string field;
        while (std::getline(ss, field, ',')) args.push_back(field);
    }
    auto parse_g = [&](const std::string& s) {
        if (s == "sin") return Nonlinearity::sine;
        if (s == "sigpow" || s == "sigpow14") return Nonlinearity::sigpow14;
        throw config_error("named model: unknown nonlinearity '" + s + "'");
    };

    if (base == "camfail_linear") {
        id.family = NamedModelId::Family::camfail_linear;
    } else if (base == "camfail_gdelta") {
        id.family = NamedModelId::Family::camfail_gdelta;
        if (args.size() != 2) throw config_error("camfail_gdelta needs (g, delta)");
        id.g = parse_g(args[0]);
        id.delta = std::stod(args[1]);
    } else if (base == "eq5") {
        id.family = NamedModelId::Family::eq5;
        if (args.size() != 1) throw config_error("eq5 needs (g)");
        id.g = parse_g(args[0]);
    } else if (base == "camfail_quadratic") {
        id.family = NamedModelId::Family::camfail_quadratic;
        if (args.size() != 1) throw config_error("camfail_quadratic needs (h)");
        id.g = parse_g(args[0]);
    } else if (base == "exampleB1") {
        id.family = NamedModelId::Family::example_b1;
        if (args.size() != 1) throw config_error("exampleB1 needs (sigma3_sq)");
        id.sigma3_sq = std::stod(args[0]);
        if (id.sigma3_sq <= 0.0) throw config_error("exampleB1: sigma3_sq must be positive");
    } else {
        throw config_error("unknown named model '" + text + "'");
    }
    return id;
}

std::string named_model_label(const NamedModelId& id) {
    using Family = NamedModelId::Family;
    switch (id.family) {
        case Family::camfail_linear:
            return "camfail_linear";
        case Family::camfail_gdelta:
            return "camfail_gdelta(" + nonlinearity_name(id.g) + "," + std::to_string(id.delta) +
                   ")";
        case Family::eq5:
            return "eq5(" + nonlinearity_name(id.g) + ")";
        case Family::camfail_quadratic:
            return "camfail_quadratic(" + nonlinearity_name(id.g) + ")";
        case Family::example_b1:
            return "exampleB1(" + std::to_string(id.sigma3_sq) + ")";
    }
    return "?";
}

}  // namespace npvar
