#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "npvar/npvar.hpp"
#include "npvar/prune.hpp"
#include "npvar/simulate.hpp"

namespace npvar::cli {

// Default output directory: $NPVAR_OUT_DIR if set, else ".".
std::string default_out_dir();

struct GenerateOptions {
    std::string graph = "mc";
    std::string model = "sin";
    std::string named;  // named counterexample model; overrides graph/model
    int d = 10;
    int n = 1000;
    double sigma2 = 0.5;
    double expected_edges = -1.0;  // er/sf; default d (one per node)
    double glm_p = 0.1;
    bool exact_gp = false;  // joint GP draws at the realized rows (agp/ngp)
    std::uint64_t seed = 0;
    std::string out_dir;
};
void cmd_generate(const GenerateOptions& opt);

struct LearnOptions {
    std::string data_path;
    std::string eta = "auto";  // "auto" or a positive number
    std::string regressor = "kernel";
    double bandwidth_scale = 1.0;
    int knn_k = 0;
    std::uint64_t seed = 0;
    bool disable_split = false;
    bool centered = false;
    bool prune = false;
    double tau = 0.05;
    int workers = 1;
    std::string out_dir;
};
void cmd_learn(const LearnOptions& opt);

struct EvaluateOptions {
    std::string estimate_dag;    // DAG CSV (gives shd and a derived ordering)
    std::string estimate_order;  // learn result JSON (layers give the ordering)
    std::string truth_dag;
    std::string out_path;  // metrics JSON
};
void cmd_evaluate(const EvaluateOptions& opt);

struct BenchOptions {
    std::vector<std::string> graphs{"mc"};
    std::vector<std::string> models{"sin"};
    std::vector<int> d_list{10};
    std::vector<int> n_list{1000};
    std::vector<double> sigma2_list{0.5};
    std::vector<std::uint64_t> seeds{0, 1, 2};
    double edge_factor = 1.0;  // er/sf graphs get edge_factor * d expected edges
    std::string eta = "auto";
    std::string regressor = "kernel";
    double bandwidth_scale = 1.0;
    double glm_p = 0.1;
    bool disable_split = true;  // benchmark preset: no splitting
    bool prune = true;
    double tau = 0.05;
    bool run_eqvar = false;
    bool run_incedge = false;
    int workers = 1;
    long stop_after = -1;  // stop after this many new records (resume testing)
    bool svg = false;
    std::string out_dir;
};
void cmd_bench(const BenchOptions& opt);

struct ReproOptions {
    std::string preset;  // camfail | misspec | appendixC_table | exampleB1
    int runs = 50;
    std::uint64_t seed = 0;
    std::string out_dir;
};
void cmd_repro(const ReproOptions& opt);

// Shared experiment cores, reused by the acceptance suite.

// Order-recovery rate of NPVAR on a model over `runs` seeded datasets.
double recovery_rate(const SemModel& model, int n, int runs, std::uint64_t seed_base,
                     const NpvarConfig& cfg);

struct MisspecPoint {
    double sigma3_sq;
    int n;
    double rate;
};
std::vector<MisspecPoint> misspec_experiment(const std::vector<int>& ns, int runs,
                                             std::uint64_t seed_base, const NpvarConfig& cfg);

// Exception-to-exit-code mapping: 0 ok, 2 config, 3 data, 4 numerical.
int run_guarded(const std::function<void()>& body);

// Minimal static SVG line chart; series maps a legend label to y-values
// aligned with xs.
void write_svg_line_chart(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::vector<double>& xs,
                          const std::map<std::string, std::vector<double>>& series);

}  // namespace npvar::cli
