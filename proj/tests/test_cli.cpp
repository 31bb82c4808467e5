#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "npvar/cli.hpp"
#include "npvar/errors.hpp"
#include "npvar/graph.hpp"

using namespace npvar;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// wall-clock fields are measurements, not results; drop them before
// comparing reports for determinism
std::string strip_runtime_lines(const std::string& text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.find("runtime") == std::string::npos) out << line << "\n";
    return out.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("generate writes data, truth dag, and manifest") {
    TempDir dir("npvar_test_generate");
    cli::GenerateOptions opt;
    opt.graph = "mc";
    opt.model = "sin";
    opt.d = 10;
    opt.n = 1000;
    opt.sigma2 = 0.5;
    opt.seed = 7;
    opt.out_dir = dir.str();
    cli::cmd_generate(opt);

    Dataset ds = Dataset::read_csv(dir.str() + "/data.csv");
    CHECK(ds.row_count() == 1000);
    CHECK(ds.col_count() == 10);
    Dag truth = read_dag_csv(dir.str() + "/truth_dag.csv");
    CHECK(truth.edge_count() == 9);
    json manifest = json::parse(slurp(dir.str() + "/manifest.json"));
    CHECK(manifest["schema"] == 1);
    CHECK(manifest["model"]["sigma2"] == 0.5);
}

TEST_CASE("generate er4 manifest records the expected edge count") {
    TempDir dir("npvar_test_er4");
    cli::GenerateOptions opt;
    opt.graph = "er";
    opt.model = "agp";
    opt.d = 20;
    opt.n = 50;
    opt.expected_edges = 80;
    opt.out_dir = dir.str();
    cli::cmd_generate(opt);
    json manifest = json::parse(slurp(dir.str() + "/manifest.json"));
    CHECK(manifest["graph"]["expected_edges"] == 80.0);
}

TEST_CASE("generate glm chain emits a binary csv") {
    TempDir dir("npvar_test_glm");
    cli::GenerateOptions opt;
    opt.graph = "mc";
    opt.model = "glm";
    opt.d = 5;
    opt.n = 400;
    opt.glm_p = 0.3;
    opt.out_dir = dir.str();
    cli::cmd_generate(opt);
    Dataset ds = Dataset::read_csv(dir.str() + "/data.csv");
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 400; ++i)
            CHECK((ds.col(j)[i] == 0.0 || ds.col(j)[i] == 1.0));
    // literal 0/1 text on disk
    std::string text = slurp(dir.str() + "/data.csv");
    CHECK(text.find("0.5") == std::string::npos);
}

TEST_CASE("learn then evaluate round trip on an easy chain") {
    TempDir dir("npvar_test_learn");
    cli::GenerateOptions gen;
    gen.graph = "mc";
    gen.model = "sin";
    gen.d = 5;
    gen.n = 800;
    gen.sigma2 = 0.5;
    gen.seed = 21;
    gen.out_dir = dir.str();
    cli::cmd_generate(gen);

    cli::LearnOptions learn;
    learn.data_path = dir.str() + "/data.csv";
    learn.disable_split = true;
    learn.prune = true;
    learn.out_dir = dir.str();
    cli::cmd_learn(learn);

    json result = json::parse(slurp(dir.str() + "/result.json"));
    CHECK(result["schema"] == 1);
    CHECK(result.contains("layers"));
    CHECK(result.contains("trace"));
    CHECK(result.contains("eta_used"));
    CHECK(fs::exists(dir.str() + "/estimated_dag.csv"));

    cli::EvaluateOptions eval;
    eval.estimate_dag = dir.str() + "/estimated_dag.csv";
    eval.estimate_order = dir.str() + "/result.json";
    eval.truth_dag = dir.str() + "/truth_dag.csv";
    eval.out_path = dir.str() + "/metrics.json";
    cli::cmd_evaluate(eval);
    json metrics = json::parse(slurp(dir.str() + "/metrics.json"));
    CHECK(metrics.contains("order_correct"));
    CHECK(metrics.contains("shd"));
}

TEST_CASE("learn result is byte-identical across reruns") {
    TempDir dir("npvar_test_determinism");
    cli::GenerateOptions gen;
    gen.graph = "mc";
    gen.model = "sin";
    gen.d = 4;
    gen.n = 300;
    gen.seed = 5;
    gen.out_dir = dir.str();
    cli::cmd_generate(gen);

    cli::LearnOptions learn;
    learn.data_path = dir.str() + "/data.csv";
    learn.seed = 11;
    learn.out_dir = dir.str();
    cli::cmd_learn(learn);
    std::string first = slurp(dir.str() + "/result.json");
    cli::cmd_learn(learn);
    std::string second = slurp(dir.str() + "/result.json");
    CHECK(first == second);
}

TEST_CASE("evaluate matches the documented examples") {
    TempDir dir("npvar_test_eval");
    Dag chain(3, {{0, 1}, {1, 2}});
    Dag reversed(3, {{2, 1}, {1, 0}});
    write_dag_csv(chain, dir.str() + "/truth.csv");
    write_dag_csv(chain, dir.str() + "/perfect.csv");
    write_dag_csv(reversed, dir.str() + "/reversed.csv");

    cli::EvaluateOptions eval;
    eval.estimate_dag = dir.str() + "/perfect.csv";
    eval.truth_dag = dir.str() + "/truth.csv";
    eval.out_path = dir.str() + "/m1.json";
    cli::cmd_evaluate(eval);
    json m1 = json::parse(slurp(dir.str() + "/m1.json"));
    CHECK(m1["order_correct"] == true);
    CHECK(m1["shd"] == 0);

    eval.estimate_dag = dir.str() + "/reversed.csv";
    eval.out_path = dir.str() + "/m2.json";
    cli::cmd_evaluate(eval);
    json m2 = json::parse(slurp(dir.str() + "/m2.json"));
    CHECK(m2["order_correct"] == false);
    CHECK(m2["shd"] == 2);

    // v-structure truth accepts either root-first ordering
    Dag vstruct(3, {{0, 2}, {1, 2}});
    Dag root_first(3, {{1, 2}, {0, 2}});
    write_dag_csv(vstruct, dir.str() + "/vtruth.csv");
    write_dag_csv(root_first, dir.str() + "/vest.csv");
    eval.estimate_dag = dir.str() + "/vest.csv";
    eval.truth_dag = dir.str() + "/vtruth.csv";
    eval.out_path = dir.str() + "/m3.json";
    cli::cmd_evaluate(eval);
    CHECK(json::parse(slurp(dir.str() + "/m3.json"))["order_correct"] == true);
}

TEST_CASE("bench produces settings x seeds records and is resumable") {
    TempDir dir("npvar_test_bench");
    cli::BenchOptions opt;
    opt.graphs = {"mc"};
    opt.models = {"sin"};
    opt.d_list = {4};
    opt.n_list = {200, 400};
    opt.sigma2_list = {0.5};
    opt.seeds = {0, 1, 2};
    opt.prune = false;
    opt.out_dir = dir.str();
    cli::cmd_bench(opt);

    json report = json::parse(slurp(dir.str() + "/report.json"));
    REQUIRE(report["groups"].size() == 2);
    for (const auto& group : report["groups"]) {
        CHECK(group["records"] == 3);  // |settings| x |seeds| per setting
        double rate = group["recovery_rate"].get<double>();
        CHECK(rate >= 0.0);
        CHECK(rate <= 1.0);
    }
    std::string uninterrupted = strip_runtime_lines(slurp(dir.str() + "/report.json"));

    // interrupted run + resume reproduces the same report
    TempDir dir2("npvar_test_bench_resume");
    opt.out_dir = dir2.str();
    opt.stop_after = 2;
    cli::cmd_bench(opt);
    json partial = json::parse(slurp(dir2.str() + "/run_meta.json"));
    CHECK(partial["stopped_early"] == true);
    opt.stop_after = -1;
    cli::cmd_bench(opt);
    CHECK(strip_runtime_lines(slurp(dir2.str() + "/report.json")) == uninterrupted);
}

TEST_CASE("bench with a worker pool writes records in deterministic order") {
    cli::BenchOptions opt;
    opt.graphs = {"mc"};
    opt.models = {"sin"};
    opt.d_list = {4};
    opt.n_list = {150};
    opt.sigma2_list = {0.5};
    opt.seeds = {0, 1, 2, 3};
    opt.prune = false;

    TempDir serial("npvar_test_bench_serial");
    opt.out_dir = serial.str();
    opt.workers = 1;
    cli::cmd_bench(opt);
    TempDir pooled("npvar_test_bench_pooled");
    opt.out_dir = pooled.str();
    opt.workers = 3;
    cli::cmd_bench(opt);
    CHECK(strip_runtime_lines(slurp(pooled.str() + "/records.jsonl")) ==
          strip_runtime_lines(slurp(serial.str() + "/records.jsonl")));

    opt.seeds = {};
    CHECK_THROWS_AS(cli::cmd_bench(opt), config_error);
}

TEST_CASE("bench records failures without aborting the grid") {
    TempDir dir("npvar_test_bench_fail");
    cli::BenchOptions opt;
    opt.graphs = {"er"};
    opt.models = {"glm"};  // glm demands a chain: every cell fails
    opt.d_list = {4};
    opt.n_list = {100};
    opt.seeds = {0, 1};
    opt.prune = false;
    opt.out_dir = dir.str();
    cli::cmd_bench(opt);
    json report = json::parse(slurp(dir.str() + "/report.json"));
    REQUIRE(report["groups"].size() == 1);
    CHECK(report["groups"][0]["failures"] == 2);
}

TEST_CASE("repro appendixC_table emits the exact table") {
    TempDir dir("npvar_test_repro_c");
    cli::ReproOptions opt;
    opt.preset = "appendixC_table";
    opt.out_dir = dir.str();
    cli::cmd_repro(opt);
    json out = json::parse(slurp(dir.str() + "/appendixC.json"));
    CHECK(out["var"][0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out["var"][1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(out["var"][2] == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(out["log_ratios"]["X2->X3"] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(out["population_order_consistent"] == true);
    CHECK(out["greedy_order_consistent"] == false);
}

TEST_CASE("run_guarded maps exception kinds to exit codes") {
    CHECK(cli::run_guarded([] {}) == 0);
    CHECK(cli::run_guarded([] { throw config_error("x"); }) == 2);
    CHECK(cli::run_guarded([] { throw data_error("x"); }) == 3);
    CHECK(cli::run_guarded([] { throw numeric_error("x"); }) == 4);
}

TEST_CASE("svg chart writer produces a parseable file") {
    TempDir dir("npvar_test_svg");
    std::map<std::string, std::vector<double>> series{{"a", {0.1, 0.5, 0.9}},
                                                      {"b", {0.2, 0.4, 0.6}}};
    cli::write_svg_line_chart(dir.str() + "/chart.svg", "title", "n", {100, 200, 300}, series);
    std::string svg = slurp(dir.str() + "/chart.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
}
