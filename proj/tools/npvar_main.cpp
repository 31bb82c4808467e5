#include <string>
#include <vector>

#include "CLI11.hpp"
#include "npvar/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"npvar - nonparametric DAG structure learning by residual-variance layering"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --config appear after the subcommand name
    app.set_config("--config", "", "flat key-value config file; flags override it");

    npvar::cli::GenerateOptions gen;
    auto* cgen = app.add_subcommand("generate", "simulate a dataset with known ground truth");
    cgen->add_option("--graph", gen.graph, "graph kind: mc, er, sf");
    cgen->add_option("--model", gen.model, "mechanism: sin, agp, ngp, glm, linear");
    cgen->add_option("--named", gen.named,
                     "named model, e.g. camfail_linear, eq5(sin), exampleB1(0.5)");
    cgen->add_option("--d", gen.d, "node count");
    cgen->add_option("--n", gen.n, "sample size");
    cgen->add_option("--sigma2", gen.sigma2, "noise variance");
    cgen->add_option("--expected-edges", gen.expected_edges, "er/sf expected edge count");
    cgen->add_option("--p", gen.glm_p, "glm success probability");
    cgen->add_flag("--exact-gp", gen.exact_gp,
                   "draw gp values jointly at the realized rows (agp/ngp)");
    cgen->add_option("--seed", gen.seed, "rng seed");
    cgen->add_option("--out", gen.out_dir, "output directory");

    npvar::cli::LearnOptions learn;
    auto* clearn = app.add_subcommand("learn", "estimate layers / ordering, optionally a DAG");
    clearn->add_option("--data", learn.data_path, "input data CSV")->required();
    clearn->add_option("--eta", learn.eta, "layer threshold, 'auto' or a number");
    clearn->add_option("--regressor", learn.regressor, "kernel, knn, or additive");
    clearn->add_option("--bandwidth-scale", learn.bandwidth_scale, "kernel bandwidth scale c");
    clearn->add_option("--knn-k", learn.knn_k, "knn neighbor count (0 = auto)");
    clearn->add_option("--seed", learn.seed, "rng seed (drives sample splits)");
    clearn->add_flag("--disable-split", learn.disable_split, "fit and evaluate on the full sample");
    clearn->add_flag("--centered", learn.centered, "centered residual moments (non-default)");
    clearn->add_flag("--prune", learn.prune, "also recover the DAG by variable selection");
    clearn->add_option("--tau", learn.tau, "pruning threshold");
    clearn->add_option("--workers", learn.workers, "parallel fits per iteration");
    clearn->add_option("--out", learn.out_dir, "output directory");

    npvar::cli::EvaluateOptions eval;
    auto* ceval = app.add_subcommand("evaluate", "order/structure metrics against a truth DAG");
    ceval->add_option("--est-dag", eval.estimate_dag, "estimated DAG CSV");
    ceval->add_option("--est-order", eval.estimate_order, "learn result JSON");
    ceval->add_option("--truth", eval.truth_dag, "truth DAG CSV")->required();
    ceval->add_option("--out", eval.out_path, "metrics JSON path");

    npvar::cli::BenchOptions bench;
    auto* cbench = app.add_subcommand("bench", "run a (setting x seed) benchmark grid");
    cbench->add_option("--graphs", bench.graphs, "graph kinds");
    cbench->add_option("--models", bench.models, "mechanisms");
    cbench->add_option("--d", bench.d_list, "node counts");
    cbench->add_option("--n", bench.n_list, "sample sizes");
    cbench->add_option("--sigma2", bench.sigma2_list, "noise variances");
    cbench->add_option("--seeds", bench.seeds, "seeds");
    cbench->add_option("--edge-factor", bench.edge_factor,
                       "er/sf expected edges = factor * d (ER4 uses 4)");
    cbench->add_option("--eta", bench.eta, "layer threshold");
    cbench->add_option("--regressor", bench.regressor, "kernel, knn, or additive");
    cbench->add_option("--bandwidth-scale", bench.bandwidth_scale, "kernel bandwidth scale");
    cbench->add_option("--p", bench.glm_p, "glm success probability");
    cbench->add_flag("!--split", bench.disable_split, "enable per-iteration sample splitting");
    cbench->add_flag("!--no-prune", bench.prune, "skip DAG pruning");
    cbench->add_option("--tau", bench.tau, "pruning threshold");
    cbench->add_flag("--eqvar", bench.run_eqvar, "also run the linear EqVar baseline");
    cbench->add_flag("--incedge", bench.run_incedge, "also run the greedy IncEdge baseline");
    cbench->add_option("--workers", bench.workers, "worker pool size");
    cbench->add_option("--stop-after", bench.stop_after,
                       "stop after this many new records (resume testing)");
    cbench->add_flag("--svg", bench.svg, "emit SVG line charts");
    cbench->add_option("--out", bench.out_dir, "output directory");

    npvar::cli::ReproOptions repro;
    auto* crepro = app.add_subcommand("repro", "reproduction presets");
    crepro->add_option("preset", repro.preset,
                       "camfail | misspec | appendixC_table | exampleB1")
        ->required();
    crepro->add_option("--runs", repro.runs, "seeded runs per grid point");
    crepro->add_option("--seed", repro.seed, "base seed");
    crepro->add_option("--out", repro.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    return npvar::cli::run_guarded([&] {
        if (cgen->parsed()) npvar::cli::cmd_generate(gen);
        if (clearn->parsed()) npvar::cli::cmd_learn(learn);
        if (ceval->parsed()) npvar::cli::cmd_evaluate(eval);
        if (cbench->parsed()) npvar::cli::cmd_bench(bench);
        if (crepro->parsed()) npvar::cli::cmd_repro(repro);
    });
}
