// vmgcn: command-line driver for the decomposition + graph forecasting pipeline.
//
// Every command takes --config FILE and any number of --set section.key=value
// overrides. Failures print one JSON object on stderr and exit nonzero.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vmgcn/bench.hpp"
#include "vmgcn/csv.hpp"
#include "vmgcn/errors.hpp"
#include "vmgcn/io.hpp"
#include "vmgcn/synthetic.hpp"

namespace fs = std::filesystem;
using namespace vmgcn;

namespace {

constexpr int kExitFailure = 2;
constexpr int kExitUsage = 64;

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    bool quiet = false;
    bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--set", c.overrides, "override, e.g. --set vmd.K=6")->type_name("KEY=VALUE");
    auto* q = cmd->add_flag("-q,--quiet", c.quiet, "suppress cache and progress notices");
    auto* v = cmd->add_flag("-v,--verbose", c.verbose, "print the resolved configuration");
    q->excludes(v);
}

RunConfig resolve(const Common& c) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : RunConfig::load(c.config);
    for (const auto& o : c.overrides) cfg.apply_override(o);
    cfg.validate();
    if (c.verbose) std::cerr << cfg.to_json_text();
    return cfg;
}

std::ostream* log_stream(const Common& c) { return c.quiet ? nullptr : &std::cerr; }

fs::path out_path(const RunConfig& cfg, const std::string& name) { return fs::path(cfg.output_dir) / name; }

void write_out(const RunConfig& cfg, const std::string& name, const std::function<void(std::ostream&)>& fn) {
    atomic_write(out_path(cfg, name), fn);
    std::cout << "wrote " << out_path(cfg, name).string() << '\n';
}

void write_modes_summary(std::ostream& os, const std::vector<TimeSeries>& series, const std::vector<ModeSet>& modes) {
    os << "node_id,K,iterations,converged,residual";
    const std::size_t k = modes.empty() ? 0 : modes.front().num_modes();
    for (std::size_t i = 1; i <= k; ++i) os << ",omega_" << i;
    os << '\n';
    for (std::size_t n = 0; n < series.size(); ++n) {
        const ModeSet& m = modes[n];
        os << series[n].node_id << ',' << m.num_modes() << ',' << m.iterations_used << ',' << (m.converged ? 1 : 0)
           << ',' << csv::format(m.reconstruction_residual);
        for (double w : m.omegas) os << ',' << csv::format(w);
        os << '\n';
    }
}

std::vector<std::pair<int, MetricsDelta>> ablate_all(Pipeline& p, std::vector<int> modes) {
    const auto& ds = p.dataset();
    if (modes.empty())
        for (int k = 1; k <= ds.num_modes(); ++k) modes.push_back(k);
    const auto& tm = p.trained_cached();
    std::vector<std::pair<int, MetricsDelta>> out;
    for (int k : modes)
        out.emplace_back(k, ablate_mode(tm.checkpoint.params, ds, p.spectral(), k, p.config().mask_threshold,
                                        p.config().train.threads));
    return out;
}

void write_forecasts(Pipeline& p) {
    const auto& ds = p.dataset();
    const auto& tm = p.trained_cached();
    const auto preds = predict(tm.checkpoint.params, ds, p.spectral(), ds.test, {}, p.config().train.threads);
    write_out(p.config(), "forecasts.csv", [&](std::ostream& os) { write_forecasts_csv(os, ds, ds.test, preds); });
}

void write_metrics(Pipeline& p) {
    const auto& tm = p.trained_cached();
    const RunConfig& cfg = p.config();
    const MetricsReport test =
        evaluate(tm.checkpoint.params, p.dataset(), p.spectral(), Split::Test, cfg.mask_threshold, cfg.train.threads);
    const MetricsReport hl = historical_last_report(p.dataset(), Split::Test, cfg.mask_threshold);
    write_out(cfg, "metrics.json", [&](std::ostream& os) {
        write_metrics_json(os, test, &hl, tm.checkpoint.fingerprint, cfg.train.seed);
    });
    std::cout << "test MAE " << csv::format(test.average.mae) << " RMSE " << csv::format(test.average.rmse)
              << " MAPE " << csv::format(test.average.mape) << "% (historical-last MAE "
              << csv::format(hl.average.mae) << ")\n";
}

template <class T>
std::vector<T> or_default(const std::vector<T>& v, T fallback) {
    return v.empty() ? std::vector<T>{fallback} : v;
}

void print_error(const std::string& kind, const std::string& message, const std::vector<std::size_t>& lines = {}) {
    nlohmann::json j;
    j["error"]["kind"] = kind;
    j["error"]["message"] = message;
    if (!lines.empty()) j["error"]["lines"] = lines;
    std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Traffic forecasting with variational mode decomposition and graph convolution"};
    app.require_subcommand(1);
    Common common;

    auto* decompose_cmd = app.add_subcommand("decompose", "decompose every node's series (cached)");
    auto* select_cmd = app.add_subcommand("select-k", "choose the number of modes by reconstruction loss");
    auto* graph_cmd = app.add_subcommand("build-graph", "build the thresholded Gaussian-kernel adjacency");
    auto* train_cmd = app.add_subcommand("train", "train the forecaster (cached) and report test metrics");
    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate the cached model and write forecasts");
    auto* ablate_cmd = app.add_subcommand("ablate", "zero one mode at a time on the test split");
    auto* sweep_cmd = app.add_subcommand("sweep", "decompose, train and evaluate over a VMD grid");
    auto* bench_cmd = app.add_subcommand("bench", "time decomposition and the forward pass");
    auto* export_cmd = app.add_subcommand("export-plots", "write plot-ready CSVs from cached artifacts");
    auto* gen_cmd = app.add_subcommand("generate-synthetic", "write a synthetic region and a config for it");
    for (auto* cmd : {decompose_cmd, select_cmd, graph_cmd, train_cmd, eval_cmd, ablate_cmd, sweep_cmd, bench_cmd,
                      export_cmd})
        add_common(cmd, common);

    std::vector<int> ablate_modes_opt;
    ablate_cmd->add_option("--mode", ablate_modes_opt, "1-based mode index (repeatable); default all");

    std::vector<int> sweep_k;
    std::vector<double> sweep_alpha, sweep_tau, sweep_eps;
    std::vector<std::string> sweep_init;
    sweep_cmd->add_option("--K", sweep_k, "mode counts")->delimiter(',');
    sweep_cmd->add_option("--alpha", sweep_alpha, "bandwidth penalties")->delimiter(',');
    sweep_cmd->add_option("--tau", sweep_tau, "dual ascent steps")->delimiter(',');
    sweep_cmd->add_option("--epsilon", sweep_eps, "tolerances")->delimiter(',');
    sweep_cmd->add_option("--omega-init", sweep_init, "uniform|zero|random")->delimiter(',');

    std::vector<int> bench_k{2, 4, 8}, bench_nodes{32, 64, 128};
    std::vector<std::size_t> bench_len{1024, 2048, 4096};
    int bench_iter = 50, bench_repeats = 3;
    bench_cmd->add_option("--K", bench_k, "mode counts")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--L", bench_len, "series lengths")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--iterations", bench_iter, "ADMM sweeps per run")->capture_default_str();
    bench_cmd->add_option("--nodes", bench_nodes, "graph sizes for the forward pass")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--repeats", bench_repeats, "timings per point (median kept)")->capture_default_str();

    std::string gen_kind = "ring", gen_dir;
    int gen_nodes = 10;
    std::size_t gen_steps = 2000;
    std::uint64_t gen_seed = 1;
    gen_cmd->add_option("--kind", gen_kind, "ring|tones|lowfreq")
        ->check(CLI::IsMember({"ring", "tones", "lowfreq"}))
        ->capture_default_str();
    gen_cmd->add_option("--nodes", gen_nodes, "node count")->capture_default_str();
    gen_cmd->add_option("--steps", gen_steps, "15-minute steps")->capture_default_str();
    gen_cmd->add_option("--seed", gen_seed, "seed")->capture_default_str();
    gen_cmd->add_option("--dir", gen_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return kExitUsage;
    }

    try {
        if (gen_cmd->parsed()) {
            SyntheticRegion r;
            if (gen_kind == "ring")
                r = ring_traffic(gen_nodes, gen_steps, gen_seed);
            else if (gen_kind == "tones")
                r = tone_region(gen_nodes, gen_steps, {0.05, 0.12, 0.2, 0.3, 0.4}, 0.002, gen_seed);
            else
                r = low_frequency_driven(gen_nodes, gen_steps, gen_seed);
            const fs::path dir(gen_dir);
            atomic_write(dir / "flows.csv", [&](std::ostream& os) { write_flows_csv(os, r.series, 3); });
            atomic_write(dir / "nodes.csv", [&](std::ostream& os) { write_nodes_csv(os, r.graph); });
            atomic_write(dir / "distances.csv", [&](std::ostream& os) { write_distances_csv(os, r.graph); });
            RunConfig cfg;
            cfg.flows_path = "flows.csv";
            cfg.nodes_path = "nodes.csv";
            cfg.distances_path = "distances.csv";
            cfg.output_dir = (dir / "out").string();
            cfg.cache_dir = (dir / "cache").string();
            atomic_write(dir / "config.json", [&](std::ostream& os) { os << cfg.to_json_text(); });
            std::cout << "wrote " << r.series.size() << " nodes x " << gen_steps << " steps to " << dir.string() << '\n';
            return 0;
        }

        const RunConfig cfg = resolve(common);

        if (bench_cmd->parsed()) {
            const auto vmd_rows = bench_vmd(bench_k, bench_len, bench_iter, bench_repeats, cfg.vmd.seed);
            const auto fwd_rows = bench_forward(bench_nodes, bench_repeats, cfg.model.seed);
            write_vmd_bench_csv(std::cout, vmd_rows);
            write_forward_bench_csv(std::cout, fwd_rows);
            write_out(cfg, "bench_vmd.csv", [&](std::ostream& os) { write_vmd_bench_csv(os, vmd_rows); });
            write_out(cfg, "bench_forward.csv", [&](std::ostream& os) { write_forward_bench_csv(os, fwd_rows); });
            return 0;
        }

        Pipeline p(cfg, log_stream(common));

        if (decompose_cmd->parsed()) {
            const auto& modes = p.modes();
            write_out(cfg, "modes_summary.csv", [&](std::ostream& os) { write_modes_summary(os, p.series(), modes); });
        } else if (select_cmd->parsed()) {
            const auto& sel = p.selection();
            write_out(cfg, "k_selection.csv", [&](std::ostream& os) { write_k_selection_csv(os, sel); });
            std::cout << "K = " << sel.k << (sel.threshold_met ? "" : " (threshold not met; using k_max)") << '\n';
        } else if (graph_cmd->parsed()) {
            const auto& g = p.graph();
            write_out(cfg, "adjacency.csv", [&](std::ostream& os) { write_dense_csv(os, g.node_ids, g.adjacency); });
            std::cout << g.size() << " nodes, " << g.edge_count() << " edges, lambda_max "
                      << csv::format(p.spectral().lambda_max) << '\n';
        } else if (train_cmd->parsed()) {
            const auto& tm = p.trained();
            write_out(cfg, "history.csv", [&](std::ostream& os) { write_history_csv(os, tm.history); });
            std::cout << "best epoch " << tm.best_epoch << " of " << tm.history.size() - 1 << '\n';
            write_metrics(p);
        } else if (eval_cmd->parsed()) {
            write_metrics(p);
            write_forecasts(p);
        } else if (ablate_cmd->parsed()) {
            const auto deltas = ablate_all(p, ablate_modes_opt);
            write_out(cfg, "ablation.csv", [&](std::ostream& os) { write_ablation_csv(os, deltas); });
        } else if (sweep_cmd->parsed()) {
            std::vector<VmdConfig> grid;
            for (int k : or_default(sweep_k, cfg.vmd.num_modes))
                for (double a : or_default(sweep_alpha, cfg.vmd.alpha))
                    for (double t : or_default(sweep_tau, cfg.vmd.tau))
                        for (double e : or_default(sweep_eps, cfg.vmd.epsilon))
                            for (const auto& init : or_default(sweep_init, to_string(cfg.vmd.omega_init))) {
                                VmdConfig v = cfg.vmd;
                                v.num_modes = k;
                                v.alpha = a;
                                v.tau = t;
                                v.epsilon = e;
                                v.omega_init = omega_init_from_string(init);
                                grid.push_back(v);
                            }
            Experiment exp;
            exp.variant = cfg.variant;
            exp.window = cfg.model.window;
            exp.horizon = cfg.model.horizon;
            exp.split = cfg.split;
            exp.model = cfg.model;
            exp.train = cfg.train;
            exp.mask_threshold = cfg.mask_threshold;
            const auto rows = sweep(grid, p.series(), p.spectral(), exp, cfg.train.threads);
            write_out(cfg, "sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, rows, cfg.model.horizon); });
            int failed = 0;
            for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
            std::cout << rows.size() << " configurations, " << failed << " failed\n";
        } else if (export_cmd->parsed()) {
            const auto& tm = p.trained_cached();
            write_out(cfg, "k_selection.csv", [&](std::ostream& os) { write_k_selection_csv(os, p.selection()); });
            write_out(cfg, "history.csv", [&](std::ostream& os) { write_history_csv(os, tm.history); });
            const auto deltas = ablate_all(p, {});
            write_out(cfg, "ablation.csv", [&](std::ostream& os) { write_ablation_csv(os, deltas); });
            write_forecasts(p);
        }
        return 0;
    } catch (const ParseError& e) {
        print_error(e.kind(), e.what(), e.lines());
    } catch (const Error& e) {
        print_error(e.kind(), e.what());
    } catch (const std::exception& e) {
        print_error("internal", e.what());
    }
    return kExitFailure;
}
