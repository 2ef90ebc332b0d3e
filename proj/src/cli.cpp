#include "dfscsn/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dfscsn/io.hpp"
#include "dfscsn/stats.hpp"

namespace dfscsn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;

    RunConfig resolve() const {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (seed_given) cfg.seed = seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        return cfg;
    }
};

void write_long_y(const fs::path& path, const Matrix& y, int t_offset) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "t,k,y\n";
    for (int t = 0; t < y.rows(); ++t)
        for (int k = 0; k < y.cols(); ++k)
            out << (t - t_offset) << "," << k << "," << format_double(y(t, k)) << "\n";
}

void write_long_x(const fs::path& path, const std::vector<Matrix>& X, int begin, int end) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    const int r = static_cast<int>(X.at(begin).cols());
    out << "t,k";
    for (int c = 0; c < r; ++c) out << ",f" << (c + 1);
    out << "\n";
    for (int t = begin; t < end; ++t)
        for (int k = 0; k < X[t].rows(); ++k) {
            out << (t - begin) << "," << k;
            for (int c = 0; c < r; ++c) out << "," << format_double(X[t](k, c));
            out << "\n";
        }
}

void write_edge_list(const fs::path& path, const AdjacencyGraph& graph) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "i,j\n";
    for (int i = 0; i < graph.K; ++i)
        for (int j = i + 1; j < graph.K; ++j)
            if (graph.W(i, j) != 0.0) out << i << "," << j << "\n";
}

int run_simulate(const GlobalOpts& opts) {
    RunConfig cfg = opts.resolve();
    const ModelParams truth = cfg.truth.params();
    const int r = static_cast<int>(truth.beta.size());
    const int total_T = cfg.truth.T + cfg.t_future;

    const AdjacencyGraph graph = build_grid_graph(cfg.truth.grid_rows, cfg.truth.grid_cols);
    auto cache = std::make_shared<const SpatialEigenCache>(eigendecompose_laplacian(graph));
    const SpatialOperator op(cache, truth.tau2, truth.rhoS);

    RngStream rng(cfg.seed, 0xDA7A);
    std::vector<Matrix> X(total_T);
    for (int t = 0; t < total_T; ++t) {
        Matrix xt(graph.K, r);
        for (int k = 0; k < graph.K; ++k) {
            xt(k, 0) = 1.0;
            for (int c = 1; c < r; ++c) xt(k, c) = rng.normal();
        }
        X[t] = std::move(xt);
    }
    const SimulationResult sim = simulate(truth, X, op, total_T, rng);

    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory " + dir.string());

    write_long_y(dir / "y.csv", sim.y.topRows(cfg.truth.T), 0);
    write_long_x(dir / "x.csv", X, 0, cfg.truth.T);
    write_long_y(dir / "y_future.csv", sim.y.bottomRows(cfg.t_future), 0);
    write_long_x(dir / "x_future.csv", X, cfg.truth.T, total_T);
    write_edge_list(dir / "w.csv", graph);
    {
        json truth_json = {{"beta", cfg.truth.beta},   {"sigma2", cfg.truth.sigma2},
                           {"tau2", cfg.truth.tau2},   {"rho_s", cfg.truth.rhoS},
                           {"rho_t", cfg.truth.rhoT},  {"lambda", cfg.truth.lambda},
                           {"T", cfg.truth.T},         {"t_future", cfg.t_future},
                           {"grid_rows", cfg.truth.grid_rows},
                           {"grid_cols", cfg.truth.grid_cols},
                           {"seed", cfg.seed}};
        std::ofstream out(dir / "truth.json");
        if (!out) throw ValidationError("cannot write truth.json");
        out << truth_json.dump(2) << "\n";
    }
    std::cout << "simulated " << cfg.truth.T << "+" << cfg.t_future << " periods on "
              << graph.K << " areas -> " << dir.string() << "\n";
    return 0;
}

int run_fit(const GlobalOpts& opts) {
    RunConfig cfg = opts.resolve();
    cfg.validate();
    const PanelData data = load_panel(cfg.y_path, cfg.x_path, cfg.w_path);
    auto cache = std::make_shared<const SpatialEigenCache>(eigendecompose_laplacian(data.graph));
    const std::vector<PosteriorDraws> chains =
        run_chains(data, cache, cfg.priors, cfg.chain_config(), cfg.chains);
    const fs::path manifest = write_outputs(chains, cfg.write_theta, std::nullopt, cfg.out_dir);
    std::cout << "fit " << to_string(chains.front().model_kind) << ": " << cfg.chains
              << " chain(s), " << chains.front().size() << " kept draws each -> "
              << manifest.parent_path().string() << "\n";
    return 0;
}

int run_predict(const GlobalOpts& opts, const std::string& draws_path,
                const std::string& x_future_path) {
    RunConfig cfg = opts.resolve();
    const fs::path draws_file =
        draws_path.empty() ? fs::path(cfg.out_dir) / "draws.csv" : fs::path(draws_path);
    const PosteriorDraws draws = load_draws(draws_file);
    if (draws.theta.empty())
        throw ValidationError(
            "predict needs theta columns in draws.csv; re-run fit with write_theta=true");
    const std::string x_path = x_future_path.empty() ? cfg.x_path : x_future_path;
    const std::vector<Matrix> X_future = load_future_x(x_path, cfg.t_future, draws.K);
    for (const Matrix& x : X_future)
        if (x.cols() != draws.r)
            throw ValidationError("future features have wrong column count");
    const Matrix W = load_adjacency(cfg.w_path, draws.K);
    auto cache = std::make_shared<const SpatialEigenCache>(
        eigendecompose_laplacian(AdjacencyGraph::from_dense(W)));

    const PredictiveDraws pred = predict_future(draws, X_future, cache, cfg.seed);
    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path out_path = dir / "predictions.csv";
    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot write " + out_path.string());
    out << "draw";
    for (int t = 0; t < pred.T_future; ++t)
        for (int k = 0; k < pred.K; ++k) out << ",yhat_" << t << "_" << k;
    out << "\n";
    for (int i = 0; i < pred.yhat.rows(); ++i) {
        out << i;
        for (int c = 0; c < pred.yhat.cols(); ++c)
            out << "," << format_double(pred.yhat(i, c));
        out << "\n";
    }
    std::cout << "predicted " << pred.T_future << " periods for " << pred.yhat.rows()
              << " draws -> " << out_path.string() << "\n";
    return 0;
}

int run_evaluate(const GlobalOpts& opts, const std::string& draws_path,
                 const std::string& y_future_path, const std::string& x_future_path,
                 bool use_truth) {
    RunConfig cfg = opts.resolve();
    const PanelData data = load_panel(cfg.y_path, cfg.x_path, cfg.w_path);
    const fs::path draws_file =
        draws_path.empty() ? fs::path(cfg.out_dir) / "draws.csv" : fs::path(draws_path);
    PosteriorDraws draws = load_draws(draws_file);
    if (draws.theta.empty())
        throw ValidationError(
            "evaluate needs theta columns in draws.csv; re-run fit with write_theta=true");
    if (draws.T != data.T || draws.K != data.K)
        throw ValidationError("draws and training data disagree on (T, K)");

    const Matrix y_future = load_future_y(y_future_path, cfg.t_future, data.K);
    const std::vector<Matrix> X_future = load_future_x(x_future_path, cfg.t_future, data.K);
    auto cache = std::make_shared<const SpatialEigenCache>(eigendecompose_laplacian(data.graph));

    json metrics = json::object();
    metrics["lmpl"] = lmpl(draws, data);
    metrics["flmpl"] = flmpl(draws, y_future, X_future, cache, cfg.flmpl_inner_mc, cfg.seed + 1);
    const PredictiveDraws pred = predict_future(draws, X_future, cache, cfg.seed + 2);
    Vector y_flat(y_future.size());
    for (int t = 0; t < y_future.rows(); ++t)
        y_flat.segment(t * y_future.cols(), y_future.cols()) = y_future.row(t).transpose();
    metrics["fes"] = energy_score(y_flat, pred.yhat);
    metrics["frmse"] = frmse(y_flat, pred.yhat);
    if (use_truth) {
        const ModelParams truth = cfg.truth.params();
        for (const auto& [name, value] : parameter_rmse(draws, truth))
            metrics["rmse_" + name] = value;
    }

    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    {
        std::ofstream out(dir / "metrics.json");
        if (!out) throw ValidationError("cannot write metrics.json");
        out << metrics.dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "metrics.csv");
        if (!out) throw ValidationError("cannot write metrics.csv");
        bool first = true;
        for (auto it = metrics.begin(); it != metrics.end(); ++it) {
            out << (first ? "" : ",") << it.key();
            first = false;
        }
        out << "\n";
        first = true;
        for (auto it = metrics.begin(); it != metrics.end(); ++it) {
            out << (first ? "" : ",") << format_double(it.value().get<double>());
            first = false;
        }
        out << "\n";
    }
    std::cout << metrics.dump(2) << "\n";
    return 0;
}

int run_sim_study(const GlobalOpts& opts, const std::vector<int>& case_filter,
                  const std::vector<double>& rhos_filter, int n_seeds) {
    RunConfig cfg = opts.resolve();
    std::vector<SimStudyCase> cases;
    for (const SimStudyCase& sc : enumerate_cases()) {
        if (!case_filter.empty() &&
            std::find(case_filter.begin(), case_filter.end(), sc.case_id) == case_filter.end())
            continue;
        if (!rhos_filter.empty() &&
            std::find_if(rhos_filter.begin(), rhos_filter.end(), [&](double r) {
                return std::abs(r - sc.rhoS) < 1e-12;
            }) == rhos_filter.end())
            continue;
        cases.push_back(sc);
    }
    if (cases.empty()) throw ValidationError("sim-study: case filter selected nothing");
    std::vector<std::uint64_t> seeds(n_seeds);
    for (int i = 0; i < n_seeds; ++i) seeds[i] = cfg.seed + static_cast<std::uint64_t>(i);

    const std::vector<ReplicationResult> results =
        run_sweep(cases, seeds, cfg.chain_config(), cfg.priors, cfg.flmpl_inner_mc);

    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_simstudy_results(results, dir / "simstudy_results.csv");
    write_simstudy_summary(aggregate(results), dir / "simstudy_summary.json");
    int failures = 0;
    for (const auto& res : results)
        if (!res.metrics) ++failures;
    std::cout << "sim-study: " << results.size() << " result rows (" << failures
              << " failed) -> " << dir.string() << "\n";
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Dynamic FS-CSN spatio-temporal model: simulation, Gibbs fitting, prediction"};
    app.require_subcommand(0, 1);

    GlobalOpts opts;
    std::string emit_config_path;
    app.add_option("--config", opts.config_path, "JSON run configuration");
    auto* seed_opt = app.add_option("--seed", opts.seed, "override the config seed");
    app.add_option("--threads", opts.threads, "worker threads (0 = library default)");
    app.add_option("--out", opts.out_dir, "override the output directory");
    app.add_option("--emit-default-config", emit_config_path,
                   "write the default configuration to PATH and exit");

    auto* sim = app.add_subcommand("simulate", "simulate a synthetic dataset from the truth block");
    auto* fit = app.add_subcommand("fit", "run the Gibbs sampler and write draws + summaries");
    auto* predict = app.add_subcommand("predict", "forward-simulate future periods from saved draws");
    auto* evaluate = app.add_subcommand("evaluate", "compute fit/forecast metrics on held-out data");
    auto* study = app.add_subcommand("sim-study", "paired D-FS-CSN vs D-CAR simulation sweep");

    std::string draws_path, x_future_path, y_future_path;
    predict->add_option("--draws", draws_path, "draws.csv from a fit (needs theta columns)");
    predict->add_option("--x-future", x_future_path, "future features CSV (t,k,f1..fr)");
    evaluate->add_option("--draws", draws_path, "draws.csv from a fit (needs theta columns)");
    evaluate->add_option("--y-future", y_future_path, "held-out observations CSV (t,k,y)")
        ->required();
    evaluate->add_option("--x-future", x_future_path, "future features CSV (t,k,f1..fr)")
        ->required();
    bool use_truth = false;
    evaluate->add_flag("--use-truth", use_truth, "also report parameter RMSE vs the config truth");

    std::vector<int> case_filter;
    std::vector<double> rhos_filter;
    int n_seeds = 10;
    study->add_option("--cases", case_filter, "restrict to these case ids (1-4)");
    study->add_option("--rhos", rhos_filter, "restrict to these rhoS values");
    study->add_option("--seeds", n_seeds, "number of replication seeds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }
    opts.seed_given = seed_opt->count() > 0;

#ifdef _OPENMP
    if (opts.threads > 0) omp_set_num_threads(opts.threads);
#endif

    try {
        if (!emit_config_path.empty()) {
            write_default_config(emit_config_path);
            std::cout << "wrote default config to " << emit_config_path << "\n";
            return 0;
        }
        if (sim->parsed()) return run_simulate(opts);
        if (fit->parsed()) return run_fit(opts);
        if (predict->parsed()) return run_predict(opts, draws_path, x_future_path);
        if (evaluate->parsed())
            return run_evaluate(opts, draws_path, y_future_path, x_future_path, use_truth);
        if (study->parsed()) return run_sim_study(opts, case_filter, rhos_filter, n_seeds);
        std::cerr << app.help();
        return 2;
    } catch (const ValidationError& err) {
        std::cerr << "data validation error: " << err.what() << "\n";
        return 3;
    } catch (const NumericalError& err) {
        std::cerr << "numerical failure: " << err.what() << "\n";
        return 4;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}

}  // namespace dfscsn
