#include "dfscsn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>

#include "dfscsn/stats.hpp"

namespace dfscsn {

ModelParams SimStudyCase::truth() const {
    ModelParams p;
    p.beta = Vector(2);
    p.beta << beta0, beta1;
    p.sigma2 = sigma2;
    p.tau2 = tau2;
    p.rhoS = rhoS;
    p.rhoT = rhoT;
    p.skew = skew_constants(lambda);
    return p;
}

std::vector<SimStudyCase> enumerate_cases() {
    // case -> (sigma2, lambda); each crossed with rhoS in {0.25, 0.5, 0.75}
    const double sigma2s[4] = {0.01, 0.25, 0.01, 0.25};
    const double lambdas[4] = {2.5, 2.5, 7.0, 7.0};
    std::vector<SimStudyCase> cases;
    cases.reserve(12);
    for (int c = 0; c < 4; ++c) {
        for (double rho : {0.25, 0.5, 0.75}) {
            SimStudyCase sc;
            sc.case_id = c + 1;
            sc.sigma2 = sigma2s[c];
            sc.lambda = lambdas[c];
            sc.rhoS = rho;
            cases.push_back(sc);
        }
    }
    return cases;
}

std::uint64_t dataset_hash(const Matrix& y, const std::vector<Matrix>& X, const Matrix& W) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const double* data, std::size_t n) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n * sizeof(double); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    };
    mix(y.data(), static_cast<std::size_t>(y.size()));
    for (const Matrix& x : X) mix(x.data(), static_cast<std::size_t>(x.size()));
    mix(W.data(), static_cast<std::size_t>(W.size()));
    return h;
}

namespace {

MetricBundle evaluate_fit(const PosteriorDraws& draws, const PanelData& train,
                          const Matrix& y_future, const std::vector<Matrix>& X_future,
                          const std::shared_ptr<const SpatialEigenCache>& cache,
                          const ModelParams& truth, std::uint64_t seed, int inner_mc,
                          double wall_seconds) {
    MetricBundle m;
    m.rmse = parameter_rmse(draws, truth);
    m.lmpl = lmpl(draws, train);
    m.flmpl = flmpl(draws, y_future, X_future, cache, inner_mc, seed + 1);
    const PredictiveDraws pred = predict_future(draws, X_future, cache, seed + 2);
    Vector y_flat(y_future.size());
    for (int t = 0; t < y_future.rows(); ++t)
        y_flat.segment(t * y_future.cols(), y_future.cols()) = y_future.row(t).transpose();
    m.fes = energy_score(y_flat, pred.yhat);
    m.frmse = frmse(y_flat, pred.yhat);

    double min_ess = std::numeric_limits<double>::infinity();
    auto track = [&min_ess](const Vector& trace) {
        std::vector<double> v(trace.data(), trace.data() + trace.size());
        min_ess = std::min(min_ess, effective_sample_size(v));
    };
    for (int j = 0; j < draws.r; ++j) track(draws.beta.col(j));
    track(draws.sigma2);
    track(draws.tau2);
    track(draws.rhoS);
    track(draws.rhoT);
    if (draws.model_kind == ModelKind::DFsCsn) track(draws.lambda);
    m.min_ess = min_ess;
    m.wall_seconds = wall_seconds;
    return m;
}

}  // namespace

std::pair<ReplicationResult, ReplicationResult> run_replication(const SimStudyCase& study_case,
                                                                std::uint64_t seed,
                                                                const ChainConfig& base_config,
                                                                const Priors& priors,
                                                                int flmpl_inner_mc) {
    const ModelParams truth = study_case.truth();
    const AdjacencyGraph graph = build_grid_graph(study_case.grid_rows, study_case.grid_cols);
    auto cache = std::make_shared<const SpatialEigenCache>(eigendecompose_laplacian(graph));
    const int K = graph.K;
    const int total_T = study_case.T + study_case.T_future;

    // intercept + one standard-normal covariate, drawn once per replication
    RngStream data_rng(seed, 0xDA7A);
    std::vector<Matrix> X_all(total_T);
    for (int t = 0; t < total_T; ++t) {
        Matrix x(K, 2);
        for (int k = 0; k < K; ++k) {
            x(k, 0) = 1.0;
            x(k, 1) = data_rng.normal();
        }
        X_all[t] = std::move(x);
    }
    const SpatialOperator op(cache, truth.tau2, truth.rhoS);
    const SimulationResult sim = simulate(truth, X_all, op, total_T, data_rng);

    PanelData train;
    train.T = study_case.T;
    train.K = K;
    train.r = 2;
    train.y = sim.y.topRows(study_case.T);
    train.X.assign(X_all.begin(), X_all.begin() + study_case.T);
    train.graph = graph;

    const Matrix y_future = sim.y.bottomRows(study_case.T_future);
    const std::vector<Matrix> X_future(X_all.begin() + study_case.T, X_all.end());
    const std::uint64_t data_id = dataset_hash(train.y, train.X, graph.W);

    auto fit_one = [&](ModelKind kind) {
        ReplicationResult res;
        res.case_id = study_case.case_id;
        res.rhoS = study_case.rhoS;
        res.seed = seed;
        res.model = to_string(kind);
        res.dataset_hash = data_id;
        ChainConfig cfg = base_config;
        cfg.model_kind = kind;
        cfg.seed = seed;
        cfg.stream = (kind == ModelKind::DFsCsn) ? 1 : 2;
        try {
            const auto t0 = std::chrono::steady_clock::now();
            const PosteriorDraws draws = run_chain(train, cache, priors, cfg);
            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            res.metrics = evaluate_fit(draws, train, y_future, X_future, cache, truth,
                                       seed * 1000003ULL, flmpl_inner_mc, wall);
        } catch (const std::exception& err) {
            res.error = err.what();
        }
        return res;
    };
    return {fit_one(ModelKind::DFsCsn), fit_one(ModelKind::DCar)};
}

std::vector<ReplicationResult> run_sweep(const std::vector<SimStudyCase>& cases,
                                         const std::vector<std::uint64_t>& seeds,
                                         const ChainConfig& base_config, const Priors& priors,
                                         int flmpl_inner_mc) {
    const int n_jobs = static_cast<int>(cases.size() * seeds.size());
    std::vector<std::pair<ReplicationResult, ReplicationResult>> pairs(n_jobs);

#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < n_jobs; ++j) {
        const auto& study_case = cases[j / seeds.size()];
        const std::uint64_t seed = seeds[j % seeds.size()];
        pairs[j] = run_replication(study_case, seed, base_config, priors, flmpl_inner_mc);
    }

    std::vector<ReplicationResult> out;
    out.reserve(2 * n_jobs);
    for (auto& [fs, dc] : pairs) {
        out.push_back(std::move(fs));
        out.push_back(std::move(dc));
    }
    std::sort(out.begin(), out.end(), [](const ReplicationResult& a, const ReplicationResult& b) {
        return std::tie(a.case_id, a.rhoS, a.seed, a.model) <
               std::tie(b.case_id, b.rhoS, b.seed, b.model);
    });
    return out;
}

std::vector<SummaryRow> aggregate(const std::vector<ReplicationResult>& results) {
    if (results.empty()) throw ValidationError("aggregate: no results");

    // pair up by (case, rhoS, seed)
    struct Key {
        int case_id;
        double rhoS;
        std::uint64_t seed;
        bool operator<(const Key& o) const {
            return std::tie(case_id, rhoS, seed) < std::tie(o.case_id, o.rhoS, o.seed);
        }
    };
    std::map<Key, std::pair<const ReplicationResult*, const ReplicationResult*>> paired;
    for (const auto& res : results) {
        auto& slot = paired[{res.case_id, res.rhoS, res.seed}];
        (res.model == "dfscsn" ? slot.first : slot.second) = &res;
    }

    // per (case, rhoS, metric): paired differences across seeds
    std::map<std::tuple<int, double, std::string>, std::vector<double>> diffs;
    for (const auto& [key, pr] : paired) {
        if (!pr.first || !pr.second) continue;
        if (!pr.first->metrics || !pr.second->metrics) continue;
        const MetricBundle& a = *pr.first->metrics;
        const MetricBundle& b = *pr.second->metrics;
        auto add = [&](const std::string& name, double da, double db) {
            diffs[{key.case_id, key.rhoS, name}].push_back(da - db);
        };
        add("lmpl", a.lmpl, b.lmpl);
        add("flmpl", a.flmpl, b.flmpl);
        add("fes", a.fes, b.fes);
        add("frmse", a.frmse, b.frmse);
        for (const auto& [pname, value] : a.rmse) {
            auto it = b.rmse.find(pname);
            if (it != b.rmse.end()) add("rmse_" + pname, value, it->second);
        }
    }

    std::vector<SummaryRow> rows;
    rows.reserve(diffs.size());
    for (const auto& [key, values] : diffs) {
        SummaryRow row;
        row.case_id = std::get<0>(key);
        row.rhoS = std::get<1>(key);
        row.metric = std::get<2>(key);
        row.median = quantile(values, 0.5);
        row.q1 = quantile(values, 0.25);
        row.q3 = quantile(values, 0.75);
        row.n = static_cast<int>(values.size());
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace dfscsn
