// Timing harness: (a) the theta+alpha block at K = 25 across T, which should
// scale linearly in T; (b) multi-chain and sweep throughput, serial vs the
// OpenMP worker pool, checking that results are identical either way.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dfscsn/harness.hpp"
#include "dfscsn/io.hpp"

using namespace dfscsn;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

PanelData make_panel(int T, int K_rows, int K_cols, double lambda, std::uint64_t seed) {
    SimStudyCase sc;
    sc.T = T;
    sc.grid_rows = K_rows;
    sc.grid_cols = K_cols;
    sc.lambda = lambda;
    const ModelParams truth = sc.truth();
    const AdjacencyGraph graph = build_grid_graph(K_rows, K_cols);
    auto cache = std::make_shared<const SpatialEigenCache>(eigendecompose_laplacian(graph));
    RngStream rng(seed, 0);
    std::vector<Matrix> X(T);
    for (int t = 0; t < T; ++t) {
        Matrix xt(graph.K, 2);
        for (int k = 0; k < graph.K; ++k) {
            xt(k, 0) = 1.0;
            xt(k, 1) = rng.normal();
        }
        X[t] = std::move(xt);
    }
    const SpatialOperator op(cache, truth.tau2, truth.rhoS);
    const SimulationResult sim = simulate(truth, X, op, T, rng);
    PanelData data;
    data.T = T;
    data.K = graph.K;
    data.r = 2;
    data.y = sim.y;
    data.X = std::move(X);
    data.graph = graph;
    return data;
}

double time_theta_alpha_block(int T, int reps) {
    const PanelData data = make_panel(T, 5, 5, 2.5, 99);
    auto cache = std::make_shared<const SpatialEigenCache>(eigendecompose_laplacian(data.graph));
    ModelParams params = SimStudyCase{}.truth();
    const SpatialOperator op(cache, params.tau2, params.rhoS);
    RngStream rng(7, 0);
    Matrix alpha = Matrix::Constant(T, data.K, params.skew.b);

    // warm up once, then time
    Matrix theta = ffbs_theta(data.y, data.X, alpha, params, op, rng);
    alpha = sample_alpha(theta, params, op, rng);
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) {
        theta = ffbs_theta(data.y, data.X, alpha, params, op, rng);
        alpha = sample_alpha(theta, params, op, rng);
    }
    return seconds_since(t0) / reps;
}

void bench_scaling() {
    std::printf("== theta+alpha block scaling (K = 25) ==\n");
    const int Ts[3] = {10, 20, 40};
    double secs[3];
    for (int i = 0; i < 3; ++i) {
        secs[i] = time_theta_alpha_block(Ts[i], 30);
        std::printf("  T = %2d: %8.3f ms per sweep\n", Ts[i], 1e3 * secs[i]);
    }
    const double exponent = std::log(secs[2] / secs[0]) / std::log(4.0);
    std::printf("  growth exponent t(40)/t(10): %.3f (linear would be 1.0)\n", exponent);
}

void bench_parallel() {
    std::printf("== worker-pool throughput: serial vs OpenMP ==\n");
    const PanelData data = make_panel(10, 5, 5, 2.5, 31);
    auto cache = std::make_shared<const SpatialEigenCache>(eigendecompose_laplacian(data.graph));
    Priors priors;
    ChainConfig cfg;
    cfg.iterations = 400;
    cfg.burnin = 100;
    cfg.seed = 5;
    const int n_chains = 4;

#ifdef _OPENMP
    const int hw = omp_get_max_threads();
#else
    const int hw = 1;
#endif
    double serial_s = 0.0;
    std::vector<PosteriorDraws> serial, parallel;
    {
#ifdef _OPENMP
        omp_set_num_threads(1);
#endif
        const auto t0 = Clock::now();
        serial = run_chains(data, cache, priors, cfg, n_chains);
        serial_s = seconds_since(t0);
        std::printf("  %d chains, 1 thread : %7.2f s\n", n_chains, serial_s);
    }
    {
#ifdef _OPENMP
        omp_set_num_threads(hw);
#endif
        const auto t0 = Clock::now();
        parallel = run_chains(data, cache, priors, cfg, n_chains);
        const double par_s = seconds_since(t0);
        std::printf("  %d chains, %d thread(s): %7.2f s  (speedup %.2fx)\n", n_chains, hw,
                    par_s, serial_s / par_s);
    }
    bool identical = true;
    for (int c = 0; c < n_chains; ++c) {
        if ((serial[c].beta - parallel[c].beta).cwiseAbs().maxCoeff() != 0.0 ||
            (serial[c].lambda - parallel[c].lambda).cwiseAbs().maxCoeff() != 0.0)
            identical = false;
    }
    std::printf("  serial and parallel draws identical: %s\n", identical ? "yes" : "NO");
}

}  // namespace

int main() {
    bench_scaling();
    bench_parallel();
    return 0;
}
