#pragma once

#include <optional>

#include "dfscsn/metrics.hpp"

namespace dfscsn {

/// One cell of the simulation-study grid: four (sigma2, lambda) cases, each
/// crossed with three spatial-correlation levels. The remaining truths are
/// fixed: beta = (1.0, 0.5), tau2 = 1, rhoT = 0.5, T = 10 on a 5x5 grid,
/// two held-out future periods.
struct SimStudyCase {
    int case_id = 1;
    double sigma2 = 0.01;
    double lambda = 2.5;
    double rhoS = 0.25;
    double beta0 = 1.0;
    double beta1 = 0.5;
    double tau2 = 1.0;
    double rhoT = 0.5;
    int T = 10;
    int grid_rows = 5;
    int grid_cols = 5;
    int T_future = 2;

    ModelParams truth() const;
};

/// The 12-row case grid (4 cases x 3 rhoS values).
std::vector<SimStudyCase> enumerate_cases();

struct MetricBundle {
    std::map<std::string, double> rmse;
    double lmpl = 0.0;
    double flmpl = 0.0;
    double fes = 0.0;
    double frmse = 0.0;
    double min_ess = 0.0;
    double wall_seconds = 0.0;
};

struct ReplicationResult {
    int case_id = 0;
    double rhoS = 0.0;
    std::uint64_t seed = 0;
    std::string model;
    std::uint64_t dataset_hash = 0;
    std::optional<MetricBundle> metrics;  // empty on chain failure
    std::string error;
};

/// Simulate one dataset of length T + T_future from the D-FS-CSN truth, fit
/// both models on the first T periods, evaluate every metric on the held-out
/// tail. Both fits consume byte-identical data; chain failures are recorded
/// in the result instead of thrown.
std::pair<ReplicationResult, ReplicationResult> run_replication(const SimStudyCase& study_case,
                                                                std::uint64_t seed,
                                                                const ChainConfig& base_config,
                                                                const Priors& priors,
                                                                int flmpl_inner_mc = 100);

/// Replications scheduled on the OpenMP worker pool; output order is
/// deterministic, sorted by (case, rhoS, seed, model).
std::vector<ReplicationResult> run_sweep(const std::vector<SimStudyCase>& cases,
                                         const std::vector<std::uint64_t>& seeds,
                                         const ChainConfig& base_config, const Priors& priors,
                                         int flmpl_inner_mc = 100);

/// Paired-difference summary row (D-FS-CSN minus D-CAR) for one metric.
struct SummaryRow {
    int case_id = 0;
    double rhoS = 0.0;
    std::string metric;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    int n = 0;
};

std::vector<SummaryRow> aggregate(const std::vector<ReplicationResult>& results);

/// FNV-1a over the raw bytes of y, X and W; identifies the dataset a pair of
/// fits consumed.
std::uint64_t dataset_hash(const Matrix& y, const std::vector<Matrix>& X, const Matrix& W);

}  // namespace dfscsn
