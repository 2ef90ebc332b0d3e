#pragma once

#include <filesystem>
#include <optional>

#include "dfscsn/harness.hpp"

namespace dfscsn {

/// Truth block used by the `simulate` subcommand and the harness presets.
struct TruthConfig {
    std::vector<double> beta{1.0, 0.5};
    double sigma2 = 0.01;
    double tau2 = 1.0;
    double rhoS = 0.5;
    double rhoT = 0.5;
    double lambda = 2.5;
    int T = 10;
    int grid_rows = 5;
    int grid_cols = 5;

    ModelParams params() const;
};

/// Everything a run needs; serialized as a single JSON document. Prior
/// defaults match the simulation-study hyperparameters exactly.
struct RunConfig {
    std::string model_kind = "dfscsn";
    Priors priors;
    int iterations = 2000;
    int burnin = 500;
    int thin = 1;
    int chains = 1;
    std::uint64_t seed = 0;
    MhStepSizes steps;
    bool adapt = true;
    bool write_theta = false;
    std::string y_path = "y.csv";
    std::string x_path = "x.csv";
    std::string w_path = "w.csv";
    int t_future = 2;
    int flmpl_inner_mc = 100;
    std::string out_dir = "out";
    TruthConfig truth;

    ChainConfig chain_config() const;
    void validate() const;
};

std::string config_to_json(const RunConfig& config);
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
void write_default_config(const std::filesystem::path& path);

/// Long-format ingestion: y as `t,k,y`, features as `t,k,f1..fr`, adjacency
/// either as an `i,j` edge list or a dense K x K CSV. Every (t, k) cell must
/// appear exactly once.
PanelData load_panel(const std::filesystem::path& y_path, const std::filesystem::path& x_path,
                     const std::filesystem::path& w_path);

/// Future-horizon observation / feature files in the same long format; t
/// labels are mapped in sorted order onto 0..T_future-1.
Matrix load_future_y(const std::filesystem::path& path, int t_future, int K);
std::vector<Matrix> load_future_x(const std::filesystem::path& path, int t_future, int K);

Matrix load_adjacency(const std::filesystem::path& path, std::optional<int> expected_K);

/// Serialize draws (chain-major) to `draws.csv` with the fixed column order
/// iteration, beta_0.., sigma2, tau2, rhoS, rhoT, lambda [, theta_t_k...];
/// a `chain` column is prepended only for multi-chain runs. Also writes
/// `summary.json` (p05/p50/p95 per parameter; no lambda entry for D-CAR),
/// optionally `metrics.json`, and a `manifest.json` of FNV-1a content
/// hashes. Throws before creating anything if there are no draws.
std::filesystem::path write_outputs(const std::vector<PosteriorDraws>& chains, bool write_theta,
                                    const std::optional<std::string>& metrics_json,
                                    const std::filesystem::path& out_dir);

/// Parse draws.csv back (theta columns required only by prediction).
PosteriorDraws load_draws(const std::filesystem::path& path);

std::uint64_t fnv1a_file(const std::filesystem::path& path);

/// Fixed-format (%.17g) number printing used for every CSV we emit.
std::string format_double(double v);

void write_simstudy_results(const std::vector<ReplicationResult>& results,
                            const std::filesystem::path& path);
void write_simstudy_summary(const std::vector<SummaryRow>& rows,
                            const std::filesystem::path& path);

}  // namespace dfscsn
