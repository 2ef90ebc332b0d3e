#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dfscsn/cli.hpp"
#include "dfscsn/io.hpp"

using namespace dfscsn;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dfscsn_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> full = {"dfscsn"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : full) argv.push_back(s.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("default config carries the documented prior hyperparameters") {
    const std::string text = config_to_json(RunConfig{});
    CHECK(text.find("\"sigma2_beta\": 100.0") != std::string::npos);
    CHECK(text.find("\"a_sigma2\": 1.0") != std::string::npos);
    CHECK(text.find("\"b_sigma2\": 0.01") != std::string::npos);
    CHECK(text.find("\"a_tau2\": 1.0") != std::string::npos);
    CHECK(text.find("\"b_tau2\": 0.01") != std::string::npos);
    CHECK(text.find("\"sigma2_lambda\": 9.0") != std::string::npos);

    const RunConfig parsed = config_from_json(text);
    CHECK(parsed.priors.sigma2_beta == 100.0);
    CHECK(parsed.priors.b_sigma2 == 0.01);
    CHECK(parsed.priors.sigma2_lambda == 9.0);
    CHECK(parsed.model_kind == "dfscsn");
    CHECK(parsed.t_future == 2);
}

TEST_CASE("panel loading: round trip, duplicates, adjacency forms") {
    const fs::path dir = fresh_dir("panel");
    write_file(dir / "y.csv",
               "t,k,y\n0,0,1.5\n0,1,-0.25\n1,0,2.0\n1,1,0.125\n2,0,-1.0\n2,1,3.5\n");
    write_file(dir / "x.csv",
               "t,k,f1,f2\n0,0,1,0.5\n0,1,1,-0.5\n1,0,1,0.25\n1,1,1,0.75\n2,0,1,0\n2,1,1,1\n");
    write_file(dir / "w.csv", "i,j\n0,1\n");

    const PanelData data = load_panel(dir / "y.csv", dir / "x.csv", dir / "w.csv");
    CHECK(data.T == 3);
    CHECK(data.K == 2);
    CHECK(data.r == 2);
    CHECK(data.y(0, 0) == 1.5);
    CHECK(data.y(2, 1) == 3.5);
    CHECK(data.X[1](1, 1) == 0.75);
    CHECK(data.graph.W(0, 1) == 1.0);
    CHECK(data.graph.W(1, 0) == 1.0);

    // duplicate cell names the offender
    write_file(dir / "y_dup.csv", "t,k,y\n0,0,1\n0,0,2\n0,1,3\n");
    CHECK_THROWS_WITH_AS(load_panel(dir / "y_dup.csv", dir / "x.csv", dir / "w.csv"),
                         doctest::Contains("duplicate cell (t=0, k=0)"), ValidationError);

    // missing cell
    write_file(dir / "y_gap.csv", "t,k,y\n0,0,1\n1,1,2\n");
    CHECK_THROWS_WITH_AS(load_panel(dir / "y_gap.csv", dir / "x.csv", dir / "w.csv"),
                         doctest::Contains("missing cell"), ValidationError);

    // dense adjacency accepted, asymmetric rejected
    write_file(dir / "w_dense.csv", "0,1\n1,0\n");
    const PanelData dense = load_panel(dir / "y.csv", dir / "x.csv", dir / "w_dense.csv");
    CHECK(dense.graph.W(0, 1) == 1.0);
    write_file(dir / "w_bad.csv", "0,1\n0,0\n");
    CHECK_THROWS_WITH_AS(load_panel(dir / "y.csv", dir / "x.csv", dir / "w_bad.csv"),
                         doctest::Contains("not symmetric"), ValidationError);

    // parse errors carry the line number
    write_file(dir / "y_parse.csv", "t,k,y\n0,0,abc\n");
    CHECK_THROWS_WITH_AS(load_panel(dir / "y_parse.csv", dir / "x.csv", dir / "w.csv"),
                         doctest::Contains(":2:"), ValidationError);
}

TEST_CASE("emitted numbers round-trip through %.17g exactly") {
    RngStream rng(61, 0);
    for (int i = 0; i < 200; ++i) {
        const double v = rng.normal() * std::pow(10.0, static_cast<int>(rng.uniform() * 20) - 10);
        const double back = std::stod(format_double(v));
        CHECK(back == v);
    }
}

TEST_CASE("write_outputs: layout, atomicity, manifest hashes") {
    const fs::path dir = fresh_dir("outputs");

    PosteriorDraws draws;
    draws.model_kind = ModelKind::DCar;
    draws.r = 1;
    draws.T = 2;
    draws.K = 1;
    const int S = 20;
    draws.beta = Matrix::Constant(S, 1, 1.0);
    draws.sigma2 = Vector::LinSpaced(S, 0.1, 0.5);
    draws.tau2 = Vector::Constant(S, 1.0);
    draws.rhoS = Vector::Constant(S, 0.4);
    draws.rhoT = Vector::Constant(S, 0.6);
    draws.lambda = Vector::Zero(S);
    draws.theta.assign(S, Matrix::Zero(2, 1));
    draws.alpha.assign(S, Matrix::Zero(2, 1));

    // empty draws refuse to write anything
    const fs::path empty_dir = dir / "empty";
    CHECK_THROWS_AS(write_outputs({}, false, std::nullopt, empty_dir), ValidationError);
    CHECK(!fs::exists(empty_dir / "draws.csv"));

    write_outputs({draws}, true, std::nullopt, dir);
    const std::string draws_text = read_file(dir / "draws.csv");
    CHECK(draws_text.rfind("iteration,beta_0,sigma2,tau2,rhoS,rhoT,lambda,theta_0_0,theta_1_0",
                           0) == 0);

    const std::string summary = read_file(dir / "summary.json");
    CHECK(summary.find("\"p05\"") != std::string::npos);
    CHECK(summary.find("\"p50\"") != std::string::npos);
    CHECK(summary.find("\"p95\"") != std::string::npos);
    // D-CAR summary carries no lambda entry
    CHECK(summary.find("\"lambda\"") == std::string::npos);

    const std::string manifest1 = read_file(dir / "manifest.json");
    write_outputs({draws}, true, std::nullopt, dir);
    CHECK(read_file(dir / "manifest.json") == manifest1);

    // any byte change flips the hash
    draws.sigma2[0] += 1e-12;
    write_outputs({draws}, true, std::nullopt, dir);
    CHECK(read_file(dir / "manifest.json") != manifest1);

    // round trip through load_draws
    draws.model_kind = ModelKind::DFsCsn;
    draws.lambda = Vector::Constant(S, 1.5);
    write_outputs({draws}, true, std::nullopt, dir);
    const PosteriorDraws loaded = load_draws(dir / "draws.csv");
    CHECK(loaded.size() == S);
    CHECK(loaded.r == 1);
    CHECK(loaded.T == 2);
    CHECK(loaded.K == 1);
    CHECK((loaded.sigma2 - draws.sigma2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.lambda - draws.lambda).cwiseAbs().maxCoeff() == 0.0);
    CHECK(loaded.theta.size() == S);
}

TEST_CASE("cli: default config emission, simulate/fit/evaluate pipeline") {
    const fs::path dir = fresh_dir("cli");
    const fs::path cfg_path = dir / "config.json";

    CHECK(run_cli({"--emit-default-config", cfg_path.string()}) == 0);
    RunConfig cfg = load_config(cfg_path);
    CHECK(cfg.priors.sigma2_beta == 100.0);

    // small problem for speed
    cfg.truth.T = 5;
    cfg.truth.grid_rows = 2;
    cfg.truth.grid_cols = 2;
    cfg.truth.lambda = 2.5;
    cfg.iterations = 80;
    cfg.burnin = 20;
    cfg.write_theta = true;
    cfg.flmpl_inner_mc = 20;
    cfg.seed = 99;
    const fs::path data_dir = dir / "data";
    cfg.out_dir = data_dir.string();
    cfg.y_path = (data_dir / "y.csv").string();
    cfg.x_path = (data_dir / "x.csv").string();
    cfg.w_path = (data_dir / "w.csv").string();
    write_file(cfg_path, config_to_json(cfg));

    CHECK(run_cli({"--config", cfg_path.string(), "simulate"}) == 0);
    CHECK(fs::exists(data_dir / "y.csv"));
    CHECK(fs::exists(data_dir / "y_future.csv"));
    CHECK(fs::exists(data_dir / "w.csv"));

    const fs::path fit_a = dir / "fit_a";
    const fs::path fit_b = dir / "fit_b";
    CHECK(run_cli({"--config", cfg_path.string(), "--out", fit_a.string(), "fit"}) == 0);
    CHECK(run_cli({"--config", cfg_path.string(), "--out", fit_b.string(), "fit"}) == 0);
    CHECK(read_file(fit_a / "draws.csv") == read_file(fit_b / "draws.csv"));

    CHECK(run_cli({"--config", cfg_path.string(), "--out", (dir / "eval").string(), "evaluate",
                   "--draws", (fit_a / "draws.csv").string(), "--y-future",
                   (data_dir / "y_future.csv").string(), "--x-future",
                   (data_dir / "x_future.csv").string(), "--use-truth"}) == 0);
    const std::string metrics = read_file(dir / "eval" / "metrics.json");
    CHECK(metrics.find("\"lmpl\"") != std::string::npos);
    CHECK(metrics.find("\"flmpl\"") != std::string::npos);
    CHECK(metrics.find("\"fes\"") != std::string::npos);
    CHECK(metrics.find("\"frmse\"") != std::string::npos);
    CHECK(metrics.find("\"rmse_beta_0\"") != std::string::npos);

    CHECK(run_cli({"--config", cfg_path.string(), "--out", (dir / "pred").string(), "predict",
                   "--draws", (fit_a / "draws.csv").string(), "--x-future",
                   (data_dir / "x_future.csv").string()}) == 0);
    CHECK(fs::exists(dir / "pred" / "predictions.csv"));

    // D-CAR fit: summary must not mention lambda
    cfg.model_kind = "dcar";
    write_file(cfg_path, config_to_json(cfg));
    const fs::path fit_dcar = dir / "fit_dcar";
    CHECK(run_cli({"--config", cfg_path.string(), "--out", fit_dcar.string(), "fit"}) == 0);
    CHECK(read_file(fit_dcar / "summary.json").find("\"lambda\"") == std::string::npos);

    // usage errors exit with 2, missing data with 3
    CHECK(run_cli({"definitely-not-a-command"}) == 2);
    cfg.model_kind = "dfscsn";
    cfg.y_path = (dir / "nope.csv").string();
    write_file(cfg_path, config_to_json(cfg));
    CHECK(run_cli({"--config", cfg_path.string(), "fit"}) == 3);
}

TEST_CASE("cli: sim-study filter contract") {
    const fs::path dir = fresh_dir("study");
    const fs::path cfg_path = dir / "config.json";
    RunConfig cfg;
    cfg.iterations = 40;
    cfg.burnin = 10;
    cfg.flmpl_inner_mc = 5;
    cfg.out_dir = dir.string();
    write_file(cfg_path, config_to_json(cfg));

    CHECK(run_cli({"--config", cfg_path.string(), "sim-study", "--cases", "3", "--seeds", "2",
                   "--rhos", "0.5"}) == 0);
    const std::string results = read_file(dir / "simstudy_results.csv");
    int rows = -1;  // minus header
    for (char ch : results)
        if (ch == '\n') ++rows;
    CHECK(rows == 4);  // 2 seeds x 2 models, case 3 / rhoS 0.5 only
    CHECK(results.find("\n3,") != std::string::npos);
    CHECK(results.find("\n1,") == std::string::npos);
    CHECK(fs::exists(dir / "simstudy_summary.json"));
}
