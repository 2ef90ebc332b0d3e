#include "dfscsn/io.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dfscsn/stats.hpp"

namespace dfscsn {

namespace fs = std::filesystem;
using nlohmann::json;

ModelParams TruthConfig::params() const {
    ModelParams p;
    p.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    p.sigma2 = sigma2;
    p.tau2 = tau2;
    p.rhoS = rhoS;
    p.rhoT = rhoT;
    p.skew = skew_constants(lambda);
    p.validate();
    return p;
}

ChainConfig RunConfig::chain_config() const {
    ChainConfig cfg;
    cfg.iterations = iterations;
    cfg.burnin = burnin;
    cfg.thin = thin;
    cfg.seed = seed;
    cfg.model_kind = model_kind_from_string(model_kind);
    cfg.steps = steps;
    cfg.adapt = adapt;
    return cfg;
}

void RunConfig::validate() const {
    priors.validate();
    chain_config().validate();
    if (chains < 1) throw ValidationError("config: chains must be >= 1");
    if (t_future < 1) throw ValidationError("config: t_future must be >= 1");
    if (flmpl_inner_mc < 1) throw ValidationError("config: flmpl_inner_mc must be >= 1");
}

std::string config_to_json(const RunConfig& c) {
    json j;
    j["model_kind"] = c.model_kind;
    j["priors"] = {{"sigma2_beta", c.priors.sigma2_beta}, {"a_sigma2", c.priors.a_sigma2},
                   {"b_sigma2", c.priors.b_sigma2},       {"a_tau2", c.priors.a_tau2},
                   {"b_tau2", c.priors.b_tau2},           {"sigma2_lambda", c.priors.sigma2_lambda}};
    j["chain"] = {{"iterations", c.iterations},
                  {"burnin", c.burnin},
                  {"thin", c.thin},
                  {"chains", c.chains},
                  {"seed", c.seed},
                  {"step_log_tau2", c.steps.log_tau2},
                  {"step_logit_rhos", c.steps.logit_rhoS},
                  {"step_lambda", c.steps.lambda},
                  {"adapt", c.adapt}};
    j["data"] = {{"y", c.y_path}, {"x", c.x_path}, {"w", c.w_path}};
    j["t_future"] = c.t_future;
    j["flmpl_inner_mc"] = c.flmpl_inner_mc;
    j["write_theta"] = c.write_theta;
    j["out_dir"] = c.out_dir;
    j["truth"] = {{"beta", c.truth.beta},
                  {"sigma2", c.truth.sigma2},
                  {"tau2", c.truth.tau2},
                  {"rho_s", c.truth.rhoS},
                  {"rho_t", c.truth.rhoT},
                  {"lambda", c.truth.lambda},
                  {"T", c.truth.T},
                  {"grid_rows", c.truth.grid_rows},
                  {"grid_cols", c.truth.grid_cols}};
    return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& err) {
        throw ValidationError(std::string("config parse error: ") + err.what());
    }
    RunConfig c;
    auto get = [](const json& obj, const char* key, auto& dst) {
        if (obj.contains(key)) obj.at(key).get_to(dst);
    };
    get(j, "model_kind", c.model_kind);
    if (j.contains("priors")) {
        const json& p = j["priors"];
        get(p, "sigma2_beta", c.priors.sigma2_beta);
        get(p, "a_sigma2", c.priors.a_sigma2);
        get(p, "b_sigma2", c.priors.b_sigma2);
        get(p, "a_tau2", c.priors.a_tau2);
        get(p, "b_tau2", c.priors.b_tau2);
        get(p, "sigma2_lambda", c.priors.sigma2_lambda);
    }
    if (j.contains("chain")) {
        const json& ch = j["chain"];
        get(ch, "iterations", c.iterations);
        get(ch, "burnin", c.burnin);
        get(ch, "thin", c.thin);
        get(ch, "chains", c.chains);
        get(ch, "seed", c.seed);
        get(ch, "step_log_tau2", c.steps.log_tau2);
        get(ch, "step_logit_rhos", c.steps.logit_rhoS);
        get(ch, "step_lambda", c.steps.lambda);
        get(ch, "adapt", c.adapt);
    }
    if (j.contains("data")) {
        const json& d = j["data"];
        get(d, "y", c.y_path);
        get(d, "x", c.x_path);
        get(d, "w", c.w_path);
    }
    get(j, "t_future", c.t_future);
    get(j, "flmpl_inner_mc", c.flmpl_inner_mc);
    get(j, "write_theta", c.write_theta);
    get(j, "out_dir", c.out_dir);
    if (j.contains("truth")) {
        const json& t = j["truth"];
        get(t, "beta", c.truth.beta);
        get(t, "sigma2", c.truth.sigma2);
        get(t, "tau2", c.truth.tau2);
        get(t, "rho_s", c.truth.rhoS);
        get(t, "rho_t", c.truth.rhoT);
        get(t, "lambda", c.truth.lambda);
        get(t, "T", c.truth.T);
        get(t, "grid_rows", c.truth.grid_rows);
        get(t, "grid_cols", c.truth.grid_cols);
    }
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

void write_default_config(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write config file: " + path.string());
    out << config_to_json(RunConfig{});
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, const fs::path& path, int line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": cannot parse number '" + s + "'");
    }
}

int parse_int(const std::string& s, const fs::path& path, int line_no) {
    const double v = parse_double(s, path, line_no);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": expected an integer, got '" + s + "'");
    return i;
}

struct LongTable {
    int T = 0;
    int K = 0;
    int cols = 0;                 // value columns after t,k
    std::vector<std::vector<double>> values;  // indexed t*K + k
};

// Reads a long-format CSV `t,k,v1..vc`, validating completeness.
LongTable read_long_csv(const fs::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw ValidationError(std::string("cannot open ") + what + " file: " + path.string());
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line))
        throw ValidationError(path.string() + ": empty file");
    ++line_no;
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "t" || header[1] != "k")
        throw ValidationError(path.string() + ":1: expected header starting with 't,k'");
    const int cols = static_cast<int>(header.size()) - 2;

    std::map<std::pair<int, int>, std::vector<double>> cells;
    int max_t = -1, max_k = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != cols + 2)
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": expected " + std::to_string(cols + 2) + " fields");
        const int t = parse_int(fields[0], path, line_no);
        const int k = parse_int(fields[1], path, line_no);
        if (t < 0 || k < 0)
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": negative t or k index");
        std::vector<double> vals(cols);
        for (int c = 0; c < cols; ++c) vals[c] = parse_double(fields[c + 2], path, line_no);
        if (!cells.emplace(std::make_pair(t, k), std::move(vals)).second)
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": duplicate cell (t=" + std::to_string(t) +
                                  ", k=" + std::to_string(k) + ")");
        max_t = std::max(max_t, t);
        max_k = std::max(max_k, k);
    }
    LongTable table;
    table.T = max_t + 1;
    table.K = max_k + 1;
    table.cols = cols;
    if (table.T < 1 || table.K < 1)
        throw ValidationError(path.string() + ": no data rows");
    table.values.resize(static_cast<std::size_t>(table.T) * table.K);
    for (int t = 0; t < table.T; ++t) {
        for (int k = 0; k < table.K; ++k) {
            auto it = cells.find({t, k});
            if (it == cells.end())
                throw ValidationError(path.string() + ": missing cell (t=" + std::to_string(t) +
                                      ", k=" + std::to_string(k) + ")");
            table.values[static_cast<std::size_t>(t) * table.K + k] = std::move(it->second);
        }
    }
    return table;
}

}  // namespace

Matrix load_adjacency(const fs::path& path, std::optional<int> expected_K) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open adjacency file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
    auto first = split_csv_line(line);
    const bool edge_list = first.size() == 2 && first[0] == "i" && first[1] == "j";

    if (edge_list) {
        if (!expected_K)
            throw ValidationError(path.string() + ": edge list needs a known node count");
        std::vector<std::pair<int, int>> edges;
        int line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            if (fields.size() != 2)
                throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                      ": expected two fields");
            edges.emplace_back(parse_int(fields[0], path, line_no),
                               parse_int(fields[1], path, line_no));
        }
        return AdjacencyGraph::from_edges(*expected_K, edges).W;
    }

    // dense K x K
    std::vector<std::vector<double>> rows;
    int line_no = 0;
    do {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        std::vector<double> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c)
            row[c] = parse_double(fields[c], path, line_no);
        rows.push_back(std::move(row));
    } while (std::getline(in, line));
    const int K = static_cast<int>(rows.size());
    Matrix W(K, K);
    for (int i = 0; i < K; ++i) {
        if (static_cast<int>(rows[i].size()) != K)
            throw ValidationError(path.string() + ": dense adjacency is not square");
        for (int j = 0; j < K; ++j) W(i, j) = rows[i][j];
    }
    if (expected_K && *expected_K != K)
        throw ValidationError(path.string() + ": adjacency has " + std::to_string(K) +
                              " nodes, data has " + std::to_string(*expected_K));
    try {
        AdjacencyGraph::from_dense(W);
    } catch (const ValidationError& err) {
        throw ValidationError(path.string() + ": " + err.what());
    }
    return W;
}

PanelData load_panel(const fs::path& y_path, const fs::path& x_path, const fs::path& w_path) {
    const LongTable y_table = read_long_csv(y_path, "observation");
    if (y_table.cols != 1)
        throw ValidationError(y_path.string() + ": expected exactly one value column 'y'");
    const LongTable x_table = read_long_csv(x_path, "feature");
    if (x_table.T != y_table.T || x_table.K != y_table.K)
        throw ValidationError(x_path.string() + ": feature panel shape (" +
                              std::to_string(x_table.T) + "," + std::to_string(x_table.K) +
                              ") does not match observations (" + std::to_string(y_table.T) +
                              "," + std::to_string(y_table.K) + ")");

    PanelData data;
    data.T = y_table.T;
    data.K = y_table.K;
    data.r = x_table.cols;
    data.y.resize(data.T, data.K);
    data.X.resize(data.T);
    for (int t = 0; t < data.T; ++t) {
        Matrix xt(data.K, data.r);
        for (int k = 0; k < data.K; ++k) {
            data.y(t, k) = y_table.values[static_cast<std::size_t>(t) * data.K + k][0];
            const auto& f = x_table.values[static_cast<std::size_t>(t) * data.K + k];
            for (int c = 0; c < data.r; ++c) xt(k, c) = f[c];
        }
        data.X[t] = std::move(xt);
    }
    data.graph = AdjacencyGraph::from_dense(load_adjacency(w_path, data.K));
    data.validate();
    return data;
}

namespace {

LongTable read_future_table(const fs::path& path, int t_future, int K, const char* what) {
    LongTable table = read_long_csv(path, what);
    if (table.K != K)
        throw ValidationError(path.string() + ": expected " + std::to_string(K) + " areas, got " +
                              std::to_string(table.K));
    if (table.T != t_future)
        throw ValidationError(path.string() + ": expected " + std::to_string(t_future) +
                              " future periods, got " + std::to_string(table.T));
    return table;
}

}  // namespace

Matrix load_future_y(const fs::path& path, int t_future, int K) {
    const LongTable table = read_future_table(path, t_future, K, "future observation");
    if (table.cols != 1) throw ValidationError(path.string() + ": expected one value column");
    Matrix y(t_future, K);
    for (int t = 0; t < t_future; ++t)
        for (int k = 0; k < K; ++k)
            y(t, k) = table.values[static_cast<std::size_t>(t) * K + k][0];
    return y;
}

std::vector<Matrix> load_future_x(const fs::path& path, int t_future, int K) {
    const LongTable table = read_future_table(path, t_future, K, "future feature");
    std::vector<Matrix> X(t_future);
    for (int t = 0; t < t_future; ++t) {
        Matrix xt(K, table.cols);
        for (int k = 0; k < K; ++k) {
            const auto& f = table.values[static_cast<std::size_t>(t) * K + k];
            for (int c = 0; c < table.cols; ++c) xt(k, c) = f[c];
        }
        X[t] = std::move(xt);
    }
    return X;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file for hashing: " + path.string());
    std::uint64_t h = 1469598103934665603ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

namespace {

void append_quantiles(json& dst, const std::string& name, std::vector<double> values) {
    dst[name] = json{{"p05", quantile(values, 0.05)},
                     {"p50", quantile(values, 0.50)},
                     {"p95", quantile(values, 0.95)}};
}

std::vector<double> pooled(const std::vector<PosteriorDraws>& chains,
                           const std::function<double(const PosteriorDraws&, int)>& pick) {
    std::vector<double> out;
    for (const auto& ch : chains)
        for (int i = 0; i < ch.size(); ++i) out.push_back(pick(ch, i));
    return out;
}

}  // namespace

std::filesystem::path write_outputs(const std::vector<PosteriorDraws>& chains, bool write_theta,
                                    const std::optional<std::string>& metrics_json,
                                    const fs::path& out_dir) {
    int total = 0;
    for (const auto& ch : chains) total += ch.size();
    if (chains.empty() || total == 0)
        throw ValidationError("write_outputs: no kept draws, refusing to write partial outputs");
    const PosteriorDraws& head = chains.front();
    const bool multi = chains.size() > 1;
    const bool skewed = head.model_kind == ModelKind::DFsCsn;

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ValidationError("cannot create output directory " + out_dir.string() + ": " +
                                  ec.message());

    // draws.csv
    const fs::path draws_path = out_dir / "draws.csv";
    {
        std::ofstream out(draws_path);
        if (!out) throw ValidationError("cannot write " + draws_path.string());
        if (multi) out << "chain,";
        out << "iteration";
        for (int j = 0; j < head.r; ++j) out << ",beta_" << j;
        out << ",sigma2,tau2,rhoS,rhoT,lambda";
        if (write_theta)
            for (int t = 0; t < head.T; ++t)
                for (int k = 0; k < head.K; ++k) out << ",theta_" << t << "_" << k;
        out << "\n";
        for (std::size_t c = 0; c < chains.size(); ++c) {
            const PosteriorDraws& ch = chains[c];
            for (int i = 0; i < ch.size(); ++i) {
                if (multi) out << c << ",";
                out << i;
                for (int j = 0; j < ch.r; ++j) out << "," << format_double(ch.beta(i, j));
                out << "," << format_double(ch.sigma2[i]) << "," << format_double(ch.tau2[i])
                    << "," << format_double(ch.rhoS[i]) << "," << format_double(ch.rhoT[i])
                    << "," << format_double(ch.lambda[i]);
                if (write_theta)
                    for (int t = 0; t < ch.T; ++t)
                        for (int k = 0; k < ch.K; ++k)
                            out << "," << format_double(ch.theta[i](t, k));
                out << "\n";
            }
        }
    }

    // summary.json: pooled posterior quantiles + chain diagnostics
    const fs::path summary_path = out_dir / "summary.json";
    {
        json summary;
        summary["model_kind"] = to_string(head.model_kind);
        summary["chains"] = chains.size();
        summary["kept_draws"] = total;
        json params = json::object();
        for (int j = 0; j < head.r; ++j)
            append_quantiles(params, "beta_" + std::to_string(j),
                             pooled(chains, [j](const PosteriorDraws& d, int i) {
                                 return d.beta(i, j);
                             }));
        append_quantiles(params, "sigma2",
                         pooled(chains, [](const PosteriorDraws& d, int i) { return d.sigma2[i]; }));
        append_quantiles(params, "tau2",
                         pooled(chains, [](const PosteriorDraws& d, int i) { return d.tau2[i]; }));
        append_quantiles(params, "rhoS",
                         pooled(chains, [](const PosteriorDraws& d, int i) { return d.rhoS[i]; }));
        append_quantiles(params, "rhoT",
                         pooled(chains, [](const PosteriorDraws& d, int i) { return d.rhoT[i]; }));
        if (skewed)
            append_quantiles(params, "lambda", pooled(chains, [](const PosteriorDraws& d, int i) {
                                 return d.lambda[i];
                             }));
        summary["parameters"] = params;

        json ess = json::object();
        auto ess_of = [&chains](const std::function<double(const PosteriorDraws&, int)>& pick) {
            double total_ess = 0.0;
            for (const auto& ch : chains) {
                std::vector<double> trace;
                trace.reserve(ch.size());
                for (int i = 0; i < ch.size(); ++i) trace.push_back(pick(ch, i));
                total_ess += trace.size() >= 10 ? effective_sample_size(trace)
                                                : static_cast<double>(trace.size());
            }
            return total_ess;
        };
        for (int j = 0; j < head.r; ++j)
            ess["beta_" + std::to_string(j)] =
                ess_of([j](const PosteriorDraws& d, int i) { return d.beta(i, j); });
        ess["sigma2"] = ess_of([](const PosteriorDraws& d, int i) { return d.sigma2[i]; });
        ess["tau2"] = ess_of([](const PosteriorDraws& d, int i) { return d.tau2[i]; });
        ess["rhoS"] = ess_of([](const PosteriorDraws& d, int i) { return d.rhoS[i]; });
        ess["rhoT"] = ess_of([](const PosteriorDraws& d, int i) { return d.rhoT[i]; });
        if (skewed)
            ess["lambda"] = ess_of([](const PosteriorDraws& d, int i) { return d.lambda[i]; });
        summary["ess"] = ess;

        json acc = json::object();
        double acc_tau2 = 0.0, acc_rhoS = 0.0, acc_lambda = 0.0;
        for (const auto& ch : chains) {
            acc_tau2 += ch.acc_tau2.rate();
            acc_rhoS += ch.acc_rhoS.rate();
            acc_lambda += ch.acc_lambda.rate();
        }
        acc["tau2"] = acc_tau2 / chains.size();
        acc["rhoS"] = acc_rhoS / chains.size();
        if (skewed) acc["lambda"] = acc_lambda / chains.size();
        summary["acceptance"] = acc;

        std::ofstream out(summary_path);
        if (!out) throw ValidationError("cannot write " + summary_path.string());
        out << summary.dump(2) << "\n";
    }

    std::vector<fs::path> files = {draws_path, summary_path};
    if (metrics_json) {
        const fs::path metrics_path = out_dir / "metrics.json";
        std::ofstream out(metrics_path);
        if (!out) throw ValidationError("cannot write " + metrics_path.string());
        out << *metrics_json;
        files.push_back(metrics_path);
    }

    // manifest with content hashes
    const fs::path manifest_path = out_dir / "manifest.json";
    {
        json manifest;
        json hashes = json::object();
        for (const auto& f : files) {
            char hex[20];
            std::snprintf(hex, sizeof(hex), "%016llx",
                          static_cast<unsigned long long>(fnv1a_file(f)));
            hashes[f.filename().string()] = std::string("fnv1a:") + hex;
        }
        manifest["files"] = hashes;
        std::ofstream out(manifest_path);
        if (!out) throw ValidationError("cannot write " + manifest_path.string());
        out << manifest.dump(2) << "\n";
    }
    return manifest_path;
}

PosteriorDraws load_draws(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open draws file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty draws file");
    const auto header = split_csv_line(line);

    int col_chain = -1, col_iter = -1, col_sigma2 = -1, col_tau2 = -1, col_rhoS = -1,
        col_rhoT = -1, col_lambda = -1;
    std::vector<int> beta_cols;
    std::vector<std::tuple<int, int, int>> theta_cols;  // (col, t, k)
    int max_t = -1, max_k = -1;
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        const std::string& name = header[c];
        if (name == "chain") col_chain = c;
        else if (name == "iteration") col_iter = c;
        else if (name == "sigma2") col_sigma2 = c;
        else if (name == "tau2") col_tau2 = c;
        else if (name == "rhoS") col_rhoS = c;
        else if (name == "rhoT") col_rhoT = c;
        else if (name == "lambda") col_lambda = c;
        else if (name.rfind("beta_", 0) == 0) beta_cols.push_back(c);
        else if (name.rfind("theta_", 0) == 0) {
            const auto rest = name.substr(6);
            const auto sep = rest.find('_');
            if (sep == std::string::npos)
                throw ValidationError(path.string() + ": malformed theta column " + name);
            const int t = std::stoi(rest.substr(0, sep));
            const int k = std::stoi(rest.substr(sep + 1));
            theta_cols.emplace_back(c, t, k);
            max_t = std::max(max_t, t);
            max_k = std::max(max_k, k);
        }
    }
    if (col_iter < 0 || col_sigma2 < 0 || col_tau2 < 0 || col_rhoS < 0 || col_rhoT < 0 ||
        col_lambda < 0 || beta_cols.empty())
        throw ValidationError(path.string() + ": draws header is missing required columns");

    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": wrong field count");
        std::vector<double> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c)
            row[c] = parse_double(fields[c], path, line_no);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError(path.string() + ": no draws");
    (void)col_chain;

    PosteriorDraws d;
    const int S = static_cast<int>(rows.size());
    d.r = static_cast<int>(beta_cols.size());
    d.T = max_t + 1;
    d.K = max_k + 1;
    d.beta.resize(S, d.r);
    d.sigma2.resize(S);
    d.tau2.resize(S);
    d.rhoS.resize(S);
    d.rhoT.resize(S);
    d.lambda.resize(S);
    const bool has_theta = !theta_cols.empty();
    if (has_theta) d.theta.reserve(S);
    for (int i = 0; i < S; ++i) {
        for (int j = 0; j < d.r; ++j) d.beta(i, j) = rows[i][beta_cols[j]];
        d.sigma2[i] = rows[i][col_sigma2];
        d.tau2[i] = rows[i][col_tau2];
        d.rhoS[i] = rows[i][col_rhoS];
        d.rhoT[i] = rows[i][col_rhoT];
        d.lambda[i] = rows[i][col_lambda];
        if (has_theta) {
            Matrix th(d.T, d.K);
            for (const auto& [c, t, k] : theta_cols) th(t, k) = rows[i][c];
            d.theta.push_back(std::move(th));
        }
    }
    d.model_kind = (d.lambda.array() != 0.0).any() ? ModelKind::DFsCsn : ModelKind::DCar;
    return d;
}

void write_simstudy_results(const std::vector<ReplicationResult>& results,
                            const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    const char* rmse_keys[] = {"beta_0", "beta_1", "sigma2", "tau2", "rhoS", "rhoT", "lambda"};
    out << "case,rhoS,seed,model,dataset_hash,lmpl,flmpl,fes,frmse";
    for (const char* k : rmse_keys) out << ",rmse_" << k;
    out << ",min_ess,wall_seconds,error\n";
    for (const auto& res : results) {
        char hex[20];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(res.dataset_hash));
        out << res.case_id << "," << format_double(res.rhoS) << "," << res.seed << ","
            << res.model << "," << hex;
        if (res.metrics) {
            const MetricBundle& m = *res.metrics;
            out << "," << format_double(m.lmpl) << "," << format_double(m.flmpl) << ","
                << format_double(m.fes) << "," << format_double(m.frmse);
            for (const char* k : rmse_keys) {
                auto it = m.rmse.find(k);
                out << ",";
                if (it != m.rmse.end()) out << format_double(it->second);
            }
            out << "," << format_double(m.min_ess) << "," << format_double(m.wall_seconds)
                << ",";
        } else {
            for (int i = 0; i < 13; ++i) out << ",";
            out << res.error;
        }
        out << "\n";
    }
}

void write_simstudy_summary(const std::vector<SummaryRow>& rows, const fs::path& path) {
    json j = json::array();
    for (const auto& row : rows) {
        j.push_back({{"case", row.case_id},
                     {"rhoS", row.rhoS},
                     {"metric", row.metric},
                     {"median", row.median},
                     {"q1", row.q1},
                     {"q3", row.q3},
                     {"n", row.n}});
    }
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace dfscsn
