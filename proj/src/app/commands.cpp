#include "setpar/app/commands.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "setpar/app/config.hpp"
#include "setpar/app/io.hpp"
#include "setpar/diagnostics.hpp"
#include "setpar/errors.hpp"

#ifndef SETPAR_VERSION
#define SETPAR_VERSION "0.1.0"
#endif

namespace setpar::app {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Input files digested into the manifest.
struct Inputs {
    std::vector<std::pair<std::string, std::string>> digests;

    void add(const fs::path& path) { digests.emplace_back(path.string(), sha256_hex(read_file(path))); }
};

class Manifest {
public:
    explicit Manifest(std::string subcommand)
        : subcommand_(std::move(subcommand)), start_(std::chrono::steady_clock::now()),
          started_utc_(utc_now()) {}

    json finish(const json& config, const Inputs& inputs, std::optional<std::uint64_t> seed) const {
        json m;
        m["subcommand"] = subcommand_;
        m["version"] = SETPAR_VERSION;
        m["config"] = config;
        json files = json::object();
        for (const auto& [path, digest] : inputs.digests) files[path] = "sha256:" + digest;
        m["inputs"] = files;
        m["seed"] = seed ? json(*seed) : json(nullptr);
        m["started_utc"] = started_utc_;
        m["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        return m;
    }

private:
    static std::string utc_now() {
        const std::time_t now = std::time(nullptr);
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    std::string subcommand_;
    std::chrono::steady_clock::time_point start_;
    std::string started_utc_;
};

json params_json(const SetparParams& p) {
    json j;
    j["r"] = p.r == SetparParams::kNoThreshold ? json(nullptr) : json(p.r);
    j["lower"] = {{"d", p.lower.d}, {"a", p.lower.a}, {"b", p.lower.b}};
    j["upper"] = {{"d", p.upper.d}, {"a", p.upper.a}, {"b", p.upper.b}};
    return j;
}

json fit_config_json(const FitConfig& c) {
    json j;
    j["alpha1"] = c.alpha1;
    j["alpha2"] = c.alpha2;
    j["thresholds"] = c.thresholds ? json(*c.thresholds) : json(nullptr);
    if (c.lambda_init) j["lambda_init"] = *c.lambda_init;
    else j["lambda_init"] = c.lambda_init_policy == LambdaInitPolicy::FirstObservation ? "first" : "mean";
    j["epsilon"] = c.epsilon;
    j["tol"] = c.optim.tol;
    j["max_iter"] = c.optim.max_iter;
    j["starts"] = c.starts;
    j["warm_start"] = c.warm_start;
    j["workers"] = c.workers;
    j["min_regime_obs"] = c.min_regime_obs;
    return j;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json fit_json(const FitResult& f, const CountSeries& series) {
    json doc;
    doc["format"] = "setpar-fit/1";
    doc["model"] = to_string(f.model);
    doc["n"] = f.n;
    doc["lambda_init"] = f.lambda_init;
    doc["threshold"] = f.model == ModelKind::Par ? json(nullptr) : json(f.params.r);
    doc["params"] = params_json(f.params);

    const auto names = f.parameter_names();
    json est = json::object();
    json se = json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
        est[names[i]] = f.theta[static_cast<Eigen::Index>(i)];
        se[names[i]] = f.standard_errors[static_cast<Eigen::Index>(i)];
    }
    doc["free_parameters"] = names;
    doc["estimates"] = est;
    doc["standard_errors"] = se;
    doc["loglik"] = f.loglik;
    doc["mean_loglik"] = f.loglik / static_cast<double>(f.n);
    doc["aic"] = f.aic;
    doc["bic"] = f.bic;
    doc["converged"] = f.converged;
    doc["g_hat"] = matrix_json(f.g_hat);
    doc["g_hat_inv"] = matrix_json(f.g_hat_inv);

    json profile = json::array();
    for (const auto& e : f.profile) {
        profile.push_back({{"r", e.r},
                           {"loglik", e.loglik},
                           {"theta", vector_json(e.theta)},
                           {"converged", e.converged},
                           {"iterations", e.iterations},
                           {"projected_gradient_norm", e.projected_gradient_norm}});
    }
    doc["profile"] = profile;

    const ResidualReport res = pearson_residuals(series, f.params, f.lambda_init);
    doc["lambda_path"] = res.fitted;
    doc["pearson_residuals"] = res.residuals;
    doc["in_sample_mse"] = mean_squared_error(series.values(), res.fitted);
    doc["warnings"] = f.warnings;
    return doc;
}

std::string acf_csv(const AcfReport& acf) {
    std::ostringstream out;
    out << "lag,acf,lower_band,upper_band\n";
    for (std::size_t h = 0; h < acf.values.size(); ++h) {
        out << h << ',' << format_double(acf.values[h]) << ',' << format_double(-acf.band) << ','
            << format_double(acf.band) << '\n';
    }
    return out.str();
}

void write_manifest(const fs::path& path, const json& manifest) {
    write_file(path, manifest.dump(2) + "\n");
}

fs::path sidecar(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

// Options shared by subcommands that ingest a counts file.
struct DataOptions {
    std::string column;
    std::size_t skip = 0;
    std::size_t first = 0;

    void attach(CLI::App* cmd, const std::string& prefix = "") {
        cmd->add_option("--" + prefix + "column", column, "Named column in delimited input");
        cmd->add_option("--" + prefix + "skip", skip, "Drop this many leading records");
        cmd->add_option("--" + prefix + "first", first, "Keep only this many records after skipping");
    }

    SeriesSelection selection() const {
        SeriesSelection s;
        if (!column.empty()) s.column = column;
        s.skip = skip;
        if (first > 0) s.first = first;
        return s;
    }

    json to_json() const {
        return {{"column", column.empty() ? json(nullptr) : json(column)},
                {"skip", skip},
                {"first", first > 0 ? json(first) : json(nullptr)}};
    }
};

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed_override) {
    Manifest manifest("simulate");
    Inputs inputs;
    SimulationConfig cfg = simulation_config(load_config(config_path));
    inputs.add(config_path);
    if (seed_override) cfg.seed = *seed_override;

    SimulationOptions opts;
    opts.burn_in = cfg.burn_in;
    if (cfg.lambda_init) opts.lambda_init = *cfg.lambda_init;
    const SimulatedPath path = simulate(cfg.params, cfg.n, cfg.seed, opts);

    std::ostringstream out;
    out << "t,y,lambda\n";
    for (std::size_t t = 0; t < path.series.size(); ++t) {
        out << (t + 1) << ',' << path.series[t] << ',' << format_double(path.intensity.values[t]) << '\n';
    }
    write_file(out_path, out.str());

    json config = {{"params", params_json(cfg.params)},
                   {"n", cfg.n},
                   {"burn_in", cfg.burn_in},
                   {"lambda_init", cfg.lambda_init ? json(*cfg.lambda_init) : json("reachable_state")}};
    write_manifest(sidecar(out_path), manifest.finish(config, inputs, cfg.seed));
    return kExitOk;
}

struct FitFlags {
    std::string data;
    std::string config;
    std::string out;
    std::string model;
    std::string thresholds;
    std::optional<double> alpha1;
    std::optional<double> alpha2;
    std::string lambda_init;
    std::optional<int> workers;
    DataOptions data_opts;
};

int cmd_fit(const FitFlags& flags, std::ostream& err) {
    Manifest manifest("fit");
    Inputs inputs;
    ConfigTree tree;
    if (!flags.config.empty()) {
        tree = load_config(flags.config);
        inputs.add(flags.config);
    }
    FitConfig cfg = fit_config_from(tree);
    if (flags.alpha1) cfg.alpha1 = *flags.alpha1;
    if (flags.alpha2) cfg.alpha2 = *flags.alpha2;
    if (!flags.lambda_init.empty()) apply_lambda_init(flags.lambda_init, cfg, "--lambda-init");
    if (!flags.thresholds.empty()) cfg.thresholds = parse_count_list(flags.thresholds, "--thresholds");
    if (flags.workers) {
        cfg.workers = *flags.workers;
        if (cfg.workers > 1) cfg.warm_start = false;
    }
    try {
        cfg.validate();
    } catch (const DomainError& e) {
        throw InputError(e.what());
    }
    std::string model_name = flags.model;
    if (model_name.empty()) model_name = tree.get<std::string>("model", "setpar");
    ModelKind kind{};
    try {
        kind = parse_model_kind(model_name);
    } catch (const DomainError& e) {
        throw InputError(e.what());
    }

    const CountSeries series = read_counts(flags.data, flags.data_opts.selection());
    inputs.add(flags.data);

    const FitResult result = fit_model(kind, series, cfg);
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';

    json doc = fit_json(result, series);
    json config = fit_config_json(cfg);
    config["model"] = to_string(kind);
    config["data"] = flags.data_opts.to_json();
    doc["manifest"] = manifest.finish(config, inputs, std::nullopt);
    write_file(flags.out, doc.dump(2) + "\n");
    return kExitOk;
}

CountSeries load_matching(const std::string& path, const DataOptions& opts, Inputs& inputs) {
    CountSeries s = read_counts(path, opts.selection());
    inputs.add(path);
    return s;
}

int cmd_diagnose(const std::string& fit_path, const std::string& data_path, const DataOptions& opts,
                 const std::string& out_dir, std::size_t max_lag) {
    Manifest manifest("diagnose");
    Inputs inputs;
    const FitDocument fit = read_fit_document(fit_path);
    inputs.add(fit_path);
    const CountSeries series = load_matching(data_path, opts, inputs);
    if (series.size() != fit.n) {
        throw InputError("data has " + std::to_string(series.size()) + " observations but the fit used " +
                         std::to_string(fit.n));
    }
    if (max_lag >= series.size()) throw InputError("--max-lag must be smaller than the series length");

    const ResidualReport res = pearson_residuals(series, fit.params, fit.lambda_init);
    const fs::path dir(out_dir);

    std::ostringstream summary;
    summary << "n,mean,standard_error,skewness,excess_kurtosis\n"
            << series.size() << ',' << format_double(res.summary.mean) << ','
            << format_double(res.summary.standard_deviation) << ',' << format_double(res.summary.skewness)
            << ',' << format_double(res.summary.excess_kurtosis) << '\n';
    write_file(dir / "residual_summary.csv", summary.str());

    std::ostringstream resid;
    resid << "t,y,fitted,residual\n";
    std::ostringstream fitted;
    fitted << "t,observed,fitted\n";
    for (std::size_t t = 0; t < series.size(); ++t) {
        resid << (t + 1) << ',' << series[t] << ',' << format_double(res.fitted[t]) << ','
              << format_double(res.residuals[t]) << '\n';
        fitted << (t + 1) << ',' << series[t] << ',' << format_double(res.fitted[t]) << '\n';
    }
    write_file(dir / "residuals.csv", resid.str());
    write_file(dir / "fitted.csv", fitted.str());
    write_file(dir / "residual_acf.csv", acf_csv(acf(res.residuals, max_lag)));
    write_file(dir / "data_acf.csv", acf_csv(acf(series, max_lag)));

    json config = {{"max_lag", max_lag}, {"data", opts.to_json()}};
    write_manifest(dir / "manifest.json", manifest.finish(config, inputs, std::nullopt));
    return kExitOk;
}

int cmd_forecast(const std::string& fit_path, const std::string& history_path, const DataOptions& hist_opts,
                 const std::string& future_path, const DataOptions& fut_opts, const std::string& out_dir) {
    Manifest manifest("forecast");
    Inputs inputs;
    const FitDocument fit = read_fit_document(fit_path);
    inputs.add(fit_path);
    const CountSeries history = load_matching(history_path, hist_opts, inputs);
    const CountSeries future = load_matching(future_path, fut_opts, inputs);

    const std::vector<double> forecasts = one_step_forecasts(history, fit.params, fit.lambda_init, future);
    const double mse = mean_squared_error(future.values(), forecasts);
    const double in_mse = in_sample_mse(history, fit.params, fit.lambda_init);

    std::ostringstream table;
    table << "t,y,forecast,squared_error\n";
    for (std::size_t i = 0; i < future.size(); ++i) {
        const double e = static_cast<double>(future[i]) - forecasts[i];
        table << (history.size() + i + 1) << ',' << future[i] << ',' << format_double(forecasts[i]) << ','
              << format_double(e * e) << '\n';
    }
    const fs::path dir(out_dir);
    write_file(dir / "forecasts.csv", table.str());
    std::ostringstream summary;
    summary << "model,horizon,out_of_sample_mse,in_sample_mse\n"
            << to_string(fit.model) << ',' << future.size() << ',' << format_double(mse) << ','
            << format_double(in_mse) << '\n';
    write_file(dir / "summary.csv", summary.str());

    json config = {{"history", hist_opts.to_json()}, {"future", fut_opts.to_json()}};
    write_manifest(dir / "manifest.json", manifest.finish(config, inputs, std::nullopt));
    return kExitOk;
}

int cmd_mc(const std::string& config_path, const std::string& out_path, int workers,
           std::optional<std::uint64_t> seed_override, std::optional<std::size_t> reps_override,
           std::ostream& err) {
    Manifest manifest("mc");
    Inputs inputs;
    McDesign design = design_from(load_config(config_path));
    inputs.add(config_path);
    if (seed_override) design.base_seed = *seed_override;
    if (reps_override) {
        if (*reps_override == 0) throw InputError("--replications must be positive");
        design.replications = *reps_override;
    }
    if (workers < 1) throw InputError("--workers must be positive");
    for (const auto& w : design.validate()) err << "warning: " << w << '\n';

    const McSummary summary = run_mc(design, workers);
    for (const auto& cell : summary.cells) {
        if (!cell.valid) err << "warning: every replication failed at n = " << cell.n << '\n';
        else if (cell.failures > 0) err << "warning: " << cell.failures << " failed replications at n = " << cell.n << '\n';
    }
    write_file(out_path, mc_table_csv(summary));

    std::vector<std::size_t> sizes = design.sample_sizes;
    json config = {{"truth", params_json(design.truth)},
                   {"sizes", sizes},
                   {"replications", design.replications},
                   {"burn_in", design.burn_in},
                   {"workers", workers},
                   {"fit", fit_config_json(design.fit)}};
    write_manifest(sidecar(out_path), manifest.finish(config, inputs, design.base_seed));
    return kExitOk;
}

}  // namespace

FitDocument read_fit_document(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": not a fit result document: " + e.what());
    }
    try {
        FitDocument out;
        out.model = parse_model_kind(doc.at("model").get<std::string>());
        out.n = doc.at("n").get<std::size_t>();
        out.lambda_init = doc.at("lambda_init").get<double>();
        const json& p = doc.at("params");
        const auto regime = [](const json& j) {
            return RegimeParams{j.at("d").get<double>(), j.at("a").get<double>(), j.at("b").get<double>()};
        };
        out.params.r = p.at("r").is_null() ? SetparParams::kNoThreshold : p.at("r").get<Count>();
        out.params.lower = regime(p.at("lower"));
        out.params.upper = regime(p.at("upper"));
        out.params.validate();
        return out;
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": malformed fit result document: " + e.what());
    } catch (const DomainError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

std::string mc_table_csv(const McSummary& summary) {
    std::ostringstream out;
    out << "n,statistic,r,d1,a1,b1,d2,a2,b2,successes,failures,frac_r_true\n";
    for (const auto& cell : summary.cells) {
        const auto tail = [&] {
            return "," + std::to_string(cell.successes) + "," + std::to_string(cell.failures) + "," +
                   (cell.valid ? format_double(cell.frac_r_true) : "NA");
        };
        out << cell.n << ",mean";
        for (const double v : cell.mean_theta) out << ',' << (cell.valid ? format_double(v) : "NA");
        out << tail() << '\n';

        out << cell.n << ",n_cov";
        for (std::size_t j = 0; j < 7; ++j) out << ',' << (cell.n_cov ? format_double((*cell.n_cov)[j]) : "NA");
        out << tail() << '\n';

        out << cell.n << ",mean_g_inv,NA";
        for (const double v : cell.mean_g_hat_inv) out << ',' << (cell.valid ? format_double(v) : "NA");
        out << tail() << '\n';
    }
    return out.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulate, fit and diagnose self-excited threshold Poisson autoregressions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SETPAR_VERSION);

    auto* sim = app.add_subcommand("simulate", "Simulate a path; writes t,y,lambda");
    std::string sim_config;
    std::string sim_out;
    std::optional<std::uint64_t> sim_seed;
    sim->add_option("--config", sim_config, "Simulation config")->required();
    sim->add_option("--out", sim_out, "Output CSV")->required();
    sim->add_option("--seed", sim_seed, "Override the config seed");

    auto* fitc = app.add_subcommand("fit", "Fit par, setpar or setpar-b2zero to a counts file");
    FitFlags ff;
    fitc->add_option("--data", ff.data, "Counts file")->required();
    fitc->add_option("--config", ff.config, "Fit config");
    fitc->add_option("--out", ff.out, "Result document (JSON)")->required();
    fitc->add_option("--model", ff.model, "par | setpar | setpar-b2zero");
    fitc->add_option("--thresholds", ff.thresholds, "Explicit threshold candidates, comma separated");
    fitc->add_option("--alpha1", ff.alpha1, "Lower quantile level for the threshold range");
    fitc->add_option("--alpha2", ff.alpha2, "Upper quantile level for the threshold range");
    fitc->add_option("--lambda-init", ff.lambda_init, "mean, first or a positive number (default: mean)");
    fitc->add_option("--workers", ff.workers, "Threads for the threshold grid (disables warm starts)");
    ff.data_opts.attach(fitc);

    auto* diag = app.add_subcommand("diagnose", "Residual, ACF and fitted-vs-observed tables");
    std::string diag_fit;
    std::string diag_data;
    std::string diag_out;
    std::size_t max_lag = 20;
    DataOptions diag_opts;
    diag->add_option("--fit", diag_fit, "Fit result document")->required();
    diag->add_option("--data", diag_data, "Counts file used for the fit")->required();
    diag->add_option("--out-dir", diag_out, "Directory for the tables")->required();
    diag->add_option("--max-lag", max_lag, "Largest ACF lag");
    diag_opts.attach(diag);

    auto* fc = app.add_subcommand("forecast", "One-step forecasts and out-of-sample MSE");
    std::string fc_fit;
    std::string fc_hist;
    std::string fc_future;
    std::string fc_out;
    DataOptions hist_opts;
    DataOptions fut_opts;
    fc->add_option("--fit", fc_fit, "Fit result document")->required();
    fc->add_option("--history", fc_hist, "Counts the fit was estimated on")->required();
    fc->add_option("--future", fc_future, "Counts that follow the history")->required();
    fc->add_option("--out-dir", fc_out, "Directory for the tables")->required();
    hist_opts.attach(fc, "history-");
    fut_opts.attach(fc, "future-");

    auto* mc = app.add_subcommand("mc", "Monte Carlo study of the estimator");
    std::string mc_config;
    std::string mc_out;
    int workers = 1;
    std::optional<std::uint64_t> mc_seed;
    std::optional<std::size_t> mc_reps;
    mc->add_option("--config", mc_config, "Design config")->required();
    mc->add_option("--out", mc_out, "Output CSV")->required();
    mc->add_option("--workers", workers, "Worker threads; results do not depend on it");
    mc->add_option("--seed", mc_seed, "Override the design seed");
    mc->add_option("--replications", mc_reps, "Override the replication count");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << SETPAR_VERSION << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }

    try {
        if (*sim) return cmd_simulate(sim_config, sim_out, sim_seed);
        if (*fitc) return cmd_fit(ff, err);
        if (*diag) return cmd_diagnose(diag_fit, diag_data, diag_opts, diag_out, max_lag);
        if (*fc) return cmd_forecast(fc_fit, fc_hist, hist_opts, fc_future, fut_opts, fc_out);
        if (*mc) return cmd_mc(mc_config, mc_out, workers, mc_seed, mc_reps, err);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const IllPosedRegime& e) {
        err << "estimation failed: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const EstimationError& e) {
        err << "estimation failed: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const NumericError& e) {
        err << "estimation failed: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}

}  // namespace setpar::app
