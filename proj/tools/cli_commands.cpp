#include "cli_commands.hpp"

#include "config.hpp"

#include "s3t/calibration.hpp"
#include "s3t/csv.hpp"
#include "s3t/detectors.hpp"
#include "s3t/error.hpp"
#include "s3t/parallel.hpp"
#include "s3t/simulation.hpp"
#include "s3t/spatial.hpp"
#include "s3t/stream_network.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

namespace s3t::cli {

namespace {

using json = nlohmann::json;

constexpr const char* kVersion = S3T_VERSION;

std::string dashed(std::string name) {
    for (auto& ch : name)
        if (ch == '_') ch = '-';
    return name;
}

// ---- model assembly --------------------------------------------------------

Matrix read_matrix_csv(const std::string& path) {
    const auto t = csv::read_file(path);
    const auto n = static_cast<Eigen::Index>(t.header.size());
    if (static_cast<Eigen::Index>(t.rows.size()) != n)
        throw InputError(path + ": expected a square matrix with " + std::to_string(n) + " rows");
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = t.rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != n)
            throw InputError(path + ": row " + std::to_string(i + 2) + " has " + std::to_string(row.size()) +
                             " fields, expected " + std::to_string(n));
        for (Eigen::Index j = 0; j < n; ++j)
            m(i, j) = csv::parse_double(row[static_cast<std::size_t>(j)], path + " row " + std::to_string(i + 2));
    }
    return m;
}

SensorLayout layout_from(const Config& c) {
    if (c.has("layout")) return SensorLayout::from_csv(c.str("layout"));
    const auto& spec = c.str("lattice");
    const auto x = spec.find('x');
    if (x == std::string::npos) throw InputError("config: 'model.lattice' must look like ROWSxCOLS");
    const long rows = csv::parse_long(spec.substr(0, x), "model.lattice rows");
    const long cols = csv::parse_long(spec.substr(x + 1), "model.lattice cols");
    return SensorLayout::lattice(static_cast<int>(rows), static_cast<int>(cols), c.number("spacing"));
}

StreamNetwork network_from(const Config& c) { return StreamNetwork::from_csv(c.str("segments"), c.str("locations")); }

TailUpParams tailup_from(const Config& c) {
    TailUpParams t;
    t.zeta1 = c.number("zeta1");
    t.zeta2 = c.number("zeta2");
    t.nugget = c.number("nugget");
    return t;
}

Matrix lambda_from(const Config& c) {
    const auto& kind = c.str("spatial");
    if (kind == "identity") {
        const long p = c.integer("p");
        if (p < 1) throw InputError("config: 'model.p' must be positive");
        return Matrix::Identity(p, p);
    }
    if (kind == "tailup") return tailup_covariance(network_from(c), tailup_from(c));
    SpatialModel model = SpatialModel::exponential(1.0);
    if (kind == "spherical") model = SpatialModel::spherical(c.number("rho"));
    else if (kind == "exponential") model = SpatialModel::exponential(c.number("rho"));
    else if (kind == "matern") model = SpatialModel::matern(c.number("rho"), c.number("matern_order"));
    else throw InputError("config: unknown 'model.spatial' value '" + kind + "'");
    return build_lambda(model, layout_from(c));
}

ParameterGrid grid_from(const Config& c) {
    const auto thetas = ParameterGrid::range(c.number("theta_min"), c.number("theta_max"), c.number("theta_step"));
    const auto& kind = c.str("temporal");
    if (kind == "var1") return ParameterGrid::var1(thetas);
    if (kind == "varma11")
        return ParameterGrid::varma11(thetas,
                                      ParameterGrid::range(c.number("eta_min"), c.number("eta_max"), c.number("eta_step")));
    throw InputError("config: unknown 'model.temporal' value '" + kind + "'");
}

ModelSpec spec_from(const Config& c) {
    ModelSpec s;
    s.lambda = lambda_from(c);
    const auto p = s.lambda.rows();
    if (c.str("sigma") == "identity") {
        s.sigma = c.number("sigma_scale") * Matrix::Identity(p, p);
    } else {
        s.sigma = read_matrix_csv(c.str("sigma"));
        if (s.sigma.rows() != p)
            throw ShapeError("sigma has dimension " + std::to_string(s.sigma.rows()) + " but the layout has p = " +
                             std::to_string(p));
    }
    s.grid = grid_from(c);
    s.validate();
    return s;
}

TemporalModel signal_model(const Config& c) {
    return c.str("temporal") == "varma11" ? TemporalModel::varma11(c.number("signal_theta"), c.number("signal_eta"))
                                          : TemporalModel::var1(c.number("signal_theta"));
}

SignalParams signal_from(const Config& c, const Matrix& lambda) {
    SignalParams sp;
    sp.gamma = c.number("gamma");
    sp.mu = c.number("mu");
    sp.temporal = signal_model(c);
    sp.lambda = lambda;
    sp.change_time = c.integer("change");
    sp.burn_in = static_cast<int>(c.integer("burn_in"));
    return sp;
}

CalibrationOptions calibration_from(const Config& c) {
    CalibrationOptions o;
    const auto& form = c.str("form");
    if (form == "hessian") o.form = IntegrandForm::Hessian;
    else if (form == "curvature") o.form = IntegrandForm::Curvature;
    else throw InputError("config: 'detection.form' must be hessian or curvature");
    o.quadrature_refinement = static_cast<int>(c.integer("refinement"));
    return o;
}

bool is_window(MonitorMethod m) { return m == MonitorMethod::S3T || m == MonitorMethod::QuadraticScore; }

// ---- output ----------------------------------------------------------------

class Sink {
public:
    Sink(const Config& c, std::ostream& fallback) : stream_(&fallback) {
        const auto& path = c.str("output");
        if (path != "-") {
            file_.open(path);
            if (!file_) throw InputError("cannot open output file '" + path + "'");
            stream_ = &file_;
        }
        stream_->precision(17);
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

json envelope(const std::string& command, const Config& c) {
    json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["config"] = c.echo();
    return j;
}

bool want_csv(const Config& c) {
    const auto& f = c.str("format");
    if (f != "json" && f != "csv") throw InputError("config: 'io.format' must be json or csv");
    return f == "csv";
}

void write_json(std::ostream& os, const json& j) { os << j.dump(2) << '\n'; }

// Rows of numbers from CSV; a leading `t` column is dropped.
Series read_series(const csv::Table& t, Eigen::Index p) {
    const std::size_t skip = !t.header.empty() && t.header.front() == "t" ? 1 : 0;
    const auto width = static_cast<Eigen::Index>(t.header.size() - skip);
    if (width != p)
        throw ShapeError(t.source + ": " + std::to_string(width) + " value columns, model has p = " + std::to_string(p));
    Series y(static_cast<Eigen::Index>(t.rows.size()), p);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        if (row.size() != t.header.size())
            throw ShapeError(t.source + ": row " + std::to_string(i + 2) + " has " + std::to_string(row.size()) +
                             " fields, expected " + std::to_string(t.header.size()));
        for (Eigen::Index j = 0; j < p; ++j)
            y(static_cast<Eigen::Index>(i), j) =
                csv::parse_double(row[skip + static_cast<std::size_t>(j)], t.source + " row " + std::to_string(i + 2));
    }
    return y;
}

std::string input_path(const Config& c) { return c.has("input") ? c.str("input") : "-"; }

csv::Table read_input(const Config& c, std::istream& in) {
    const auto path = input_path(c);
    if (path == "-") return csv::read(in, "<stdin>");
    return csv::read_file(path);
}

// ---- commands --------------------------------------------------------------

int cmd_calibrate(const Config& c, std::ostream& out) {
    const auto spec = spec_from(c);
    const bool sl = c.has("alpha");
    if (sl == c.has("arl")) throw InputError("config: set exactly one of 'detection.alpha' or 'detection.arl'");
    const Calibrator cal(spec, calibration_from(c));
    CalibrationResult r;
    json target;
    if (sl) {
        const int N = static_cast<int>(c.integer("horizon"));
        const double b = cal.find_threshold_sl(c.number("alpha"), N);
        r = cal.significance_level(b, N);
        target = {{"kind", "significance_level"}, {"value", c.number("alpha")}, {"horizon", N}};
    } else {
        const int omega = static_cast<int>(c.integer("omega"));
        const double b = cal.find_threshold_arl(c.number("arl"), omega);
        r = cal.arl(b, omega);
        target = {{"kind", "average_run_length"}, {"value", c.number("arl")}, {"omega", omega}};
    }
    Sink sink(c, out);
    if (want_csv(c)) {
        *sink << "tau,contribution\n";
        const int first = sl ? 1 : static_cast<int>(c.integer("omega"));
        for (std::size_t i = 0; i < r.per_tau_contributions.size(); ++i)
            *sink << first + static_cast<int>(i) << ',' << r.per_tau_contributions[i] << '\n';
        return kOk;
    }
    auto j = envelope("calibrate", c);
    j["target"] = target;
    j["b"] = r.threshold;
    j["achieved"] = r.achieved;
    j["per_tau_contributions"] = r.per_tau_contributions;
    write_json(*sink, j);
    return kOk;
}

int cmd_detect(const Config& c, std::istream& in, std::ostream& out) {
    const auto spec = spec_from(c);
    const auto y = read_series(read_input(c, in), spec.p());
    const auto N = static_cast<int>(y.rows());
    if (N < 1) throw InputError("detect: input has no observations");
    if (c.has("b") == c.has("alpha")) throw InputError("config: set exactly one of 'detection.b' or 'detection.alpha'");
    const auto method = parse_method(c.str("method"));
    if (!is_window(method)) throw InputError("detect: method must be s3t or quadratic");
    double b = 0.0;
    std::string source = "given";
    if (c.has("b")) {
        b = c.number("b");
    } else {
        b = Calibrator(spec, calibration_from(c)).find_threshold_sl(c.number("alpha"), N);
        source = "calibrated";
    }
    const StatisticPlan plan(spec, N);
    const auto kind = method == MonitorMethod::S3T ? StatKind::S3T : StatKind::QuadraticScore;
    const auto d = offline_detect(y, plan, b, kind, want_csv(c));
    Sink sink(c, out);
    if (want_csv(c)) {
        *sink << "tau";
        for (std::size_t k = 0; k < spec.grid.size(); ++k) {
            *sink << ",theta=" << spec.grid.primary(k);
            if (spec.grid.kind() == TemporalKind::VARMA11) *sink << ";eta=" << spec.grid.secondary(k);
        }
        *sink << '\n';
        for (int tau = 1; tau <= N; ++tau) {
            *sink << tau;
            for (Eigen::Index k = 0; k < d.per_cell_stats->cols(); ++k) *sink << ',' << (*d.per_cell_stats)(tau - 1, k);
            *sink << '\n';
        }
        return kOk;
    }
    auto j = envelope("detect", c);
    j["statistic"] = method_name(method);
    j["n_rows"] = N;
    j["threshold"] = b;
    j["threshold_source"] = source;
    j["detected"] = d.detected;
    j["max_stat"] = d.max_stat;
    j["tau_hat"] = d.tau_hat;
    j["theta_hat"] = d.theta_hat;
    if (spec.grid.kind() == TemporalKind::VARMA11) j["eta_hat"] = d.eta_hat;
    j["change_index"] = d.change_index;
    write_json(*sink, j);
    return kOk;
}

int cmd_monitor(const Config& c, std::istream& in, std::ostream& out, std::ostream& err) {
    const auto spec = spec_from(c);
    const auto method = parse_method(c.str("method"));
    const int omega = is_window(method) ? static_cast<int>(c.integer("omega")) : 1;
    if (c.has("b") == c.has("arl")) throw InputError("config: set exactly one of 'detection.b' or 'detection.arl'");
    double b = 0.0;
    if (c.has("b")) {
        b = c.number("b");
    } else {
        if (method != MonitorMethod::S3T)
            throw InputError("monitor: analytic ARL calibration covers s3t only; give 'detection.b' for " +
                             std::string(method_name(method)));
        b = Calibrator(spec, calibration_from(c)).find_threshold_arl(c.number("arl"), omega);
    }
    auto plan = std::make_shared<const StatisticPlan>(spec, omega);
    Monitor mon(plan, method, b, c.number("mcusum_k"));
    const bool csv_out = want_csv(c);

    std::ifstream file;
    std::istream* src = &in;
    const auto path = input_path(c);
    if (path != "-") {
        file.open(path);
        if (!file) throw InputError("cannot open input file '" + path + "'");
        src = &file;
    }
    const std::string source = path == "-" ? "<stdin>" : path;

    Sink sink(c, out);
    auto start = envelope("monitor", c);
    start["event"] = "start";
    start["threshold"] = b;
    start["omega"] = omega;
    if (csv_out) *sink << "t,stat,tau,theta,alarm\n";
    else *sink << start.dump() << '\n';

    std::string line;
    std::vector<std::string> header;
    std::size_t skip = 0;
    long line_no = 0;
    long n_obs = 0;
    long n_eval = 0;
    std::vector<double> y(static_cast<std::size_t>(spec.p()));
    while (std::getline(*src, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = csv::split_line(line);
        if (header.empty()) {
            header = std::move(fields);
            skip = header.front() == "t" ? 1 : 0;
            if (static_cast<Eigen::Index>(header.size() - skip) != spec.p())
                throw ShapeError(source + ": " + std::to_string(header.size() - skip) +
                                 " value columns, model has p = " + std::to_string(spec.p()));
            continue;
        }
        const std::string ctx = source + " line " + std::to_string(line_no);
        if (fields.size() != header.size())
            throw ShapeError(ctx + ": " + std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()));
        for (std::size_t j = 0; j < y.size(); ++j) y[j] = csv::parse_double(fields[skip + j], ctx);
        ++n_obs;
        const double t = skip ? csv::parse_double(fields[0], ctx) : static_cast<double>(n_obs);
        const auto step = mon.step(y);
        if (!step) continue;
        ++n_eval;
        if (csv_out) {
            *sink << t << ',' << step->stat << ',' << step->tau << ',' << step->theta << ',' << (step->alarm ? 1 : 0)
                  << '\n';
        } else {
            json j = {{"t", t}, {"stat", step->stat}, {"tau", step->tau}, {"theta", step->theta},
                      {"method", method_name(method)}};
            *sink << j.dump() << '\n';
        }
        if (step->alarm) {
            if (!csv_out) {
                json a = {{"event", "alarm"}, {"t", t},           {"stat", step->stat},
                          {"theta", step->theta}, {"method", method_name(method)}, {"observations", n_obs}};
                *sink << a.dump() << '\n';
            }
            return kOk;
        }
    }
    if (header.empty()) throw InputError(source + ": empty stream (header row required)");
    if (n_eval == 0)
        err << "warning: stream ended during warm-up (" << n_obs << " observations, window " << omega
            << "); no statistic was evaluated\n";
    if (!csv_out) {
        json e = {{"event", "end"}, {"alarm", false}, {"observations", n_obs}, {"evaluated", n_eval}};
        *sink << e.dump() << '\n';
    }
    return kNoAlarm;
}

json report_json(const ExperimentReport& r) {
    json j;
    j["kind"] = r.kind;
    j["n_reps"] = r.n_reps;
    j["estimate"] = r.estimate;
    j["std_error"] = r.std_error;
    j["seed"] = r.seed;
    j["threshold"] = r.threshold;
    j["n_censored"] = r.n_censored;
    j["warnings"] = r.warnings;
    return j;
}

int cmd_simulate(const Config& c, std::ostream& out, std::ostream& err) {
    const auto spec = spec_from(c);
    const auto& kind = c.str("experiment");
    const bool csv_out = want_csv(c);
    SimOptions so;
    so.n_reps = c.integer("reps");
    so.seed = static_cast<std::uint64_t>(c.integer("seed"));
    so.keep_samples = csv_out;
    OnlineOptions on;
    on.method = parse_method(c.str("method"));
    on.omega = static_cast<int>(c.integer("omega"));
    on.mcusum_k = c.number("mcusum_k");
    on.max_horizon = c.integer("max_horizon");
    on.prefill = c.flag("prefill");

    Sink sink(c, out);
    auto j = envelope("simulate", c);
    auto emit_samples = [&](const std::vector<double>& samples) {
        *sink << "rep,value\n";
        for (std::size_t i = 0; i < samples.size(); ++i) *sink << i << ',' << samples[i] << '\n';
    };

    if (kind == "series") {
        const auto sp = signal_from(c, spec.lambda);
        auto rng = make_rng(so.seed, 11, 0);
        const Series y = gen_series(spec.sigma, sp, c.integer("length"), rng);
        *sink << 't';
        for (Eigen::Index k = 0; k < y.cols(); ++k) *sink << ",v" << k + 1;
        *sink << '\n';
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            *sink << i + 1;
            for (Eigen::Index k = 0; k < y.cols(); ++k) *sink << ',' << y(i, k);
            *sink << '\n';
        }
        return kOk;
    }
    if (kind == "sl") {
        const int N = static_cast<int>(c.integer("horizon"));
        const auto maxima = simulate_offline_maxima(spec, N, so);
        if (csv_out) {
            emit_samples(maxima);
            return kOk;
        }
        json rows = json::array();
        for (double b : c.numbers("b")) {
            long hits = 0;
            for (double m : maxima) hits += m >= b;
            const double p = static_cast<double>(hits) / static_cast<double>(maxima.size());
            rows.push_back({{"b", b}, {"estimate", p}, {"std_error", std::sqrt(p * (1 - p) / maxima.size())}});
        }
        j["kind"] = "significance_level";
        j["n_reps"] = so.n_reps;
        j["seed"] = so.seed;
        j["horizon"] = N;
        j["levels"] = rows;
        write_json(*sink, j);
        return kOk;
    }
    if (kind == "calibrate") {
        const double b = calibrate_threshold_by_simulation(c.number("arl"), spec, on, so);
        j["kind"] = "simulated_threshold";
        j["method"] = method_name(on.method);
        j["target_arl"] = c.number("arl");
        j["b"] = b;
        j["n_reps"] = so.n_reps;
        j["seed"] = so.seed;
        write_json(*sink, j);
        return kOk;
    }
    ExperimentReport r;
    if (kind == "arl") r = estimate_arl(c.number("b"), spec, on, so);
    else if (kind == "edd") r = estimate_edd(c.number("b"), spec, signal_from(c, spec.lambda), on, so);
    else throw InputError("config: unknown 'experiment.experiment' value '" + kind + "'");
    for (const auto& w : r.warnings) err << "warning: " << w << '\n';
    if (csv_out) {
        emit_samples(r.samples);
        return kOk;
    }
    j.update(report_json(r));
    j["method"] = method_name(on.method);
    write_json(*sink, j);
    return kOk;
}

int cmd_river_cov(const Config& c, std::ostream& out) {
    const auto net = network_from(c);
    const Matrix cov = tailup_covariance(net, tailup_from(c));
    Sink sink(c, out);
    const auto n = net.num_locations();
    if (want_csv(c)) {
        *sink << "location";
        for (std::size_t j = 0; j < n; ++j) *sink << ',' << net.location(j).id;
        *sink << '\n';
        for (std::size_t i = 0; i < n; ++i) {
            *sink << net.location(i).id;
            for (std::size_t j = 0; j < n; ++j)
                *sink << ',' << cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            *sink << '\n';
        }
        return kOk;
    }
    auto j = envelope("river-cov", c);
    json ids = json::array();
    json rows = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(net.location(i).id);
        json row = json::array();
        for (std::size_t k = 0; k < n; ++k) row.push_back(cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
        rows.push_back(row);
    }
    j["locations"] = ids;
    j["covariance"] = rows;
    write_json(*sink, j);
    return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spatio-temporal change detection: calibration, detection, monitoring and simulation", "s3t"};
    app.set_version_flag("--version", std::string("s3t ") + kVersion);
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "INI config file; flags override its values")->check(CLI::ExistingFile);

    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::Option*> flag_opts;
    std::map<std::string, CLI::Option_group*> groups;
    for (const auto& k : config_keys()) {
        auto& g = groups[k.section];
        if (!g) g = app.add_option_group(std::string("[") + k.section + "]");
        std::string help = k.help;
        if (*k.fallback) help += " (default " + std::string(k.fallback) + ")";
        flag_opts[k.name] = g->add_option("--" + dashed(k.name), flag_values[k.name], help);
    }

    struct Command {
        const char* name;
        const char* help;
    };
    const Command commands[] = {
        {"calibrate", "threshold for a target significance level (alpha) or ARL (arl)"},
        {"detect", "offline detection on a CSV series (b, or alpha to calibrate)"},
        {"monitor", "online monitoring of a CSV stream; JSON line per evaluated step"},
        {"simulate", "Monte Carlo experiments: sl, arl, edd, calibrate, series"},
        {"river-cov", "tail-up covariance of stream-network locations"},
    };
    for (const auto& cmd : commands) app.add_subcommand(cmd.name, cmd.help)->fallthrough();

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        Config config;
        if (!config_path.empty()) config.load_ini(config_path);
        for (const auto& [name, opt] : flag_opts)
            if (opt->count() > 0) config.set(name, flag_values[name]);
        set_default_threads(static_cast<unsigned>(config.integer("threads")));

        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "calibrate") return cmd_calibrate(config, out);
        if (name == "detect") return cmd_detect(config, in, out);
        if (name == "monitor") return cmd_monitor(config, in, out, err);
        if (name == "simulate") return cmd_simulate(config, out, err);
        return cmd_river_cov(config, out);
    } catch (const SaturationError& e) {
        err << "error: " << e.what() << '\n';
        return kSaturation;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

}  // namespace s3t::cli
