#include "config.hpp"

#include "s3t/csv.hpp"
#include "s3t/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>

namespace s3t::cli {

const std::vector<KeySpec>& config_keys() {
    static const std::vector<KeySpec> keys = {
        {"model", "sigma", "identity", "noise covariance: 'identity' or a CSV matrix file with a header row"},
        {"model", "sigma_scale", "1", "multiplier applied to an identity sigma"},
        {"model", "spatial", "spherical", "signal correlation: spherical, exponential, matern, tailup or identity"},
        {"model", "rho", "0.3", "spatial correlation parameter"},
        {"model", "matern_order", "1.5", "Matern smoothness v"},
        {"model", "lattice", "1x2", "sensor lattice ROWSxCOLS when no layout file is given"},
        {"model", "spacing", "1", "lattice spacing"},
        {"model", "layout", "", "sensor layout CSV (columns x,y)"},
        {"model", "p", "", "dimension when spatial = identity"},
        {"model", "segments", "", "stream segments CSV (id,downstream_id,length,weight)"},
        {"model", "locations", "", "stream locations CSV (id,segment_id,offset)"},
        {"model", "zeta1", "1", "tail-up partial sill"},
        {"model", "zeta2", "1", "tail-up range"},
        {"model", "nugget", "0", "tail-up nugget"},
        {"model", "temporal", "var1", "signal dynamics: var1 or varma11"},
        {"model", "theta_min", "0.1", "grid minimum of theta (phi for varma11)"},
        {"model", "theta_max", "0.9", "grid maximum of theta"},
        {"model", "theta_step", "0.1", "grid step of theta"},
        {"model", "eta_min", "0", "grid minimum of eta (varma11)"},
        {"model", "eta_max", "0", "grid maximum of eta"},
        {"model", "eta_step", "0.1", "grid step of eta"},
        {"detection", "method", "s3t", "statistic: s3t, quadratic, mcusum or hotelling"},
        {"detection", "b", "", "threshold (simulate sl accepts a comma list)"},
        {"detection", "alpha", "", "target significance level (offline)"},
        {"detection", "arl", "", "target average run length (online)"},
        {"detection", "horizon", "50", "offline horizon N"},
        {"detection", "omega", "50", "online window"},
        {"detection", "mcusum_k", "0.5", "MCUSUM reference value k"},
        {"detection", "form", "hessian", "tail approximation: hessian or curvature"},
        {"detection", "refinement", "8", "trapezoid panels per grid interval"},
        {"experiment", "experiment", "sl", "simulate kind: sl, arl, edd, calibrate or series"},
        {"experiment", "reps", "1000", "Monte Carlo replications"},
        {"experiment", "seed", "1", "random seed"},
        {"experiment", "gamma", "0", "signal magnitude"},
        {"experiment", "mu", "0", "signal mean level"},
        {"experiment", "signal_theta", "0.5", "signal theta (phi)"},
        {"experiment", "signal_eta", "0", "signal eta (varma11)"},
        {"experiment", "change", "0", "rows before the change (series)"},
        {"experiment", "length", "100", "rows to generate (series)"},
        {"experiment", "max_horizon", "10000", "online censoring horizon"},
        {"experiment", "prefill", "true", "fill the window with null data before counting time"},
        {"experiment", "burn_in", "200", "signal burn-in steps"},
        {"io", "input", "", "input CSV path, '-' or unset for standard input"},
        {"io", "output", "-", "output path, '-' for standard output"},
        {"io", "format", "json", "output format: json or csv"},
        {"io", "threads", "0", "worker threads (0 = all cores)"},
    };
    return keys;
}

Config::Config() {
    for (const auto& k : config_keys())
        if (*k.fallback) values_[k.name] = k.fallback;
}

const KeySpec& Config::spec(const std::string& name) const {
    const auto& keys = config_keys();
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const KeySpec& k) { return name == k.name; });
    if (it == keys.end()) throw InputError("unknown config key '" + name + "'");
    return *it;
}

void Config::load_ini(const std::string& path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw InputError("config: " + std::string(e.what()));
    }
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw InputError("config: key '" + section + "' must sit inside a section");
        for (const auto& [key, value] : body) {
            const auto& k = spec(key);
            if (section != k.section)
                throw InputError("config: key '" + key + "' belongs in [" + k.section + "], found in [" + section +
                                 "]");
            values_[key] = value.data();
        }
    }
}

void Config::set(const std::string& name, const std::string& value) {
    spec(name);
    values_[name] = value;
}

bool Config::has(const std::string& name) const {
    spec(name);
    const auto it = values_.find(name);
    return it != values_.end() && !it->second.empty();
}

const std::string& Config::str(const std::string& name) const {
    if (!has(name)) throw InputError("config: '" + std::string(spec(name).section) + "." + name + "' is required");
    return values_.at(name);
}

double Config::number(const std::string& name) const {
    return csv::parse_double(str(name), std::string(spec(name).section) + "." + name);
}

long Config::integer(const std::string& name) const {
    return csv::parse_long(str(name), std::string(spec(name).section) + "." + name);
}

bool Config::flag(const std::string& name) const {
    const auto& v = str(name);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InputError("config: '" + std::string(spec(name).section) + "." + name + "' must be true or false");
}

std::vector<double> Config::numbers(const std::string& name) const {
    std::vector<double> out;
    for (const auto& f : csv::split_line(str(name)))
        out.push_back(csv::parse_double(f, std::string(spec(name).section) + "." + name));
    return out;
}

std::optional<double> Config::maybe_number(const std::string& name) const {
    if (!has(name)) return std::nullopt;
    return number(name);
}

std::map<std::string, std::string> Config::echo() const {
    std::map<std::string, std::string> out;
    for (const auto& [name, value] : values_)
        if (!value.empty()) out[std::string(spec(name).section) + "." + name] = value;
    return out;
}

}  // namespace s3t::cli
