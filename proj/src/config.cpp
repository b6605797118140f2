#include "adaptz/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cctype>
#include <fstream>
#include <sstream>

#include "adaptz/error.hpp"

namespace adaptz {

namespace {

struct NamedEstimator {
    EstimatorId id;
    const char* name;
};

constexpr NamedEstimator kEstimators[] = {
    {EstimatorId::AdaptzPL, "adaptz-pl"},       {EstimatorId::PLDirection, "pl-direction"},
    {EstimatorId::AdaptzGLM, "adaptz-glm"},     {EstimatorId::GLMDirection, "glm-direction"},
    {EstimatorId::UnweightedZ, "unweighted-z"}, {EstimatorId::OLS, "ols"},
    {EstimatorId::MLE, "mle"},
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

double parse_double(const std::string& key, const std::string& v) {
    const std::string s = trim(v);
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(x))
        throw ConfigError("setting '" + key + "' expects a number, got '" + v + "'");
    return x;
}

long long parse_int(const std::string& key, const std::string& v) {
    const std::string s = trim(v);
    char* end = nullptr;
    errno = 0;
    const long long x = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
        throw ConfigError("setting '" + key + "' expects an integer, got '" + v + "'");
    return x;
}

int parse_int32(const std::string& key, const std::string& v) {
    const long long x = parse_int(key, v);
    if (x < -2147483647LL || x > 2147483647LL) throw ConfigError("setting '" + key + "' is out of range");
    return static_cast<int>(x);
}

bool parse_bool(const std::string& key, const std::string& v) {
    const std::string s = lower(trim(v));
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ConfigError("setting '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

VectorXd parse_vector(const std::string& key, const std::string& v) {
    const auto items = split_list(v);
    VectorXd out(static_cast<Eigen::Index>(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i) out[static_cast<Eigen::Index>(i)] = parse_double(key, items[i]);
    return out;
}

// Either a comma list or `start:step:stop`.
std::vector<double> parse_levels(const std::string& key, const std::string& v) {
    std::vector<double> out;
    if (v.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(item);
        if (parts.size() != 3) throw ConfigError("setting '" + key + "' expects start:step:stop");
        const double a = parse_double(key, parts[0]), step = parse_double(key, parts[1]),
                     b = parse_double(key, parts[2]);
        if (!(step > 0.0) || b < a) throw ConfigError("setting '" + key + "' has an empty range");
        const int count = static_cast<int>(std::floor((b - a) / step + 1e-9)) + 1;
        for (int i = 0; i < count; ++i) out.push_back(std::round((a + i * step) * 1e12) / 1e12);
    } else {
        for (const auto& item : split_list(v)) out.push_back(parse_double(key, item));
    }
    return out;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_vector(const VectorXd& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s;
}

const char* pilot_name(EstPilot p) {
    switch (p) {
        case EstPilot::Auto: return "auto";
        case EstPilot::OLS: return "ols";
        case EstPilot::Lasso: return "lasso";
        case EstPilot::LogisticMLE: return "mle";
        case EstPilot::GlmLasso: return "glm-lasso";
    }
    return "auto";
}

}  // namespace

const char* estimator_name(EstimatorId id) {
    for (const auto& e : kEstimators)
        if (e.id == id) return e.name;
    return "unknown";
}

std::optional<EstimatorId> parse_estimator(const std::string& name) {
    const std::string key = lower(trim(name));
    for (const auto& e : kEstimators)
        if (key == e.name) return e.id;
    return std::nullopt;
}

std::vector<double> default_levels() {
    std::vector<double> out;
    for (int k = 80; k <= 98; k += 2) out.push_back(k / 100.0);
    return out;
}

std::vector<std::string> preset_names() { return {"fig2", "fig3", "fig4", "fig1-desk", "fig4-desk"}; }

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig cfg;
    cfg.preset = name;
    cfg.levels = default_levels();
    GenConfig& g = cfg.gen;
    const std::vector<EstimatorId> linear = {EstimatorId::AdaptzPL, EstimatorId::PLDirection,
                                             EstimatorId::UnweightedZ, EstimatorId::OLS};
    if (name == "fig2") {
        g.d0 = 2, g.d1 = 5, g.n = 500, g.n1 = 125, g.C = 2.0, g.t = 0.2;
        g.pilot_kind = GenPilot::OLS;
        cfg.reps = 1000;
        cfg.estimators = linear;
    } else if (name == "fig3" || name == "fig1-desk") {
        g.d0 = 2, g.d1 = 1000, g.n = 950, g.n1 = 475, g.C = 16.0, g.t = 0.2;
        g.pilot_kind = GenPilot::Lasso;
        g.beta_sparse = true;
        g.sparsity = 2;
        cfg.reps = 1000;
        cfg.estimators = linear;
        // the full-sample OLS fit is not identified with d0 + d1 > n
        if (name == "fig3") cfg.estimators.pop_back();
        if (name == "fig1-desk") {
            g.d1 = 200, g.n = 400, g.n1 = 200;
            g.refit_every = 25;
            cfg.reps = 200;
        }
    } else if (name == "fig4" || name == "fig4-desk") {
        g.d0 = 2, g.d1 = 20, g.n = 2000, g.n1 = 1000, g.C = 8.0, g.t = 0.1;
        g.link = LinkKind::logistic();
        cfg.reps = 1000;
        cfg.estimators = {EstimatorId::AdaptzGLM, EstimatorId::GLMDirection, EstimatorId::MLE};
        if (name == "fig4-desk") {
            g.n = 1000, g.n1 = 500;
            cfg.reps = 300;
        }
    } else {
        std::string known;
        for (const auto& p : preset_names()) known += (known.empty() ? "" : ", ") + p;
        throw UsageError("unknown preset '" + name + "' (known: " + known + ")");
    }
    cfg.direction = VectorXd::Unit(g.d0, 0);
    return cfg;
}

void ExperimentConfig::validate() const {
    gen.validate();
    if (reps < 1) throw ConfigError("reps must be at least 1");
    if (estimators.empty()) throw ConfigError("no estimators selected");
    if (workers < 0) throw ConfigError("workers must be nonnegative");
    if (levels.empty()) throw ConfigError("level grid is empty");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0 && levels[i] < 1.0)) throw ConfigError("levels must lie in (0, 1)");
        if (i > 0 && !(levels[i] > levels[i - 1])) throw ConfigError("levels must be strictly increasing");
    }
    if (direction.size() != gen.d0) throw ConfigError("direction must have d0 entries");
    if (std::abs(direction.norm() - 1.0) > 1e-10) throw ConfigError("direction must have unit norm");
    const bool logistic = !gen.link.is_identity();
    for (EstimatorId id : estimators) {
        const bool pl_only = id == EstimatorId::AdaptzPL || id == EstimatorId::PLDirection ||
                             id == EstimatorId::UnweightedZ || id == EstimatorId::OLS;
        if (logistic && pl_only)
            throw ConfigError(std::string("estimator '") + estimator_name(id) + "' needs the identity link");
        if (id == EstimatorId::MLE && !logistic) throw ConfigError("estimator 'mle' needs the logistic link");
    }
    if (logistic && (pilot == EstPilot::OLS || pilot == EstPilot::Lasso))
        throw ConfigError("logistic experiments need the mle or glm-lasso pilot");
    if (!logistic && pilot == EstPilot::LogisticMLE) throw ConfigError("the mle pilot needs the logistic link");
}

void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
    const std::string key = lower(trim(raw_key));
    GenConfig& g = cfg.gen;
    const int old_d0 = g.d0;
    if (key == "d0") {
        g.d0 = parse_int32(key, value);
    } else if (key == "d1") {
        g.d1 = parse_int32(key, value);
    } else if (key == "n") {
        g.n = parse_int32(key, value);
    } else if (key == "n1") {
        g.n1 = parse_int32(key, value);
    } else if (key == "c") {
        g.C = parse_double(key, value);
    } else if (key == "t") {
        g.t = parse_double(key, value);
    } else if (key == "link") {
        const std::string v = lower(trim(value));
        if (v == "identity") {
            g.link = LinkKind::identity(g.link.is_identity() ? g.link.noise_sd : 1.0);
        } else if (v == "logistic") {
            g.link = LinkKind::logistic();
        } else {
            throw ConfigError("link must be identity or logistic");
        }
    } else if (key == "noise_sd") {
        if (!g.link.is_identity()) throw ConfigError("noise_sd applies to the identity link only");
        g.link.noise_sd = parse_double(key, value);
    } else if (key == "gen_pilot") {
        const std::string v = lower(trim(value));
        if (v == "ols") {
            g.pilot_kind = GenPilot::OLS;
        } else if (v == "lasso") {
            g.pilot_kind = GenPilot::Lasso;
        } else {
            throw ConfigError("gen_pilot must be ols or lasso");
        }
    } else if (key == "ar_gamma") {
        g.ar_gamma = parse_double(key, value);
    } else if (key == "sparsity") {
        g.sparsity = parse_int32(key, value);
    } else if (key == "refit_every") {
        g.refit_every = parse_int32(key, value);
    } else if (key == "theta_star") {
        g.theta_star = parse_vector(key, value);
    } else if (key == "beta_star") {
        if (lower(trim(value)) == "draw") {
            g.beta_star.reset();
        } else {
            g.beta_star = parse_vector(key, value);
        }
    } else if (key == "beta_sparse") {
        g.beta_sparse = parse_bool(key, value);
    } else if (key == "lasso_nu") {
        g.lasso_nu = parse_double(key, value);
    } else if (key == "lasso_b") {
        if (lower(trim(value)) == "auto") {
            g.lasso_B.reset();
        } else {
            g.lasso_B = parse_double(key, value);
        }
    } else if (key == "lasso_lambda") {
        if (lower(trim(value)) == "auto") {
            g.lasso_lambda.reset();
        } else {
            g.lasso_lambda = parse_double(key, value);
        }
    } else if (key == "reps") {
        cfg.reps = parse_int32(key, value);
    } else if (key == "estimators") {
        cfg.estimators.clear();
        for (const auto& item : split_list(value)) {
            const auto id = parse_estimator(item);
            if (!id) throw ConfigError("unknown estimator '" + item + "'");
            if (std::find(cfg.estimators.begin(), cfg.estimators.end(), *id) == cfg.estimators.end())
                cfg.estimators.push_back(*id);
        }
    } else if (key == "direction") {
        cfg.direction = parse_vector(key, value);
    } else if (key == "levels") {
        cfg.levels = parse_levels(key, value);
    } else if (key == "seed") {
        const long long s = parse_int(key, value);
        if (s < 0) throw ConfigError("seed must be nonnegative");
        cfg.base_seed = static_cast<std::uint64_t>(s);
    } else if (key == "workers") {
        cfg.workers = parse_int32(key, value);
    } else if (key == "output_dir") {
        cfg.output_dir = trim(value);
    } else if (key == "pilot") {
        const std::string v = lower(trim(value));
        if (v == "auto") cfg.pilot = EstPilot::Auto;
        else if (v == "ols") cfg.pilot = EstPilot::OLS;
        else if (v == "lasso") cfg.pilot = EstPilot::Lasso;
        else if (v == "mle") cfg.pilot = EstPilot::LogisticMLE;
        else if (v == "glm-lasso") cfg.pilot = EstPilot::GlmLasso;
        else throw ConfigError("pilot must be auto, ols, lasso, mle or glm-lasso");
    } else if (key == "sigma_plugin") {
        cfg.sigma_plugin = parse_bool(key, value);
    } else if (key == "svg") {
        cfg.write_svg = parse_bool(key, value);
    } else {
        throw ConfigError("unknown setting '" + raw_key + "'");
    }
    // A new d0 resets the default direction when the old one no longer fits.
    if (g.d0 != old_d0 && cfg.direction.size() != g.d0 && g.d0 >= 1) cfg.direction = VectorXd::Unit(g.d0, 0);
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    int lineno = 0;
    std::optional<std::string> preset;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';' || s[0] == '[') continue;
        // trailing comment after whitespace
        for (std::size_t k = 1; k < s.size(); ++k) {
            if ((s[k] == '#' || s[k] == ';') && std::isspace(static_cast<unsigned char>(s[k - 1]))) {
                s = trim(s.substr(0, k));
                break;
            }
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string k = trim(s.substr(0, eq));
        const std::string v = trim(s.substr(eq + 1));
        if (lower(k) == "preset") {
            preset = v;
        } else {
            entries.emplace_back(k, v);
        }
    }
    ExperimentConfig cfg = preset ? preset_config(*preset) : preset_config("fig2");
    if (!preset) cfg.preset = "custom";
    for (const auto& [k, v] : entries) apply_setting(cfg, k, v);
    return cfg;
}

std::vector<std::pair<std::string, std::string>> config_settings(const ExperimentConfig& cfg) {
    const GenConfig& g = cfg.gen;
    std::vector<std::pair<std::string, std::string>> out = {
        {"d0", std::to_string(g.d0)},
        {"d1", std::to_string(g.d1)},
        {"n", std::to_string(g.n)},
        {"n1", std::to_string(g.n1)},
        {"C", fmt(g.C)},
        {"t", fmt(g.t)},
        {"link", g.link.is_identity() ? "identity" : "logistic"},
    };
    if (g.link.is_identity()) out.emplace_back("noise_sd", fmt(g.link.noise_sd));
    out.emplace_back("gen_pilot", g.pilot_kind == GenPilot::OLS ? "ols" : "lasso");
    out.emplace_back("ar_gamma", fmt(g.ar_gamma));
    out.emplace_back("sparsity", std::to_string(g.sparsity));
    out.emplace_back("refit_every", std::to_string(g.effective_refit()));
    out.emplace_back("theta_star", g.theta_star ? fmt_vector(*g.theta_star) : fmt_vector(VectorXd::Constant(g.d0, 2.0)));
    out.emplace_back("beta_star", g.beta_star ? fmt_vector(*g.beta_star) : "draw");
    out.emplace_back("beta_sparse", g.beta_sparse ? "true" : "false");
    out.emplace_back("lasso_nu", fmt(g.lasso_nu));
    out.emplace_back("lasso_B", g.lasso_B ? fmt(*g.lasso_B) : "auto");
    out.emplace_back("lasso_lambda", g.lasso_lambda ? fmt(*g.lasso_lambda) : "auto");
    out.emplace_back("reps", std::to_string(cfg.reps));
    std::string est;
    for (EstimatorId id : cfg.estimators) est += (est.empty() ? "" : ",") + std::string(estimator_name(id));
    out.emplace_back("estimators", est);
    out.emplace_back("direction", fmt_vector(cfg.direction));
    std::string lv;
    for (double l : cfg.levels) lv += (lv.empty() ? "" : ",") + fmt(l);
    out.emplace_back("levels", lv);
    out.emplace_back("seed", std::to_string(cfg.base_seed));
    out.emplace_back("pilot", pilot_name(cfg.pilot));
    out.emplace_back("sigma_plugin", cfg.sigma_plugin ? "true" : "false");
    return out;
}

}  // namespace adaptz
