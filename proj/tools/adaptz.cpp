#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adaptz/config.hpp"
#include "adaptz/datagen.hpp"
#include "adaptz/error.hpp"
#include "adaptz/harness.hpp"
#include "adaptz/identities.hpp"
#include "adaptz/inference.hpp"
#include "adaptz/report_io.hpp"

using namespace adaptz;

namespace {

struct Common {
    std::string config_path;
    std::string preset;
    std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "key = value configuration file");
    app->add_option("--preset", c.preset, "named parameter set (fig2, fig3, fig4, fig1-desk, fig4-desk)");
    app->add_option("--set", c.sets, "override one setting, KEY=VALUE (repeatable)");
}

ExperimentConfig resolve(const Common& c, const std::string& fallback_preset) {
    ExperimentConfig cfg;
    if (!c.config_path.empty() && !c.preset.empty()) throw UsageError("give either --config or --preset, not both");
    if (!c.config_path.empty()) {
        cfg = load_config_file(c.config_path);
    } else {
        cfg = preset_config(c.preset.empty() ? fallback_preset : c.preset);
    }
    for (const std::string& kv : c.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE, got '" + kv + "'");
        apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void print_summary(const ExperimentReport& rep, std::ostream& out) {
    out << "preset " << rep.config.preset << ", reps " << rep.config.reps << ", workers " << rep.workers_used
        << ", " << num(rep.seconds) << " s\n";
    for (const EstimatorReport& er : rep.estimators) {
        out << "  " << estimator_name(er.id) << ": " << er.rows.size() << " ok, " << er.failures << " failed";
        if (!er.rows.empty()) {
            std::vector<double> est, sd;
            for (const EstimateRow& r : er.rows) {
                est.push_back(r.estimate);
                sd.push_back(r.sd);
            }
            const CoverageRow at95 = coverage_report(rep.truth_u, est, sd, {0.95}).rows.front();
            out << ", 95% coverage two/upper/lower " << at95.two.coverage << "/" << at95.upper.coverage << "/"
                << at95.lower.coverage << ", width " << at95.two.mean_width;
            out << ", std error mean " << er.coverage.errors.mean << " sd " << er.coverage.errors.sd << " KS "
                << er.coverage.errors.ks;
        }
        if (er.chi2_rejection >= 0.0) out << ", chi2 rejection " << er.chi2_rejection;
        out << '\n';
    }
    if (rep.unreliable) out << "  WARNING: more than 5% of replications failed; results are unreliable\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive-data Z-estimation experiments"};
    app.require_subcommand(1);

    Common run_c;
    std::string out_dir;
    int reps = 0, workers = 0;
    long long seed = -1;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "run a Monte Carlo experiment and write coverage outputs");
    add_common(run, run_c);
    run->add_option("--reps", reps, "number of replications");
    run->add_option("--seed", seed, "base seed; replication r uses seed + r");
    run->add_option("--workers", workers, "worker threads (ADAPTZ_THREADS overrides)");
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--quiet", quiet, "suppress the summary");

    Common gen_c;
    std::string gen_out, meta_out;
    int gen_rep = 0;
    long long gen_seed = -1;
    auto* gen = app.add_subcommand("gen", "generate one adaptive dataset as CSV");
    add_common(gen, gen_c);
    gen->add_option("--seed", gen_seed, "base seed");
    gen->add_option("--rep", gen_rep, "replication index (data seed = base seed + rep)")->check(CLI::NonNegativeNumber);
    gen->add_option("--out", gen_out, "output CSV (default stdout)");
    gen->add_option("--meta", meta_out, "write config, seed, refit cadence and beta* as JSON");

    Common est_c;
    std::string data_path;
    int split = 0;
    double level = 0.95;
    std::vector<std::string> est_names;
    auto* est = app.add_subcommand("estimate", "run estimators on a dataset CSV");
    add_common(est, est_c);
    est->add_option("--data", data_path, "dataset CSV (i,arm,y,z_*,p_*)")->required();
    est->add_option("--split", split, "fold-1 size (default: config n1 when it fits, else n/2)");
    est->add_option("--estimator", est_names, "estimator names (repeatable)");
    est->add_option("--level", level, "two-sided confidence level");

    auto* check = app.add_subcommand("check", "run the exact finite-sum identity checks");
    long long check_seed = 20240101;
    int trials = 1000;
    check->add_option("--seed", check_seed, "seed for the random selection laws");
    check->add_option("--trials", trials, "number of random instances")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*run) {
            ExperimentConfig cfg = resolve(run_c, "fig2");
            if (reps > 0) cfg.reps = reps;
            if (seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(seed);
            if (workers > 0) cfg.workers = workers;
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            const ExperimentReport report = run_experiment(cfg);
            write_experiment_outputs(report, cfg.output_dir);
            if (!quiet) print_summary(report, std::cout);
            return 0;
        }
        if (*gen) {
            ExperimentConfig cfg = resolve(gen_c, "fig2");
            if (gen_seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(gen_seed);
            cfg.gen.validate();
            const TrueModel truth = draw_true_model(cfg.gen, cfg.base_seed);
            const std::uint64_t data_seed = cfg.base_seed + static_cast<std::uint64_t>(gen_rep);
            const GenResult res = generate(cfg.gen, truth, data_seed);
            if (gen_out.empty()) {
                write_dataset_csv(std::cout, res.data);
            } else {
                std::ofstream f(gen_out, std::ios::binary);
                if (!f) throw IoError("cannot open '" + gen_out + "' for writing");
                write_dataset_csv(f, res.data);
            }
            if (!meta_out.empty()) {
                nlohmann::json j;
                for (const auto& [k, v] : config_settings(cfg)) j["config"][k] = v;
                j["base_seed"] = cfg.base_seed;
                j["data_seed"] = data_seed;
                j["refit_every"] = res.diag.refit_every;
                j["refits"] = res.diag.refits;
                j["mle_fallbacks"] = res.diag.fallbacks;
                j["theta_star"] = std::vector<double>(truth.theta_star.data(), truth.theta_star.data() + truth.theta_star.size());
                j["beta_star"] = std::vector<double>(truth.beta_star.data(), truth.beta_star.data() + truth.beta_star.size());
                std::ofstream f(meta_out);
                if (!f) throw IoError("cannot open '" + meta_out + "' for writing");
                f << j.dump(2) << '\n';
            }
            return 0;
        }
        if (*est) {
            ExperimentConfig cfg = resolve(est_c, "fig2");
            std::ifstream in(data_path);
            if (!in) throw IoError("cannot read '" + data_path + "'");
            Dataset data = read_dataset_csv(in, 0);
            int n1 = split;
            if (n1 <= 0) n1 = (cfg.gen.n1 < data.size() && cfg.gen.n == data.size()) ? cfg.gen.n1 : data.size() / 2;
            data = data.with_split(n1);
            cfg.gen.d0 = data.d0();
            cfg.gen.d1 = data.d1();
            cfg.gen.n = data.size();
            cfg.gen.n1 = n1;
            cfg.gen.theta_star.reset();
            cfg.gen.beta_star.reset();
            if (cfg.direction.size() != data.d0()) cfg.direction = VectorXd::Unit(data.d0(), 0);
            if (!est_names.empty()) {
                std::string joined;
                for (const auto& e : est_names) joined += (joined.empty() ? "" : ",") + e;
                apply_setting(cfg, "estimators", joined);
            }
            cfg.validate();
            if (!(level > 0.0 && level < 1.0)) throw UsageError("--level must lie in (0, 1)");
            std::cout << "estimator,estimate,sd,lo,hi,status\n";
            bool any_failed = false;
            for (const SingleEstimate& se : estimate_all(cfg, data, nullptr)) {
                std::cout << estimator_name(se.id) << ',';
                if (se.row) {
                    const Interval iv = normal_interval(se.row->estimate, se.row->sd, level, IntervalKind::TwoSided);
                    std::cout << num(se.row->estimate) << ',' << num(se.row->sd) << ',' << num(iv.lo) << ','
                              << num(iv.hi) << ",ok\n";
                } else {
                    any_failed = true;
                    std::cout << ",,,,\"" << se.note << "\"\n";
                }
            }
            return any_failed ? 2 : 0;
        }
        if (*check) {
            bool all = true;
            for (const IdentityCheck& c : run_identity_checks(static_cast<std::uint64_t>(check_seed), trials)) {
                std::printf("%s  %s (worst %.3g, tol %.3g)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.worst,
                            c.tol);
                all = all && c.passed;
            }
            return all ? 0 : 2;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n' << app.help();
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
