#include "adaptz/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include "adaptz/baselines.hpp"
#include "adaptz/datagen.hpp"
#include "adaptz/error.hpp"
#include "adaptz/estimators.hpp"

namespace adaptz {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMaxNotes = 5;

double noise_sigma(const ExperimentConfig& cfg, const Dataset& data) {
    if (!cfg.sigma_plugin) return cfg.gen.link.is_identity() ? cfg.gen.link.noise_sd : 1.0;
    const Design d = stacked_design(data.fold1());
    const PilotFit fit = ols_fit(d.q, d.y, data.d0());
    const VectorXd resid = d.y - d.q * fit.coefficients();
    return std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
}

// Row for an estimator with a vector solution and a scaling matrix.
EstimateRow vector_row(const VectorXd& theta, const MatrixXd& scaling, int n2, double sigma,
                       const VectorXd& u, const TrueModel* truth) {
    EstimateRow row;
    row.estimate = u.dot(theta);
    row.sd = functional_sd(scaling, n2, sigma, u);
    if (truth) {
        row.std_error = (row.estimate - u.dot(truth->theta_star)) / row.sd;
        const VectorXd z = std::sqrt(static_cast<double>(n2)) * scaling * (theta - truth->theta_star) / sigma;
        row.chi2 = z.squaredNorm();
        row.coord_errors.assign(z.data(), z.data() + z.size());
    } else {
        row.std_error = kNaN;
        row.chi2 = kNaN;
    }
    return row;
}

// Row for a plug-in estimate with an explicit covariance of theta.
EstimateRow cov_row(const VectorXd& theta, const MatrixXd& cov, const VectorXd& u, const TrueModel* truth) {
    EstimateRow row;
    row.estimate = u.dot(theta);
    row.sd = std::sqrt(u.dot(cov * u));
    if (truth) {
        row.std_error = (row.estimate - u.dot(truth->theta_star)) / row.sd;
        const VectorXd diff = theta - truth->theta_star;
        row.chi2 = diff.dot(cov.ldlt().solve(diff));
        // Whitened coordinates: L^{-1} diff with cov = L L^T.
        const Eigen::LLT<MatrixXd> llt(cov);
        const VectorXd z = llt.matrixL().solve(diff);
        row.coord_errors.assign(z.data(), z.data() + z.size());
    } else {
        row.std_error = kNaN;
        row.chi2 = kNaN;
    }
    return row;
}

EstimateRow scalar_row(const DirSolution& sol, double sigma, const VectorXd& u, const TrueModel* truth) {
    EstimateRow row;
    row.estimate = sol.theta_u;
    row.sd = sigma / (std::sqrt(static_cast<double>(sol.n2)) * sol.scale_bar);
    row.std_error = truth ? (row.estimate - u.dot(truth->theta_star)) / row.sd : kNaN;
    row.chi2 = kNaN;
    row.iterations = sol.iterations;
    row.converged = sol.converged;
    return row;
}

}  // namespace

const EstimatorReport* ExperimentReport::find(EstimatorId id) const {
    for (const auto& e : estimators)
        if (e.id == id) return &e;
    return nullptr;
}

PilotFit fit_estimator_pilot(const ExperimentConfig& cfg, const Dataset& data) {
    EstPilot kind = cfg.pilot;
    if (kind == EstPilot::Auto) {
        if (!cfg.gen.link.is_identity()) kind = EstPilot::LogisticMLE;
        else kind = cfg.gen.pilot_kind == GenPilot::Lasso ? EstPilot::Lasso : EstPilot::OLS;
    }
    const SampleView fold1 = data.fold1();
    switch (kind) {
        case EstPilot::OLS:
            return ols_fit(fold1);
        case EstPilot::Lasso:
            return lasso_fit(fold1, config_lasso_lambda(cfg.gen, fold1));
        case EstPilot::LogisticMLE: {
            PilotFit fit = logistic_mle(fold1);
            if (fit.separated || !fit.converged)
                throw DegenerateDesignError("fold-1 logistic MLE did not converge" +
                                            std::string(fit.separated ? " (separated)" : ""));
            return fit;
        }
        case EstPilot::GlmLasso: {
            const GenConfig& g = cfg.gen;
            double lam;
            if (g.lasso_lambda) {
                lam = *g.lasso_lambda;
            } else {
                const double bound = g.lasso_B ? *g.lasso_B : max_nuisance_norm(fold1);
                lam = glm_lasso_lambda(static_cast<int>(fold1.size()), g.lasso_nu, bound + 1.0, g.d0, g.d1, g.t,
                                       g.sparsity);
            }
            return glm_lasso_fit(fold1, lam, cfg.gen.link);
        }
        case EstPilot::Auto:
            break;
    }
    throw ConfigError("unresolved pilot kind");
}

std::vector<SingleEstimate> estimate_all(const ExperimentConfig& cfg, const Dataset& data, const TrueModel* truth,
                                         int rep) {
    std::vector<SingleEstimate> out;
    const VectorXd& u = cfg.direction;
    std::optional<PilotFit> pilot;
    std::string pilot_note;
    try {
        pilot = fit_estimator_pilot(cfg, data);
    } catch (const Error& e) {
        pilot_note = std::string("pilot: ") + e.what();
    }
    const LinkKind link = cfg.gen.link;
    for (EstimatorId id : cfg.estimators) {
        SingleEstimate se{id, std::nullopt, ""};
        try {
            const bool needs_pilot = id != EstimatorId::OLS && id != EstimatorId::MLE;
            if (needs_pilot && !pilot) throw DegenerateDesignError(pilot_note);
            switch (id) {
                case EstimatorId::AdaptzPL: {
                    const double sigma = noise_sigma(cfg, data);
                    const PLSolution sol = adaptz_pl(data, *pilot, sigma);
                    se.row = vector_row(sol.theta, sol.scaling, sol.n2, sigma, u, truth);
                    break;
                }
                case EstimatorId::PLDirection: {
                    const DirSolution sol = pl_direction(data, u, *pilot);
                    se.row = scalar_row(sol, noise_sigma(cfg, data), u, truth);
                    break;
                }
                case EstimatorId::AdaptzGLM: {
                    const GLMSolution sol = adaptz_glm(data, *pilot, link);
                    if (!sol.converged)
                        throw DegenerateDesignError("Newton iteration did not converge (residual " +
                                                    std::to_string(sol.residual) + ")");
                    se.row = vector_row(sol.theta, sol.scaling, sol.n2, 1.0, u, truth);
                    se.row->iterations = sol.newton_iters;
                    break;
                }
                case EstimatorId::GLMDirection: {
                    const DirSolution sol = glm_direction(data, u, *pilot, link);
                    se.row = scalar_row(sol, 1.0, u, truth);
                    break;
                }
                case EstimatorId::UnweightedZ: {
                    const double sigma = noise_sigma(cfg, data);
                    const UnweightedSolution sol = unweighted_z_baseline(data, *pilot);
                    se.row = vector_row(sol.theta, sol.scaling, sol.n2, sigma, u, truth);
                    break;
                }
                case EstimatorId::OLS: {
                    const FullFit fit = ols_full(data, noise_sigma(cfg, data));
                    se.row = cov_row(fit.theta, fit.cov, u, truth);
                    break;
                }
                case EstimatorId::MLE: {
                    const FullFit fit = mle_full(data);
                    if (!fit.converged) throw DegenerateDesignError("full-sample MLE did not converge");
                    se.row = cov_row(fit.theta, fit.cov, u, truth);
                    break;
                }
            }
            se.row->rep = rep;
            if (!std::isfinite(se.row->estimate) || !(se.row->sd > 0.0) || !std::isfinite(se.row->sd))
                throw DegenerateDesignError("non-finite estimate or standard deviation");
        } catch (const Error& e) {
            se.row.reset();
            se.note = e.what();
        }
        out.push_back(std::move(se));
    }
    return out;
}

int resolve_workers(int requested) {
    if (const char* env = std::getenv("ADAPTZ_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
        throw ConfigError("ADAPTZ_THREADS must be an integer in [1, 1024]");
    }
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport report;
    report.config = cfg;
    report.truth = draw_true_model(cfg.gen, cfg.base_seed);
    report.truth_u = cfg.direction.dot(report.truth.theta_star);
    const int reps = cfg.reps;
    report.workers_used = std::min(resolve_workers(cfg.workers), reps);

    struct RepResult {
        bool generated = false;
        std::string gen_note;
        GenDiagnostics diag;
        std::vector<SingleEstimate> estimates;
    };
    std::vector<RepResult> results(static_cast<std::size_t>(reps));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) {
            RepResult& slot = results[static_cast<std::size_t>(r)];
            try {
                GenResult gen = generate(cfg.gen, report.truth, cfg.base_seed + static_cast<std::uint64_t>(r));
                slot.diag = gen.diag;
                slot.generated = true;
                slot.estimates = estimate_all(cfg, gen.data, &report.truth, r);
            } catch (const std::exception& e) {
                slot.generated = false;
                slot.gen_note = e.what();
            }
        }
    };
    if (report.workers_used <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < report.workers_used; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Merge strictly by replication index.
    for (EstimatorId id : cfg.estimators) report.estimators.push_back(EstimatorReport{id, {}, 0, {}, {}, -1.0, -1.0});
    int worst_failures = 0;
    for (int r = 0; r < reps; ++r) {
        const RepResult& res = results[static_cast<std::size_t>(r)];
        if (!res.generated) {
            ++report.rep_failures;
            for (auto& er : report.estimators) {
                ++er.failures;
                if (er.failure_notes.size() < kMaxNotes)
                    er.failure_notes.push_back("rep " + std::to_string(r) + ": " + res.gen_note);
            }
            continue;
        }
        report.generator_refits += res.diag.refits;
        report.generator_fallbacks += res.diag.fallbacks;
        for (std::size_t k = 0; k < res.estimates.size(); ++k) {
            EstimatorReport& er = report.estimators[k];
            const SingleEstimate& se = res.estimates[k];
            if (se.row) {
                er.rows.push_back(*se.row);
            } else {
                ++er.failures;
                if (er.failure_notes.size() < kMaxNotes)
                    er.failure_notes.push_back("rep " + std::to_string(r) + ": " + se.note);
            }
        }
    }

    const double chi2_cut = chi2_quantile(cfg.gen.d0, 0.95);
    for (EstimatorReport& er : report.estimators) {
        worst_failures = std::max(worst_failures, er.failures);
        if (er.rows.empty()) continue;
        std::vector<double> est, sds;
        int chi2_count = 0, chi2_reject = 0, newton_ok = 0;
        for (const EstimateRow& row : er.rows) {
            est.push_back(row.estimate);
            sds.push_back(row.sd);
            if (std::isfinite(row.chi2)) {
                ++chi2_count;
                if (row.chi2 > chi2_cut) ++chi2_reject;
            }
            if (row.converged) ++newton_ok;
        }
        er.coverage = coverage_report(report.truth_u, est, sds, cfg.levels);
        if (chi2_count > 0) er.chi2_rejection = static_cast<double>(chi2_reject) / chi2_count;
        if (er.id == EstimatorId::AdaptzGLM || er.id == EstimatorId::GLMDirection)
            er.newton_rate = static_cast<double>(newton_ok) / reps;
    }
    report.unreliable = worst_failures > 0.05 * reps;
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace adaptz
