#include "adaptz/datagen.hpp"

#include <cmath>
#include <limits>

#include "adaptz/error.hpp"
#include "adaptz/rng.hpp"

namespace adaptz {

int GenConfig::effective_refit() const {
    if (refit_every > 0) return refit_every;
    return d1 >= 200 ? 25 : 1;
}

void GenConfig::validate() const {
    if (d0 < 1 || d1 < 0) throw ConfigError("d0 must be at least 1 and d1 nonnegative");
    if (n < 2) throw ConfigError("n must be at least 2");
    if (n1 < 1 || n1 >= n) throw ConfigError("n1 must satisfy 1 <= n1 < n");
    if (!(C > 0.0)) throw ConfigError("UCB constant C must be positive");
    if (!(t >= 0.0 && t < 0.5)) throw ConfigError("exploration exponent t must lie in [0, 1/2)");
    if (!(ar_gamma >= 0.0 && ar_gamma < 1.0)) throw ConfigError("ar_gamma must lie in [0, 1)");
    if (sparsity < 0) throw ConfigError("sparsity must be nonnegative");
    if (refit_every < 0) throw ConfigError("refit_every must be nonnegative");
    if (theta_star && theta_star->size() != d0) throw ConfigError("theta_star must have d0 entries");
    if (beta_star && beta_star->size() != d1) throw ConfigError("beta_star must have d1 entries");
    if (!(lasso_nu > 0.0)) throw ConfigError("lasso_nu must be positive");
    if (lasso_B && !(*lasso_B >= 0.0)) throw ConfigError("lasso_B must be nonnegative");
    if (lasso_lambda && !(*lasso_lambda >= 0.0)) throw ConfigError("lasso_lambda must be nonnegative");
    if (!link.is_identity() && pilot_kind == GenPilot::Lasso)
        throw ConfigError("the logistic generator uses the MLE pilot only");
    if (link.is_identity() && !(link.noise_sd > 0.0)) throw ConfigError("noise_sd must be positive");
}

double config_lasso_lambda(const GenConfig& cfg, const Eigen::Ref<const MatrixXd>& z_rows, int n_rows) {
    if (cfg.lasso_lambda) return *cfg.lasso_lambda;
    double bound = 0.0;
    if (cfg.lasso_B) {
        bound = *cfg.lasso_B;
    } else {
        for (int i = 0; i < n_rows; ++i) bound = std::max(bound, z_rows.row(i).norm());
    }
    return lasso_lambda(n_rows, cfg.lasso_nu, bound, cfg.d0, cfg.d1, cfg.t, cfg.sparsity);
}

double config_lasso_lambda(const GenConfig& cfg, const SampleView& rows) {
    if (cfg.lasso_lambda) return *cfg.lasso_lambda;
    const double bound = cfg.lasso_B ? *cfg.lasso_B : max_nuisance_norm(rows);
    return lasso_lambda(static_cast<int>(rows.size()), cfg.lasso_nu, bound, cfg.d0, cfg.d1, cfg.t, cfg.sparsity);
}

TrueModel draw_true_model(const GenConfig& cfg, std::uint64_t seed) {
    TrueModel tm;
    tm.theta_star = cfg.theta_star ? *cfg.theta_star : VectorXd::Constant(cfg.d0, 2.0);
    if (cfg.beta_star) {
        tm.beta_star = *cfg.beta_star;
    } else {
        RandomStream rs(seed, StreamPurpose::Truth);
        tm.beta_star.resize(cfg.d1);
        for (int k = 0; k < cfg.d1; ++k) tm.beta_star[k] = rs.normal();
        if (cfg.beta_sparse)
            for (int k = cfg.sparsity; k < cfg.d1; ++k) tm.beta_star[k] = 0.0;
    }
    tm.link = cfg.link;
    return tm;
}

int ucb_select(const VectorXd& theta_hat, const Eigen::VectorXi& counts, double C, int n) {
    if (n < 2) throw ParameterError("UCB horizon must be at least 2");
    if (theta_hat.size() != counts.size() || counts.size() == 0) throw ParameterError("UCB dimension mismatch");
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    const double log_n = std::log(static_cast<double>(n));
    for (Eigen::Index k = 0; k < counts.size(); ++k) {
        const double score = counts[k] == 0 ? std::numeric_limits<double>::infinity()
                                            : theta_hat[k] + std::sqrt(C * log_n / counts[k]);
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(k);
        }
    }
    return best + 1;
}

SelectionProbs assemble_probs(int k_star, int i, double t, int d0) {
    if (k_star < 1 || k_star > d0 || i < 1) throw ParameterError("assemble_probs: arm or round out of range");
    const double other = std::min(1.0 / (2.0 * std::pow(static_cast<double>(i), 2.0 * t)), 0.4 / d0);
    VectorXd arms = VectorXd::Constant(d0, other);
    const double chosen = 1.0 - 0.2 - (d0 - 1) * other;
    if (!(chosen > 0.0)) throw ConfigError("chosen-arm probability is not positive");
    arms[k_star - 1] = chosen;
    return SelectionProbs(std::move(arms), 0.2);
}

int draw_arm(const SelectionProbs& probs, double uniform) {
    double cum = 0.0;
    for (int j = 0; j <= probs.dim(); ++j) {
        cum += probs.atom(j);
        if (uniform < cum) return j;
    }
    // Rounding can leave the total a hair below one.
    for (int j = probs.dim(); j >= 0; --j)
        if (probs.atom(j) > 0.0) return j;
    return 0;
}

namespace {

// Shared bandit loop; the link decides contexts, responses and the refit.
GenResult run_bandit(const GenConfig& cfg, const TrueModel& truth, std::uint64_t seed) {
    cfg.validate();
    if (truth.theta_star.size() != cfg.d0 || truth.beta_star.size() != cfg.d1)
        throw ConfigError("true model dimensions disagree with the config");
    const bool logistic = !cfg.link.is_identity();
    const int d0 = cfg.d0, d1 = cfg.d1, d = d0 + d1;
    const int refit = cfg.effective_refit();

    RandomStream ctx(seed, StreamPurpose::Contexts);
    RandomStream arm_rs(seed, StreamPurpose::Arms);
    RandomStream noise(seed, StreamPurpose::Noise);

    MatrixXd q = MatrixXd::Zero(cfg.n, d);
    VectorXd yv = VectorXd::Zero(cfg.n);
    MatrixXd gram = MatrixXd::Zero(d, d);
    VectorXd qty = VectorXd::Zero(d);
    VectorXd coef = VectorXd::Zero(d);       // last successful fit
    VectorXd theta_hat = VectorXd::Zero(d0);  // index used by UCB
    bool have_fit = false;
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(d0);
    VectorXd z_prev = VectorXd::Zero(d1);

    GenDiagnostics diag;
    diag.refit_every = refit;
    std::vector<Sample> samples;
    samples.reserve(cfg.n);

    for (int i = 1; i <= cfg.n; ++i) {
        const int hist = i - 1;
        if (hist >= 1 && (hist - 1) % refit == 0) {
            ++diag.refits;
            if (logistic) {
                NewtonOptions opts;
                if (have_fit) opts.warm_start = &coef;
                const PilotFit fit = logistic_mle(q.topRows(hist), yv.head(hist), d0, opts);
                if (fit.converged && !fit.separated) {
                    coef = fit.coefficients();
                    have_fit = true;
                    theta_hat = fit.theta_hat;
                } else {
                    have_fit = false;
                    theta_hat.setZero();
                    ++diag.fallbacks;
                }
            } else if (cfg.pilot_kind == GenPilot::Lasso) {
                LassoOptions opts;
                if (have_fit) opts.warm_start = &coef;
                const double lam = config_lasso_lambda(cfg, q.topRows(hist).rightCols(d1), hist);
                const PilotFit fit = lasso_fit(q.topRows(hist), yv.head(hist), d0, lam, opts);
                coef = fit.coefficients();
                have_fit = true;
                theta_hat = fit.theta_hat;
            } else {
                // Minimum-norm least squares from the running normal equations.
                coef = gram.completeOrthogonalDecomposition().solve(qty);
                theta_hat = coef.head(d0);
            }
        }

        VectorXd z(d1);
        if (logistic) {
            for (int k = 0; k < d1; ++k) z[k] = cfg.ar_gamma * z_prev[k] + ctx.normal();
            z_prev = z;
        } else {
            for (int k = 0; k < d1; ++k) z[k] = ctx.normal();
        }

        const int k_star = ucb_select(theta_hat, counts, cfg.C, cfg.n);
        SelectionProbs probs = assemble_probs(k_star, i, cfg.t, d0);
        const int arm = draw_arm(probs, arm_rs.uniform());
        if (arm > 0) ++counts[arm - 1];

        const double eta = (arm > 0 ? truth.theta_star[arm - 1] : 0.0) + z.dot(truth.beta_star);
        double y;
        if (logistic) {
            y = noise.uniform() < link_eval(truth.link, eta).g ? 1.0 : 0.0;
        } else {
            y = eta + truth.link.noise_sd * noise.normal();
        }

        VectorXd qi = VectorXd::Zero(d);
        if (arm > 0) qi[arm - 1] = 1.0;
        qi.tail(d1) = z;
        q.row(hist) = qi.transpose();
        yv[hist] = y;
        if (!logistic && cfg.pilot_kind == GenPilot::OLS) {
            gram.noalias() += qi * qi.transpose();
            qty += qi * y;
        }
        samples.push_back(Sample{arm, std::move(z), y, std::move(probs)});
    }
    return {Dataset(std::move(samples), d0, d1, cfg.n1), truth, diag};
}

}  // namespace

GenResult gen_linear_adaptive(const GenConfig& cfg, const TrueModel& truth, std::uint64_t seed) {
    if (!cfg.link.is_identity()) throw ConfigError("linear generator needs the identity link");
    return run_bandit(cfg, truth, seed);
}

GenResult gen_linear_adaptive(const GenConfig& cfg, std::uint64_t seed) {
    return gen_linear_adaptive(cfg, draw_true_model(cfg, seed), seed);
}

GenResult gen_logistic_adaptive(const GenConfig& cfg, const TrueModel& truth, std::uint64_t seed) {
    if (cfg.link.is_identity()) throw ConfigError("logistic generator needs the logistic link");
    return run_bandit(cfg, truth, seed);
}

GenResult gen_logistic_adaptive(const GenConfig& cfg, std::uint64_t seed) {
    return gen_logistic_adaptive(cfg, draw_true_model(cfg, seed), seed);
}

GenResult generate(const GenConfig& cfg, const TrueModel& truth, std::uint64_t seed) {
    return cfg.link.is_identity() ? gen_linear_adaptive(cfg, truth, seed) : gen_logistic_adaptive(cfg, truth, seed);
}

}  // namespace adaptz
