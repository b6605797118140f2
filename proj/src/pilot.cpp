#include "adaptz/pilot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "adaptz/error.hpp"

namespace adaptz {

const char* to_string(PilotMethod m) {
    switch (m) {
        case PilotMethod::OLS: return "ols";
        case PilotMethod::Lasso: return "lasso";
        case PilotMethod::LogisticMLE: return "logistic-mle";
        case PilotMethod::GlmLasso: return "glm-lasso";
    }
    return "?";
}

VectorXd PilotFit::coefficients() const {
    VectorXd b(theta_hat.size() + beta_hat.size());
    b << theta_hat, beta_hat;
    return b;
}

PilotFit PilotFit::split(const VectorXd& coef, int d0, PilotMethod method) {
    PilotFit fit;
    fit.theta_hat = coef.head(d0);
    fit.beta_hat = coef.tail(coef.size() - d0);
    fit.method = method;
    return fit;
}

Design stacked_design(const SampleView& rows) {
    if (rows.size() == 0) throw UsageError("pilot fit needs a non-empty fold");
    const int n = static_cast<int>(rows.size());
    Design d{MatrixXd::Zero(n, rows.d0 + rows.d1), VectorXd(n)};
    for (int i = 0; i < n; ++i) {
        const Sample& s = rows.rows[i];
        if (s.arm > 0) d.q(i, s.arm - 1) = 1.0;
        d.q.row(i).tail(rows.d1) = s.z.transpose();
        d.y[i] = s.y;
    }
    return d;
}

double max_nuisance_norm(const SampleView& rows) {
    double best = 0.0;
    for (const Sample& s : rows.rows) best = std::max(best, s.z.norm());
    return best;
}

// ---------------------------------------------------------------------------
// OLS

PilotFit ols_fit(const Eigen::Ref<const MatrixXd>& q, const Eigen::Ref<const VectorXd>& y, int d0) {
    if (q.rows() == 0) throw UsageError("pilot fit needs a non-empty fold");
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(q);
    const VectorXd coef = cod.solve(y);
    PilotFit fit = PilotFit::split(coef, d0, PilotMethod::OLS);
    fit.converged = true;
    fit.iterations = 1;
    if (cod.rank() < q.cols()) {
        fit.singular = true;
        fit.note = "rank-deficient design (rank " + std::to_string(cod.rank()) + " of " +
                   std::to_string(q.cols()) + "); minimum-norm solution";
    }
    return fit;
}

PilotFit ols_fit(const SampleView& rows) {
    const Design d = stacked_design(rows);
    return ols_fit(d.q, d.y, rows.d0);
}

// ---------------------------------------------------------------------------
// Lasso

namespace {

double lambda_core(int n1, double nu, double scale, int d0, int d1, double t, int s_guess,
                   double exponent_offset) {
    if (n1 < 1) throw ParameterError("lambda schedule needs n1 >= 1");
    const double p = static_cast<double>(d0 + d1);
    const double delta = std::min((s_guess + d0) * std::pow(static_cast<double>(n1), 2.0 * t - exponent_offset),
                                  1.0 / p);
    if (!(delta > 0.0)) throw ParameterError("lambda schedule: delta must be positive");
    return 2.0 * nu * scale * std::sqrt(2.0 * (std::log(2.0 / delta) + std::log(p)) / n1);
}

double soft_threshold(double v, double lambda) {
    if (v > lambda) return v - lambda;
    if (v < -lambda) return v + lambda;
    return 0.0;
}

}  // namespace

double lasso_lambda(int n1, double nu, double bound, int d0, int d1, double t, int s_guess) {
    if (t < 0.0 || t >= 0.25) throw ParameterError("lasso lambda schedule needs t in [0, 1/4)");
    return lambda_core(n1, nu, bound + 1.0, d0, d1, t, s_guess, 0.5);
}

double glm_lasso_lambda(int n1, double nu, double dx, int d0, int d1, double t, int s_guess) {
    if (t < 0.0 || t >= 0.25) throw ParameterError("GLM lasso lambda schedule needs t in [0, 1/4)");
    return lambda_core(n1, nu, dx, d0, d1, t, s_guess, 0.25);
}

double lasso_objective(const Eigen::Ref<const MatrixXd>& q, const Eigen::Ref<const VectorXd>& y,
                       const VectorXd& b, double lambda) {
    const double n = static_cast<double>(q.rows());
    return (y - q * b).squaredNorm() / (2.0 * n) + lambda * b.lpNorm<1>();
}

PilotFit lasso_fit(const Eigen::Ref<const MatrixXd>& q, const Eigen::Ref<const VectorXd>& y, int d0,
                   double lambda, const LassoOptions& opts) {
    if (!(lambda >= 0.0)) throw ParameterError("lasso needs lambda >= 0");
    if (q.rows() == 0) throw UsageError("pilot fit needs a non-empty fold");
    const double n = static_cast<double>(q.rows());
    const Eigen::Index p = q.cols();

    VectorXd col_sq = q.colwise().squaredNorm().transpose() / n;
    VectorXd b = opts.warm_start != nullptr && opts.warm_start->size() == p ? *opts.warm_start
                                                                             : VectorXd::Zero(p);
    VectorXd r = y - q * b;

    std::vector<Eigen::Index> active;
    bool full_sweep = true;
    bool converged = false;
    int sweeps = 0;
    while (sweeps < opts.max_sweeps) {
        ++sweeps;
        double max_delta = 0.0;
        auto visit = [&](Eigen::Index j) {
            if (col_sq[j] == 0.0) {
                b[j] = 0.0;
                return;
            }
            const double rho = q.col(j).dot(r) / n + col_sq[j] * b[j];
            const double next = soft_threshold(rho, lambda) / col_sq[j];
            const double delta = next - b[j];
            if (delta != 0.0) {
                r.noalias() -= delta * q.col(j);
                b[j] = next;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        };
        if (full_sweep) {
            for (Eigen::Index j = 0; j < p; ++j) visit(j);
            if (max_delta < opts.tol) {
                converged = true;
                break;
            }
            active.clear();
            for (Eigen::Index j = 0; j < p; ++j)
                if (b[j] != 0.0) active.push_back(j);
            full_sweep = false;
        } else {
            for (Eigen::Index j : active) visit(j);
            // Active set settled; confirm with a sweep over every coordinate.
            if (max_delta < opts.tol) full_sweep = true;
        }
    }

    PilotFit fit = PilotFit::split(b, d0, PilotMethod::Lasso);
    fit.iterations = sweeps;
    fit.converged = converged;
    if (!converged) fit.note = "coordinate descent hit the sweep limit";
    return fit;
}

PilotFit lasso_fit(const SampleView& rows, double lambda, const LassoOptions& opts) {
    const Design d = stacked_design(rows);
    return lasso_fit(d.q, d.y, rows.d0, lambda, opts);
}

// ---------------------------------------------------------------------------
// Logistic MLE

namespace {

const LinkKind kLogistic = LinkKind::logistic();

double logistic_nll(const VectorXd& eta, const Eigen::Ref<const VectorXd>& y) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) total += link_cumulant(kLogistic, eta[i]) - y[i] * eta[i];
    return total / static_cast<double>(eta.size());
}

void check_unit_responses(const Eigen::Ref<const VectorXd>& y) {
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (!(y[i] >= 0.0 && y[i] <= 1.0))
            throw ParameterError("logistic responses must lie in [0, 1]");
}

}  // namespace

VectorXd logistic_gradient(const Eigen::Ref<const MatrixXd>& q, const Eigen::Ref<const VectorXd>& y,
                           const VectorXd& b) {
    const VectorXd eta = q * b;
    VectorXd resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = link_eval(kLogistic, eta[i]).g - y[i];
    return q.transpose() * resid / static_cast<double>(q.rows());
}

PilotFit logistic_mle(const Eigen::Ref<const MatrixXd>& q, const Eigen::Ref<const VectorXd>& y,
                      int d0, const NewtonOptions& opts) {
    if (q.rows() == 0) throw UsageError("pilot fit needs a non-empty fold");
    check_unit_responses(y);
    const Eigen::Index n = q.rows();
    const Eigen::Index p = q.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    VectorXd b = opts.warm_start != nullptr && opts.warm_start->size() == p ? *opts.warm_start
                                                                             : VectorXd::Zero(p);
    VectorXd eta = q * b;
    double f = logistic_nll(eta, y);
    VectorXd resid(n);
    VectorXd root_w(n);

    PilotFit out;
    bool converged = false;
    bool separated = false;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const LinkValue lv = link_eval(kLogistic, eta[i]);
            resid[i] = lv.g - y[i];
            root_w[i] = std::sqrt(lv.g_prime);
        }
        const VectorXd grad = q.transpose() * resid * inv_n;
        if (grad.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
            converged = true;
            break;
        }
        const MatrixXd qw = q.array().colwise() * root_w.array();
        MatrixXd hess = qw.transpose() * qw * inv_n;
        Eigen::LDLT<MatrixXd> ldlt(hess);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
            ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
            hess.diagonal().array() += 1e-8;
            ldlt.compute(hess);
        }
        const VectorXd step = ldlt.solve(grad);
        double scale = 1.0;
        bool accepted = false;
        for (int h = 0; h <= 30; ++h, scale *= 0.5) {
            VectorXd cand = b - scale * step;
            VectorXd cand_eta = q * cand;
            const double cand_f = logistic_nll(cand_eta, y);
            if (std::isfinite(cand_f) && cand_f <= f + 1e-13 * (1.0 + std::abs(f))) {
                b = std::move(cand);
                eta = std::move(cand_eta);
                f = cand_f;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        if (b.norm() > opts.separation_norm) {
            separated = true;
            break;
        }
    }

    if (converged) {
        // interpolated binary responses: separation
        bool binary = true;
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            binary = binary && (y[i] == 0.0 || y[i] == 1.0);
            worst = std::max(worst, std::abs(link_eval(kLogistic, eta[i]).g - y[i]));
        }
        if (binary && worst < 1e-6) {
            separated = true;
            converged = false;
        }
    }

    out = PilotFit::split(b, d0, PilotMethod::LogisticMLE);
    out.iterations = iter;
    out.converged = converged;
    out.separated = separated;
    if (separated) {
        out.note = "responses are separable; likelihood has no finite maximiser";
    } else if (!converged) {
        out.note = "Newton iteration stopped before the gradient tolerance";
    }
    return out;
}

PilotFit logistic_mle(const SampleView& rows, const NewtonOptions& opts) {
    const Design d = stacked_design(rows);
    return logistic_mle(d.q, d.y, rows.d0, opts);
}

// ---------------------------------------------------------------------------
// GLM lasso

double glm_lasso_objective(const Eigen::Ref<const MatrixXd>& q, const Eigen::Ref<const VectorXd>& y,
                           const VectorXd& b, double lambda, const LinkKind& link) {
    const VectorXd eta = q * b;
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) total += link_cumulant(link, eta[i]) - y[i] * eta[i];
    return total / static_cast<double>(eta.size()) + lambda * b.lpNorm<1>();
}

PilotFit glm_lasso_fit(const SampleView& rows, double lambda, const LinkKind& link,
                       const ProxGradOptions& opts) {
    if (!(lambda >= 0.0)) throw ParameterError("GLM lasso needs lambda >= 0");
    const Design d = stacked_design(rows);
    if (!link.is_identity()) check_unit_responses(d.y);
    const MatrixXd& q = d.q;
    const VectorXd& y = d.y;
    const double inv_n = 1.0 / static_cast<double>(q.rows());
    const Eigen::Index p = q.cols();

    auto smooth = [&](const VectorXd& b, VectorXd* grad) {
        const VectorXd eta = q * b;
        double total = 0.0;
        VectorXd resid(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            total += link_cumulant(link, eta[i]) - y[i] * eta[i];
            resid[i] = link_eval(link, eta[i]).g - y[i];
        }
        if (grad != nullptr) *grad = q.transpose() * resid * inv_n;
        return total * inv_n;
    };
    auto prox = [&](const VectorXd& v, double step) {
        return v.unaryExpr([&](double x) { return soft_threshold(x, lambda * step); }).eval();
    };

    VectorXd x = VectorXd::Zero(p);
    VectorXd x_prev = x;
    VectorXd yk = x;
    double momentum = 1.0;
    double lip = 1.0;
    double obj_prev = smooth(x, nullptr) + lambda * x.lpNorm<1>();
    bool converged = false;
    int iter = 0;
    VectorXd grad;
    for (; iter < opts.max_iter; ++iter) {
        const double f_y = smooth(yk, &grad);
        VectorXd next;
        for (;;) {
            next = prox(yk - grad / lip, 1.0 / lip);
            const VectorXd diff = next - yk;
            const double f_next = smooth(next, nullptr);
            if (f_next <= f_y + grad.dot(diff) + 0.5 * lip * diff.squaredNorm() + 1e-15 * std::abs(f_y)) break;
            lip *= 2.0;
            if (!std::isfinite(lip)) throw ParameterError("GLM lasso backtracking diverged");
        }
        const double map_norm = lip * (yk - next).lpNorm<Eigen::Infinity>();
        const double obj = smooth(next, nullptr) + lambda * next.lpNorm<1>();
        x_prev = x;
        x = next;
        if (map_norm < opts.tol) {
            converged = true;
            ++iter;
            break;
        }
        if (obj > obj_prev) {
            // Restart momentum when the objective goes up.
            momentum = 1.0;
            yk = x;
        } else {
            const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            yk = x + ((momentum - 1.0) / m_next) * (x - x_prev);
            momentum = m_next;
        }
        obj_prev = obj;
        lip *= 0.95;
    }

    PilotFit fit = PilotFit::split(x, rows.d0, PilotMethod::GlmLasso);
    fit.iterations = iter;
    fit.converged = converged;
    if (!converged) fit.note = "proximal gradient hit the iteration limit";
    return fit;
}

}  // namespace adaptz
