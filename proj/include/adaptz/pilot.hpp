#pragma once

#include <string>

#include <Eigen/Dense>

#include "adaptz/model.hpp"

namespace adaptz {

enum class PilotMethod { OLS, Lasso, LogisticMLE, GlmLasso };

const char* to_string(PilotMethod m);

// Fold-1 estimate of (theta, beta) on the stacked design q_i = (x_i, z_i).
struct PilotFit {
    VectorXd theta_hat;
    VectorXd beta_hat;
    PilotMethod method = PilotMethod::OLS;
    int iterations = 0;
    bool converged = false;
    bool singular = false;   // OLS Gram matrix was rank deficient
    bool separated = false;  // logistic likelihood has no finite maximiser
    std::string note;

    // h(z) = z^T beta_hat
    double nuisance(const VectorXd& z) const { return z.dot(beta_hat); }
    VectorXd coefficients() const;

    static PilotFit split(const VectorXd& coef, int d0, PilotMethod method);
};

struct Design {
    MatrixXd q;
    VectorXd y;
};

Design stacked_design(const SampleView& rows);

// Largest |z_i|_2 over the rows; the default for B in the lambda schedule.
double max_nuisance_norm(const SampleView& rows);

PilotFit ols_fit(const SampleView& rows);
PilotFit ols_fit(const Eigen::Ref<const MatrixXd>& q, const Eigen::Ref<const VectorXd>& y, int d0);

// 2 nu (B + 1) sqrt(2 [log(2/delta) + log(d0 + d1)] / n1) with
// delta = min{(s + d0) n1^(2t - 1/2), 1/(d0 + d1)}.
double lasso_lambda(int n1, double nu, double bound, int d0, int d1, double t, int s_guess);

// GLM variant: 2 nu Dx sqrt(...) with delta = min{(s + d0) n1^(2t - 1/4), 1/(d0 + d1)}.
// With Dx = B + 1 this is lasso_lambda with the GLM delta.
double glm_lasso_lambda(int n1, double nu, double dx, int d0, int d1, double t, int s_guess);

struct LassoOptions {
    double tol = 1e-10;
    int max_sweeps = 10000;
    const VectorXd* warm_start = nullptr;
};

// Cyclic coordinate descent on (1/2n)|y - Q b|^2 + lambda |b|_1.
PilotFit lasso_fit(const SampleView& rows, double lambda, const LassoOptions& opts = {});
PilotFit lasso_fit(const Eigen::Ref<const MatrixXd>& q, const Eigen::Ref<const VectorXd>& y, int d0,
                   double lambda, const LassoOptions& opts = {});
double lasso_objective(const Eigen::Ref<const MatrixXd>& q, const Eigen::Ref<const VectorXd>& y,
                       const VectorXd& b, double lambda);

struct NewtonOptions {
    double grad_tol = 1e-8;
    int max_iter = 100;
    double separation_norm = 1e4;
    const VectorXd* warm_start = nullptr;
};

// Newton-Raphson with step halving on the mean logistic negative
// log-likelihood. Responses must lie in [0, 1].
PilotFit logistic_mle(const SampleView& rows, const NewtonOptions& opts = {});
PilotFit logistic_mle(const Eigen::Ref<const MatrixXd>& q, const Eigen::Ref<const VectorXd>& y,
                      int d0, const NewtonOptions& opts = {});
// Mean negative log-likelihood gradient; the stationarity check for logistic_mle.
VectorXd logistic_gradient(const Eigen::Ref<const MatrixXd>& q, const Eigen::Ref<const VectorXd>& y,
                           const VectorXd& b);

struct ProxGradOptions {
    double tol = 1e-8;
    int max_iter = 20000;
};

// Accelerated proximal gradient with backtracking on
// (1/n) sum [G(q^T b) - y q^T b] + lambda |b|_1.
PilotFit glm_lasso_fit(const SampleView& rows, double lambda, const LinkKind& link,
                       const ProxGradOptions& opts = {});
double glm_lasso_objective(const Eigen::Ref<const MatrixXd>& q, const Eigen::Ref<const VectorXd>& y,
                           const VectorXd& b, double lambda, const LinkKind& link);

}  // namespace adaptz
