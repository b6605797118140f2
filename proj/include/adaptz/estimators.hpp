#pragma once

#include <vector>

#include <Eigen/Dense>

#include "adaptz/glm_weights.hpp"
#include "adaptz/model.hpp"
#include "adaptz/pilot.hpp"

namespace adaptz {

// Solution of the weighted linear estimating equations on fold 2. `scaling`
// is the fold-2 mean of Sigma_i^{1/2}; sqrt(n2) * scaling * (theta - theta*)
// / sigma is asymptotically standard normal.
struct PLSolution {
    VectorXd theta;
    MatrixXd scaling;
    int n2 = 0;
    double sigma_noise = 1.0;
    double min_singular = 0.0;  // smallest singular value of the system matrix
};

// Scalar estimate of <u, theta*>. For the partial linear model scale_bar is
// the fold-2 mean of 1 / sqrt(u^T Sigma_i^{-1} u); for the GLM it is v_cov.
struct DirSolution {
    double theta_u = 0.0;
    double scale_bar = 0.0;
    int n2 = 0;
    int iterations = 0;
    bool converged = true;        // GLM: Newton met its tolerance without the fallback
    bool used_bisection = false;  // GLM: root taken from the bracketing fallback
};

// `scaling` is the fold-2 mean of Omega_i (X_i - m_i) g'(.) (X_i - m_i)^T at
// the pilot; scaling * sqrt(n2) * (theta - theta*) is asymptotically N(0, I).
struct GLMSolution {
    VectorXd theta;
    MatrixXd scaling;
    int n2 = 0;
    int newton_iters = 0;
    bool converged = false;
    double residual = 0.0;      // inf-norm of the mean score at theta
    double min_singular = 0.0;  // empirical Jacobian at theta, no threshold implied
};

// Sigma_i^{-1/2} (X_i - pi_i) {Y_i - <X_i, theta> - h}
VectorXd pl_score(const Sample& sample, const VectorXd& theta, double h_val);

PLSolution adaptz_pl(const Dataset& data, const PilotFit& pilot, double sigma = 1.0);

DirSolution pl_direction(const Dataset& data, const VectorXd& u, const PilotFit& pilot);

// Omega_i (X_i - m_i) {Y_i - g(<X_i, theta> + h)} with weights fixed at the pilot.
VectorXd glm_score(const Sample& sample, const GlmWeights& weights, const VectorXd& theta,
                   double h_val, const LinkKind& link);

GLMSolution adaptz_glm(const Dataset& data, const PilotFit& pilot, const LinkKind& link);

DirSolution glm_direction(const Dataset& data, const VectorXd& u, const PilotFit& pilot,
                          const LinkKind& link);

// Fold-2 evaluation order sorted on sample content. Every fold-2 sum runs in
// this order, so estimates do not depend on how the fold is arranged.
std::vector<std::size_t> canonical_order(const SampleView& rows);

}  // namespace adaptz
