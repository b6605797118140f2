#pragma once

#include <Eigen/Dense>

#include "adaptz/model.hpp"
#include "adaptz/probvec.hpp"

namespace adaptz {

// Per-sample weighting pair for the GLM score, evaluated at pilot values.
struct GlmWeights {
    VectorXd m;          // weighted conditional mean of the covariate
    MatrixXd omega;      // symmetric inverse square root of sigma_glm
    MatrixXd sigma_glm;  // weighted conditional covariance
};

// m_j = p_j g'(theta0_j + h) / sum_{k=0..d0} p_k g'(theta0_k + h), theta0_0 = 0.
VectorXd glm_mean_vector(const SelectionProbs& probs, const VectorXd& theta0, double h_val,
                         const LinkKind& link);

struct GlmCov {
    MatrixXd sigma_glm;
    MatrixXd omega;
};

// sigma_glm = sum_j p_j var(g(eta_j)) (x_j - m)(x_j - m)^T over the d0 + 1
// atoms; omega is its inverse square root (eigenvalue floor 1e-12). Throws
// DegenerateProbabilityError if sigma_glm is not positive definite.
GlmCov glm_cov(const SelectionProbs& probs, const VectorXd& m, const VectorXd& theta0, double h_val,
               const LinkKind& link);

GlmWeights glm_weights(const SelectionProbs& probs, const VectorXd& theta0, double h_val,
                       const LinkKind& link);

// Closed-form inverse of sigma_glm as a diagonal matrix plus a rank-2
// correction. Kept as an independent cross-check on omega^2.
MatrixXd glm_cov_inverse_woodbury(const SelectionProbs& probs, const VectorXd& m,
                                  const VectorXd& theta0, double h_val, const LinkKind& link);

}  // namespace adaptz
