#include "adaptz/glm_weights.hpp"

#include <cmath>

#include "adaptz/error.hpp"

namespace adaptz {

namespace {

// Linear predictor at atom j: theta0_j + h, with theta0_0 = 0.
double atom_eta(const VectorXd& theta0, int j, double h_val) {
    return (j == 0 ? 0.0 : theta0[j - 1]) + h_val;
}

void check_dims(const SelectionProbs& probs, const VectorXd& theta0) {
    if (theta0.size() != probs.dim()) throw ParameterError("theta0 dimension disagrees with probabilities");
}

}  // namespace

VectorXd glm_mean_vector(const SelectionProbs& probs, const VectorXd& theta0, double h_val,
                         const LinkKind& link) {
    check_dims(probs, theta0);
    const int d0 = probs.dim();
    VectorXd m(d0);
    double denom = probs.reference() * link_eval(link, atom_eta(theta0, 0, h_val)).g_prime;
    for (int j = 1; j <= d0; ++j) {
        m[j - 1] = probs.atom(j) * link_eval(link, atom_eta(theta0, j, h_val)).g_prime;
        denom += m[j - 1];
    }
    if (!(denom > 0.0)) throw DegenerateProbabilityError("weighted mean has a zero normaliser");
    return m / denom;
}

GlmCov glm_cov(const SelectionProbs& probs, const VectorXd& m, const VectorXd& theta0, double h_val,
               const LinkKind& link) {
    check_dims(probs, theta0);
    const int d0 = probs.dim();
    MatrixXd sigma = MatrixXd::Zero(d0, d0);
    for (int j = 0; j <= d0; ++j) {
        const double var = link_eval(link, atom_eta(theta0, j, h_val)).var_fn;
        VectorXd centred = -m;
        if (j > 0) centred[j - 1] += 1.0;
        sigma.noalias() += probs.atom(j) * var * centred * centred.transpose();
    }
    sigma = 0.5 * (sigma + sigma.transpose());

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sigma);
    const VectorXd& lambda = eig.eigenvalues();
    if (!lambda.allFinite() || !(lambda.minCoeff() > 0.0))
        throw DegenerateProbabilityError("weighted covariance is not positive definite");
    const VectorXd inv_root = lambda.cwiseMax(1e-12).cwiseSqrt().cwiseInverse();
    MatrixXd omega = eig.eigenvectors() * inv_root.asDiagonal() * eig.eigenvectors().transpose();
    omega = 0.5 * (omega + omega.transpose());
    return {std::move(sigma), std::move(omega)};
}

GlmWeights glm_weights(const SelectionProbs& probs, const VectorXd& theta0, double h_val,
                       const LinkKind& link) {
    VectorXd m = glm_mean_vector(probs, theta0, h_val, link);
    GlmCov cov = glm_cov(probs, m, theta0, h_val, link);
    return {std::move(m), std::move(cov.omega), std::move(cov.sigma_glm)};
}

MatrixXd glm_cov_inverse_woodbury(const SelectionProbs& probs, const VectorXd& m,
                                  const VectorXd& theta0, double h_val, const LinkKind& link) {
    check_dims(probs, theta0);
    const int d0 = probs.dim();
    // eps_j: noise variance at atom j; mbar = D^{-1} m extended to atom 0 so
    // that sum_j p_j mbar_j = 1.
    if (m.size() != d0) throw ParameterError("m dimension disagrees with probabilities");
    VectorXd eps(d0 + 1);
    for (int j = 0; j <= d0; ++j) eps[j] = link_eval(link, atom_eta(theta0, j, h_val)).var_fn;
    const double p0 = probs.reference();
    VectorXd mbar(d0 + 1);
    mbar[0] = (1.0 - m.sum()) / p0;
    for (int k = 1; k <= d0; ++k) mbar[k] = m[k - 1] / probs.atom(k);

    double quad = 0.0;
    for (int k = 1; k <= d0; ++k) {
        if (eps[k] == 0.0) throw DegenerateProbabilityError("zero noise variance at an arm atom");
        quad += probs.atom(k) * mbar[k] * mbar[k] / eps[k];
    }
    const double denom = quad * p0 * eps[0] + mbar[0] * mbar[0] * p0 * p0;
    if (denom == 0.0) throw DegenerateProbabilityError("zero pivot in the rank-2 correction");

    MatrixXd core(2, 2);
    core << -p0 * eps[0], mbar[0] * p0, mbar[0] * p0, quad;
    // E R has columns mbar_k / eps_k and 1.
    MatrixXd er(d0, 2);
    MatrixXd out = MatrixXd::Zero(d0, d0);
    for (int k = 1; k <= d0; ++k) {
        er(k - 1, 0) = mbar[k] / eps[k];
        er(k - 1, 1) = 1.0;
        out(k - 1, k - 1) = 1.0 / (probs.atom(k) * eps[k]);
    }
    out.noalias() += er * core * er.transpose() / denom;
    return out;
}

}  // namespace adaptz
