#include "adaptz/probvec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adaptz/error.hpp"

namespace adaptz {

SelectionProbs::SelectionProbs(VectorXd arms, double reference)
    : arms_(std::move(arms)), reference_(reference) {
    if (arms_.size() == 0) throw ParameterError("selection probabilities need at least one arm");
    if (!(reference_ > 0.0) || !std::isfinite(reference_))
        throw ParameterError("reference-arm probability must be positive, got " +
                             std::to_string(reference_));
    for (Eigen::Index k = 0; k < arms_.size(); ++k) {
        if (!(arms_[k] > 0.0) || !std::isfinite(arms_[k]))
            throw ParameterError("arm " + std::to_string(k + 1) +
                                 " probability must be positive, got " + std::to_string(arms_[k]));
    }
    const double total = reference_ + arms_.sum();
    if (std::abs(total - 1.0) > kSimplexTol)
        throw ParameterError("selection probabilities sum to " + std::to_string(total));
}

SelectionProbs SelectionProbs::from_arms(VectorXd arms) {
    const double reference = 1.0 - arms.sum();
    return SelectionProbs(std::move(arms), reference);
}

double SelectionProbs::min_probability() const {
    return std::min(reference_, arms_.minCoeff());
}

MatrixXd cov_matrix(const SelectionProbs& probs) {
    const VectorXd& p = probs.arms();
    MatrixXd sigma = -p * p.transpose();
    sigma.diagonal() += p;
    return sigma;
}

MatrixXd cov_inverse_explicit(const SelectionProbs& probs) {
    const int d0 = probs.dim();
    const double gamma = 1.0 / probs.reference();
    MatrixXd inv = MatrixXd::Constant(d0, d0, gamma);
    inv.diagonal() += probs.arms().cwiseInverse();
    return inv;
}

MatrixXd sym_power(const MatrixXd& m, double power, double floor) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
    const VectorXd lambda = eig.eigenvalues().cwiseMax(floor).array().pow(power).matrix();
    MatrixXd out = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

MatrixXd cov_sqrt(const SelectionProbs& probs) {
    return sym_power(cov_matrix(probs), 0.5, 1e-14);
}

MatrixXd cov_inv_sqrt(const SelectionProbs& probs) {
    return sym_power(cov_inverse_explicit(probs), 0.5, 1e-14);
}

CovTriple cov_triple(const SelectionProbs& probs) {
    return {cov_matrix(probs), cov_sqrt(probs), cov_inverse_explicit(probs)};
}

DirectionWeight direction_weight(const SelectionProbs& probs, const VectorXd& u) {
    if (u.size() != probs.dim()) throw ParameterError("direction has wrong dimension");
    if (std::abs(u.norm() - 1.0) > 1e-10) throw ParameterError("direction must be unit-norm");
    const VectorXd v = cov_inverse_explicit(probs) * u;
    const double quad = u.dot(v);
    const double scale = 1.0 / std::sqrt(quad);
    return {v * scale, scale};
}

}  // namespace adaptz
