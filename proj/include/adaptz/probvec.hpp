#pragma once

#include <Eigen/Dense>

namespace adaptz {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Per-round arm-selection law over the d0 + 1 covariate atoms: the reference
// arm 0 (all-zeros covariate) and the basis vectors e_1..e_d0.
class SelectionProbs {
public:
    static constexpr double kSimplexTol = 1e-12;

    // Throws ParameterError unless every probability is positive and the
    // total is one within kSimplexTol.
    SelectionProbs(VectorXd arms, double reference);

    // Reference probability implied as 1 - sum(arms).
    static SelectionProbs from_arms(VectorXd arms);

    int dim() const { return static_cast<int>(arms_.size()); }
    const VectorXd& arms() const { return arms_; }
    double reference() const { return reference_; }

    // Probability of atom j, j = 0 (reference) .. d0.
    double atom(int j) const { return j == 0 ? reference_ : arms_[j - 1]; }

    double min_probability() const;

private:
    VectorXd arms_;
    double reference_;
};

struct CovTriple {
    MatrixXd sigma;
    MatrixXd sqrt;
    MatrixXd inv;
};

struct DirectionWeight {
    VectorXd w;
    double scale;
};

// Conditional covariance of the one-hot covariate: diag(p) - p p^T.
MatrixXd cov_matrix(const SelectionProbs& probs);

// Closed-form inverse of cov_matrix: diag(1/p_k) + (1/p0) 1 1^T.
MatrixXd cov_inverse_explicit(const SelectionProbs& probs);

// Symmetric PSD square root of cov_matrix (eigenvalues floored at 1e-14).
MatrixXd cov_sqrt(const SelectionProbs& probs);

// Symmetric inverse square root, taken as the symmetric root of
// cov_inverse_explicit.
MatrixXd cov_inv_sqrt(const SelectionProbs& probs);

CovTriple cov_triple(const SelectionProbs& probs);

// Variance-stabilised direction weight w = S^{-1}u / sqrt(u^T S^{-1} u) and
// scale = 1 / sqrt(u^T S^{-1} u). Requires |u|_2 = 1 within 1e-10.
DirectionWeight direction_weight(const SelectionProbs& probs, const VectorXd& u);

// Symmetric matrix power V diag(max(lambda, floor)^power) V^T.
MatrixXd sym_power(const MatrixXd& m, double power, double floor);

}  // namespace adaptz
