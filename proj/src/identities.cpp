#include "adaptz/identities.hpp"

#include <algorithm>
#include <cmath>

#include "adaptz/estimators.hpp"
#include "adaptz/glm_weights.hpp"
#include "adaptz/probvec.hpp"
#include "adaptz/rng.hpp"

namespace adaptz {

namespace {

// Plain Gauss-Jordan with partial pivoting; deliberately independent of Eigen's solvers.
MatrixXd gauss_jordan_inverse(MatrixXd a) {
    const Eigen::Index n = a.rows();
    MatrixXd inv = MatrixXd::Identity(n, n);
    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index piv = col;
        for (Eigen::Index r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        a.row(col).swap(a.row(piv));
        inv.row(col).swap(inv.row(piv));
        const double d = a(col, col);
        a.row(col) /= d;
        inv.row(col) /= d;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            a.row(r) -= f * a.row(col);
            inv.row(r) -= f * inv.row(col);
        }
    }
    return inv;
}

SelectionProbs random_probs(RandomStream& rs, int d0) {
    VectorXd w(d0 + 1);
    for (int j = 0; j <= d0; ++j) {
        const double u = rs.uniform();
        w[j] = 0.01 + u * u * u;
    }
    w /= w.sum();
    VectorXd arms = w.tail(d0);
    return SelectionProbs::from_arms(arms);
}

Sample atom_sample(int arm, const SelectionProbs& probs, double y) {
    return Sample{arm, VectorXd(), y, probs};
}

}  // namespace

std::vector<IdentityCheck> run_identity_checks(std::uint64_t seed, int trials) {
    std::vector<IdentityCheck> checks = {
        {"inverse covariance closed form vs Gauss-Jordan", 0.0, 1e-10, false},
        {"covariance square root squared", 0.0, 1e-10, false},
        {"PL score conditional mean at truth", 0.0, 1e-12, false},
        {"GLM score conditional mean at truth", 0.0, 1e-12, false},
        {"Neyman identity sum_j p_j g'_j (x_j - m)", 0.0, 1e-12, false},
        {"direction weight unit variance", 0.0, 1e-12, false},
        {"covariance eigenvalue lower bound", 0.0, 0.0, false},
    };
    RandomStream rs(seed, StreamPurpose::Truth);
    const LinkKind logistic = LinkKind::logistic();
    for (int trial = 0; trial < trials; ++trial) {
        const int d0 = 1 + trial % 10;
        const SelectionProbs probs = random_probs(rs, d0);
        const MatrixXd sigma = cov_matrix(probs);

        // (a)
        const MatrixXd inv = cov_inverse_explicit(probs);
        const MatrixXd gj = gauss_jordan_inverse(sigma);
        checks[0].worst = std::max(checks[0].worst, (inv - gj).cwiseAbs().maxCoeff());

        // (b)
        const MatrixXd root = cov_sqrt(probs);
        checks[1].worst = std::max(checks[1].worst, (root * root - sigma).cwiseAbs().maxCoeff());

        // (c) PL: nuisance error delta and symmetric two-point noise; the
        // atom-weighted sum of the score vanishes.
        VectorXd theta(d0);
        for (int k = 0; k < d0; ++k) theta[k] = 4.0 * rs.uniform() - 2.0;
        const double h_true = 2.0 * rs.uniform() - 1.0;
        const double delta = 2.0 * rs.uniform() - 1.0;
        const double noise = 0.5 + rs.uniform();
        VectorXd pl_mean = VectorXd::Zero(d0);
        for (int j = 0; j <= d0; ++j) {
            const double mean_y = (j ? theta[j - 1] : 0.0) + h_true;
            for (double e : {-noise, noise}) {
                const VectorXd s = pl_score(atom_sample(j, probs, mean_y + e), theta, h_true + delta);
                pl_mean += 0.5 * probs.atom(j) * s;
            }
        }
        checks[2].worst = std::max(checks[2].worst, pl_mean.cwiseAbs().maxCoeff());

        // (c) GLM: Bernoulli outcomes with weights at the true parameters.
        const GlmWeights gw = glm_weights(probs, theta, h_true, logistic);
        VectorXd glm_mean = VectorXd::Zero(d0);
        for (int j = 0; j <= d0; ++j) {
            const double mu = link_eval(logistic, (j ? theta[j - 1] : 0.0) + h_true).g;
            for (int y = 0; y <= 1; ++y) {
                const VectorXd s = glm_score(atom_sample(j, probs, y), gw, theta, h_true, logistic);
                glm_mean += probs.atom(j) * (y ? mu : 1.0 - mu) * s;
            }
        }
        checks[3].worst = std::max(checks[3].worst, glm_mean.cwiseAbs().maxCoeff());

        // (d)
        VectorXd neyman = VectorXd::Zero(d0);
        for (int j = 0; j <= d0; ++j) {
            VectorXd xc = -gw.m;
            if (j) xc[j - 1] += 1.0;
            neyman += probs.atom(j) * link_eval(logistic, (j ? theta[j - 1] : 0.0) + h_true).g_prime * xc;
        }
        checks[4].worst = std::max(checks[4].worst, neyman.cwiseAbs().maxCoeff());

        // (e)
        VectorXd u(d0);
        for (int k = 0; k < d0; ++k) u[k] = rs.normal();
        if (u.norm() == 0.0) u[0] = 1.0;
        u.normalize();
        const DirectionWeight dw = direction_weight(probs, u);
        double second = 0.0;
        for (int j = 0; j <= d0; ++j) {
            VectorXd xc = -probs.arms();
            if (j) xc[j - 1] += 1.0;
            const double a = dw.w.dot(xc);
            second += probs.atom(j) * a * a;
        }
        checks[5].worst = std::max(checks[5].worst, std::abs(second - 1.0));

        // (f) recorded as the shortfall below the bound, zero when it holds.
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
        double pmin = probs.reference();
        for (int k = 1; k <= d0; ++k) pmin = std::min(pmin, probs.atom(k));
        const double bound = pmin / (d0 + 2);
        checks[6].worst = std::max(checks[6].worst, bound - eig.eigenvalues()[0]);
    }
    for (auto& c : checks) c.passed = c.worst <= c.tol;
    return checks;
}

}  // namespace adaptz
