#include "adaptz/baselines.hpp"

#include "adaptz/error.hpp"
#include "adaptz/estimators.hpp"

namespace adaptz {

namespace {

MatrixXd theta_block_inverse(const MatrixXd& gram, int d0, const char* what) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
    const VectorXd& ev = eig.eigenvalues();
    if (!(ev[0] > 0.0) || ev[ev.size() - 1] / ev[0] > 1e12)
        throw DegenerateDesignError(std::string(what) + " information matrix is singular");
    const MatrixXd& v = eig.eigenvectors();
    return v.topRows(d0) * ev.cwiseInverse().asDiagonal() * v.topRows(d0).transpose();
}

}  // namespace

UnweightedSolution unweighted_z_baseline(const Dataset& data, const PilotFit& pilot) {
    if (pilot.beta_hat.size() != data.d1()) throw ParameterError("pilot dimensions disagree with the dataset");
    const SampleView rows = data.fold2();
    const int d0 = data.d0();
    MatrixXd a = MatrixXd::Zero(d0, d0);
    VectorXd b = VectorXd::Zero(d0);
    MatrixXd cov = MatrixXd::Zero(d0, d0);
    for (std::size_t idx : canonical_order(rows)) {
        const Sample& s = rows.rows[idx];
        VectorXd c = -s.probs.arms();
        if (s.arm > 0) c[s.arm - 1] += 1.0;
        if (s.arm > 0) a.col(s.arm - 1) += c;
        b += c * (s.y - pilot.nuisance(s.z));
        cov += cov_matrix(s.probs);
    }
    const double n2 = static_cast<double>(rows.size());
    a /= n2;
    b /= n2;
    cov /= n2;
    Eigen::JacobiSVD<MatrixXd> svd(a);
    const VectorXd& sv = svd.singularValues();
    if (!(sv[d0 - 1] > 0.0) || sv[0] / sv[d0 - 1] > 1e12)
        throw DegenerateDesignError("unweighted linear system is singular");
    return {a.partialPivLu().solve(b), sym_power(cov, 0.5, 1e-14), static_cast<int>(rows.size())};
}

FullFit ols_full(const Dataset& data, double sigma) {
    const Design d = stacked_design(data.all());
    const MatrixXd gram = d.q.transpose() * d.q;
    FullFit out;
    out.cov = sigma * sigma * theta_block_inverse(gram, data.d0(), "OLS");
    out.theta = ols_fit(d.q, d.y, data.d0()).theta_hat;
    out.n = data.size();
    return out;
}

FullFit mle_full(const Dataset& data) {
    const Design d = stacked_design(data.all());
    const PilotFit fit = logistic_mle(d.q, d.y, data.d0());
    if (fit.separated) throw DegenerateDesignError("logistic likelihood is separated on the full sample");
    const VectorXd coef = fit.coefficients();
    MatrixXd info = MatrixXd::Zero(d.q.cols(), d.q.cols());
    const VectorXd eta = d.q * coef;
    LinkKind link = LinkKind::logistic();
    VectorXd w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) w[i] = link_eval(link, eta[i]).g_prime;
    info = d.q.transpose() * w.asDiagonal() * d.q;
    FullFit out;
    out.cov = theta_block_inverse(info, data.d0(), "logistic");
    out.theta = fit.theta_hat;
    out.n = data.size();
    out.converged = fit.converged;
    return out;
}

}  // namespace adaptz
