#include <doctest.h>

#include <cmath>

#include "adaptz/error.hpp"
#include "adaptz/pilot.hpp"
#include "fixtures.hpp"

using namespace adaptz;

namespace {

struct Problem {
    MatrixXd q;
    VectorXd y;
};

Problem random_problem(oracle::TestRng& rng, int n, int p, double noise) {
    Problem pr{MatrixXd(n, p), VectorXd(n)};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) pr.q(i, j) = rng.normal();
    const VectorXd b = rng.normal_vector(p);
    pr.y = pr.q * b;
    for (int i = 0; i < n; ++i) pr.y[i] += noise * rng.normal();
    return pr;
}

// max_j |(1/n) q_j^T (y - q b)| - lambda over all j, and the worst active-set
// deviation from equality with sign(b_j) lambda.
std::pair<double, double> kkt_violation(const MatrixXd& q, const VectorXd& y, const VectorXd& b, double lambda) {
    const VectorXd c = q.transpose() * (y - q * b) / static_cast<double>(q.rows());
    double outside = 0.0, active = 0.0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        outside = std::max(outside, std::abs(c[j]) - lambda);
        if (b[j] != 0.0) active = std::max(active, std::abs(c[j] - (b[j] > 0 ? lambda : -lambda)));
    }
    return {outside, active};
}

}  // namespace

TEST_SUITE("pilot") {
    TEST_CASE("OLS recovers noiseless coefficients") {
        oracle::TestRng rng(31);
        const VectorXd theta = rng.normal_vector(3), beta = rng.normal_vector(4);
        const Dataset d = fixture::random_dataset(rng, 3, 4, 60, 40, theta, beta, LinkKind::identity(), false, 0.1);
        const PilotFit f = ols_fit(d.fold1());
        CHECK((f.theta_hat - theta).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((f.beta_hat - beta).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(f.converged);
        CHECK_FALSE(f.singular);
        CHECK(f.method == PilotMethod::OLS);
    }

    TEST_CASE("OLS with an unexplored target block gives the min-norm zeros") {
        oracle::TestRng rng(32);
        std::vector<Sample> rows;
        for (int i = 0; i < 30; ++i)
            rows.push_back(Sample{0, rng.normal_vector(3), rng.normal(), SelectionProbs::from_arms(Eigen::Vector2d(0.3, 0.3))});
        const Dataset d(rows, 2, 3, 29);
        const PilotFit f = ols_fit(d.fold1());
        CHECK(f.theta_hat.cwiseAbs().maxCoeff() < 1e-12);
        CHECK(f.singular);
        CHECK(f.converged);
        CHECK_FALSE(f.note.empty());
    }

    TEST_CASE("OLS agrees with the Gauss-Jordan normal equations") {
        oracle::TestRng rng(33);
        for (int rep = 0; rep < 20; ++rep) {
            const Problem pr = random_problem(rng, 40, 6, 0.5);
            const PilotFit f = ols_fit(pr.q, pr.y, 2);
            const VectorXd ref = oracle::gauss_jordan_solve(pr.q.transpose() * pr.q, pr.q.transpose() * pr.y);
            CHECK((f.coefficients() - ref).cwiseAbs().maxCoeff() < 1e-8);
        }
    }

    TEST_CASE("property: OLS is invariant to duplicating every row") {
        oracle::TestRng rng(34);
        const Problem pr = random_problem(rng, 25, 5, 1.0);
        MatrixXd q2(50, 5);
        VectorXd y2(50);
        q2 << pr.q, pr.q;
        y2 << pr.y, pr.y;
        CHECK((ols_fit(pr.q, pr.y, 2).coefficients() - ols_fit(q2, y2, 2).coefficients()).cwiseAbs().maxCoeff() <
              1e-10);
    }

    TEST_CASE("empty fold is a usage error") {
        const MatrixXd q(0, 3);
        const VectorXd y(0);
        CHECK_THROWS_AS(ols_fit(q, y, 1), UsageError);
        CHECK_THROWS_AS(lasso_fit(q, y, 1, 0.1), UsageError);
        CHECK_THROWS_AS(logistic_mle(q, y, 1), UsageError);
    }

    TEST_CASE("lambda schedule") {
        // 2 (B + 1) sqrt(2 [log(2 / delta) + log 1002] / 475), delta = 1/1002
        const double expect = 2.0 * 2.0 * std::sqrt(2.0 * (std::log(2.0 * 1002.0) + std::log(1002.0)) / 475.0);
        CHECK(lasso_lambda(475, 1.0, 1.0, 2, 1000, 0.2, 2) == doctest::Approx(expect).epsilon(1e-14));
        CHECK(lasso_lambda(475, 1.0, 1.0, 2, 1000, 0.2, 2) == doctest::Approx(0.9887843890387366).epsilon(1e-14));
        // t = 0 with a small model so the first branch of the min is active
        const double delta0 = 4.0 / std::sqrt(1e6);
        CHECK(lasso_lambda(1000000, 1.0, 0.0, 2, 1, 0.0, 2) ==
              doctest::Approx(2.0 * std::sqrt(2.0 * (std::log(2.0 / delta0) + std::log(3.0)) / 1e6)).epsilon(1e-14));
        CHECK(lasso_lambda(300, 2.0, 1.5, 2, 50, 0.1, 3) ==
              doctest::Approx(2.0 * lasso_lambda(300, 1.0, 1.5, 2, 50, 0.1, 3)).epsilon(1e-15));
        CHECK_THROWS_AS(lasso_lambda(100, 1.0, 1.0, 2, 10, 0.3, 2), ParameterError);
        CHECK_THROWS_AS(lasso_lambda(0, 1.0, 1.0, 2, 10, 0.1, 2), ParameterError);
        // GLM schedule with Dx = B + 1 differs only through delta's exponent
        const double dg = std::min(4.0 * std::pow(1e6, 2 * 0.1 - 0.25), 1.0 / 3.0);
        CHECK(glm_lasso_lambda(1000000, 1.0, 1.0, 2, 1, 0.1, 2) ==
              doctest::Approx(2.0 * std::sqrt(2.0 * (std::log(2.0 / dg) + std::log(3.0)) / 1e6)).epsilon(1e-14));
    }

    TEST_CASE("lasso with zero penalty matches OLS") {
        oracle::TestRng rng(35);
        const Problem pr = random_problem(rng, 50, 6, 0.3);
        const PilotFit f = lasso_fit(pr.q, pr.y, 2, 0.0);
        CHECK((f.coefficients() - ols_fit(pr.q, pr.y, 2).coefficients()).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(f.converged);
    }

    TEST_CASE("lasso above the dominance threshold is all zero") {
        oracle::TestRng rng(36);
        const Problem pr = random_problem(rng, 30, 5, 1.0);
        const double lmax = (pr.q.transpose() * pr.y / 30.0).cwiseAbs().maxCoeff();
        CHECK(lasso_fit(pr.q, pr.y, 2, lmax).coefficients().cwiseAbs().maxCoeff() == 0.0);
        CHECK(lasso_fit(pr.q, pr.y, 2, 0.999 * lmax).coefficients().cwiseAbs().maxCoeff() > 0.0);
    }

    TEST_CASE("lasso beats the proximal-gradient oracle on a 10 x 6 instance") {
        oracle::TestRng rng(37);
        const Problem pr = random_problem(rng, 10, 6, 0.5);
        const PilotFit f = lasso_fit(pr.q, pr.y, 2, 0.1);
        const VectorXd ref = oracle::prox_grad_lasso(pr.q, pr.y, 0.1);
        CHECK(oracle::lasso_objective(pr.q, pr.y, f.coefficients(), 0.1) <=
              oracle::lasso_objective(pr.q, pr.y, ref, 0.1) + 1e-8);
        CHECK(lasso_objective(pr.q, pr.y, f.coefficients(), 0.1) ==
              doctest::Approx(oracle::lasso_objective(pr.q, pr.y, f.coefficients(), 0.1)).epsilon(1e-14));
    }

    TEST_CASE("property: lasso KKT conditions") {
        oracle::TestRng rng(38);
        for (int rep = 0; rep < 50; ++rep) {
            const int n = 20, p = 8;
            const Problem pr = random_problem(rng, n, p, 1.0);
            const double lmax = (pr.q.transpose() * pr.y / n).cwiseAbs().maxCoeff();
            const double lambda = rng.uniform(0.01, 0.8) * lmax;
            const PilotFit f = lasso_fit(pr.q, pr.y, 1, lambda);
            const auto [outside, active] = kkt_violation(pr.q, pr.y, f.coefficients(), lambda);
            CHECK(outside <= 1e-8);
            CHECK(active <= 1e-8);
            CHECK(f.coefficients().allFinite());
        }
    }

    TEST_CASE("lasso warm start reaches the same solution") {
        oracle::TestRng rng(39);
        const Problem pr = random_problem(rng, 40, 8, 1.0);
        const VectorXd start = VectorXd::Constant(8, 3.0);
        LassoOptions o;
        o.warm_start = &start;
        const VectorXd a = lasso_fit(pr.q, pr.y, 2, 0.05).coefficients();
        const VectorXd b = lasso_fit(pr.q, pr.y, 2, 0.05, o).coefficients();
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);
    }

    TEST_CASE("logistic MLE with a balanced response and zero design returns zero") {
        const MatrixXd q = MatrixXd::Zero(10, 3);
        VectorXd y(10);
        y << 0, 1, 0, 1, 0, 1, 0, 1, 0, 1;
        const PilotFit f = logistic_mle(q, y, 1);
        CHECK(f.coefficients().cwiseAbs().maxCoeff() == 0.0);
        CHECK(f.converged);
    }

    TEST_CASE("one-dimensional logistic MLE matches grid search and logit of the mean") {
        oracle::TestRng rng(40);
        VectorXd y(50);
        for (int i = 0; i < 50; ++i) y[i] = rng.uniform() < 0.3 ? 1.0 : 0.0;
        const MatrixXd q = MatrixXd::Ones(50, 1);
        const PilotFit f = logistic_mle(q, y, 1);
        const double ybar = y.mean();
        // gradient tolerance 1e-8 over curvature ybar (1 - ybar)
        CHECK(std::abs(f.theta_hat[0] - std::log(ybar / (1.0 - ybar))) < 1e-8 / (ybar * (1.0 - ybar)));
        const double grid = oracle::grid_search_min(
            [&](double b) { return oracle::logistic_nll(q, y, VectorXd::Constant(1, b)); }, -10.0, 10.0);
        CHECK(std::abs(f.theta_hat[0] - grid) < 1e-6);
    }

    TEST_CASE("property: logistic MLE gradient vanishes at the returned fit") {
        oracle::TestRng rng(41);
        for (int rep = 0; rep < 30; ++rep) {
            const int n = rng.integer(80, 200), p = rng.integer(2, 6);
            MatrixXd q(n, p);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < p; ++j) q(i, j) = rng.normal();
            const VectorXd b = 0.5 * rng.normal_vector(p);
            VectorXd y(n);
            for (int i = 0; i < n; ++i) y[i] = rng.uniform() < oracle::logistic(q.row(i).dot(b)) ? 1.0 : 0.0;
            const PilotFit f = logistic_mle(q, y, 1);
            CHECK(f.converged);
            CHECK(logistic_gradient(q, y, f.coefficients()).cwiseAbs().maxCoeff() < 1e-8);
            CHECK(f.coefficients().allFinite());
        }
    }

    TEST_CASE("separable logistic data are flagged") {
        MatrixXd q(20, 1);
        VectorXd y(20);
        for (int i = 0; i < 20; ++i) {
            q(i, 0) = i < 10 ? -1.0 - i : 1.0 + i;
            y[i] = i < 10 ? 0.0 : 1.0;
        }
        const PilotFit f = logistic_mle(q, y, 1);
        CHECK_FALSE(f.converged);
        CHECK(f.coefficients().allFinite());
        CHECK(f.separated);
        VectorXd bad = y;
        bad[0] = 2.0;
        CHECK_THROWS_AS(logistic_mle(q, bad, 1), ParameterError);
    }

    TEST_CASE("GLM lasso with the identity link matches the lasso") {
        oracle::TestRng rng(42);
        const VectorXd theta = rng.normal_vector(2), beta = rng.normal_vector(4);
        const Dataset d = fixture::random_dataset(rng, 2, 4, 60, 50, theta, beta, LinkKind::identity(), true, 0.1);
        const PilotFit a = glm_lasso_fit(d.fold1(), 0.05, LinkKind::identity());
        const PilotFit b = lasso_fit(d.fold1(), 0.05);
        CHECK(a.converged);
        CHECK((a.coefficients() - b.coefficients()).cwiseAbs().maxCoeff() < 1e-6);
        const Design des = stacked_design(d.fold1());
        // the two objectives differ by the constant |y|^2 / 2n
        CHECK(glm_lasso_objective(des.q, des.y, b.coefficients(), 0.05, LinkKind::identity()) +
                  des.y.squaredNorm() / (2.0 * des.y.size()) ==
              doctest::Approx(lasso_objective(des.q, des.y, b.coefficients(), 0.05)).epsilon(1e-12));
    }

    TEST_CASE("GLM lasso with a huge penalty is zero") {
        oracle::TestRng rng(43);
        const Dataset d = fixture::random_dataset(rng, 2, 2, 30, 20, Eigen::Vector2d(1, -1), Eigen::Vector2d(0.5, 0.5),
                                                  LinkKind::logistic(), true);
        CHECK(glm_lasso_fit(d.fold1(), 100.0, LinkKind::logistic()).coefficients().cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("GLM lasso objective is no worse than a long subgradient run") {
        oracle::TestRng rng(44);
        const Dataset d = fixture::random_dataset(rng, 1, 3, 21, 20, VectorXd::Constant(1, 0.8),
                                                  Eigen::Vector3d(0.5, -0.5, 0.2), LinkKind::logistic(), true);
        const PilotFit f = glm_lasso_fit(d.fold1(), 0.05, LinkKind::logistic());
        const Design des = stacked_design(d.fold1());
        const double ours = glm_lasso_objective(des.q, des.y, f.coefficients(), 0.05, LinkKind::logistic());
        CHECK(ours <= oracle::subgradient_glm_lasso(des.q, des.y, 0.05, 20000) + 1e-6);
        CHECK(f.converged);
    }

    TEST_CASE("max nuisance norm") {
        std::vector<Sample> rows;
        const SelectionProbs p = SelectionProbs::from_arms(VectorXd::Constant(1, 0.5));
        rows.push_back(Sample{0, Eigen::Vector2d(3, 4), 0.0, p});
        rows.push_back(Sample{1, Eigen::Vector2d(1, 1), 0.0, p});
        const Dataset d(rows, 1, 2, 1);
        CHECK(max_nuisance_norm(d.all()) == doctest::Approx(5.0));
    }
}
