#include <doctest.h>

#include <cmath>

#include "adaptz/datagen.hpp"
#include "adaptz/error.hpp"

using namespace adaptz;

namespace {

bool same_dataset(const Dataset& a, const Dataset& b) {
    if (a.size() != b.size() || a.split_at() != b.split_at()) return false;
    for (int i = 0; i < a.size(); ++i) {
        const Sample& s = a.samples()[i];
        const Sample& t = b.samples()[i];
        if (s.arm != t.arm || s.y != t.y || s.z != t.z || s.probs.arms() != t.probs.arms() ||
            s.probs.reference() != t.probs.reference())
            return false;
    }
    return true;
}

// Lag-1 autocorrelation of the first context coordinate.
double lag1(const Dataset& d) {
    double mean = 0.0;
    for (const Sample& s : d.samples()) mean += s.z[0];
    mean /= d.size();
    double num = 0.0, den = 0.0;
    for (int i = 0; i < d.size(); ++i) {
        const double a = d.samples()[i].z[0] - mean;
        den += a * a;
        if (i > 0) num += a * (d.samples()[i - 1].z[0] - mean);
    }
    return num / den;
}

}  // namespace

TEST_SUITE("datagen") {
    TEST_CASE("UCB selection examples") {
        CHECK(ucb_select(Eigen::Vector2d(-100.0, 100.0), Eigen::Vector2i(0, 5), 2.0, 500) == 1);
        CHECK(ucb_select(Eigen::Vector2d(2.0, 2.0), Eigen::Vector2i(10, 10), 2.0, 500) == 1);
        CHECK(std::sqrt(2.0 * std::log(500.0)) == doctest::Approx(3.525509352823274).epsilon(1e-15));
        CHECK(ucb_select(Eigen::Vector2d(0.0, 3.0), Eigen::Vector2i(1, 100), 2.0, 500) == 1);
        CHECK(ucb_select(Eigen::Vector2d(0.0, 3.0), Eigen::Vector2i(2, 100), 2.0, 500) == 2);
        CHECK(ucb_select(Eigen::Vector3d(0.0, 0.0, 0.0), Eigen::Vector3i(4, 4, 0), 2.0, 500) == 3);
        CHECK_THROWS_AS(ucb_select(Eigen::Vector2d(0, 0), Eigen::Vector2i(1, 1), 2.0, 1), ParameterError);
    }

    TEST_CASE("selection law assembly") {
        const SelectionProbs p = assemble_probs(1, 1, 0.2, 2);
        CHECK(p.reference() == 0.2);
        CHECK(p.atom(1) == doctest::Approx(0.6).epsilon(1e-15));
        CHECK(p.atom(2) == doctest::Approx(0.2).epsilon(1e-15));

        const SelectionProbs late = assemble_probs(2, 1000000, 0.2, 3);
        const double other = 1.0 / (2.0 * std::pow(1e6, 0.4));
        CHECK(late.atom(1) == doctest::Approx(other).epsilon(1e-14));
        CHECK(late.atom(2) == doctest::Approx(0.8 - 2.0 * other).epsilon(1e-14));
        CHECK_THROWS_AS(assemble_probs(0, 1, 0.2, 2), ParameterError);
        CHECK_THROWS_AS(assemble_probs(3, 1, 0.2, 2), ParameterError);
    }

    TEST_CASE("property: assembled laws lie on the simplex above the floor") {
        for (int d0 = 1; d0 <= 6; ++d0)
            for (int i = 1; i <= 5000; i += 37)
                for (double t : {0.0, 0.1, 0.2, 0.45}) {
                    const SelectionProbs p = assemble_probs(1 + i % d0, i, t, d0);
                    CHECK(std::abs(p.arms().sum() + p.reference() - 1.0) < 1e-12);
                    CHECK(p.min_probability() > 0.0);
                }
    }

    TEST_CASE("inverse-CDF arm draw") {
        const SelectionProbs p = SelectionProbs(Eigen::Vector2d(0.5, 0.3), 0.2);
        CHECK(draw_arm(p, 0.1) == 0);
        CHECK(draw_arm(p, 0.2) == 1);
        CHECK(draw_arm(p, 0.69) == 1);
        CHECK(draw_arm(p, 0.71) == 2);
        CHECK(draw_arm(p, 0.9999999999999999) == 2);
    }

    TEST_CASE("linear generator is deterministic in the seed") {
        GenConfig cfg;
        const GenResult a = gen_linear_adaptive(cfg, 11), b = gen_linear_adaptive(cfg, 11), c = gen_linear_adaptive(cfg, 12);
        CHECK(same_dataset(a.data, b.data));
        CHECK_FALSE(same_dataset(a.data, c.data));
        CHECK(a.truth.theta_star == VectorXd::Constant(2, 2.0));
        CHECK(a.truth.beta_star == b.truth.beta_star);
        CHECK(a.data.split_at() == 125);
        CHECK(a.diag.refits == 499);
    }

    TEST_CASE("true model is shared across replications and sparse when asked") {
        GenConfig cfg;
        cfg.d1 = 10;
        cfg.beta_sparse = true;
        cfg.sparsity = 3;
        const TrueModel m = draw_true_model(cfg, 5);
        CHECK(m.beta_star.tail(7).cwiseAbs().maxCoeff() == 0.0);
        CHECK(m.beta_star.head(3).cwiseAbs().minCoeff() > 0.0);
        CHECK(draw_true_model(cfg, 5).beta_star == m.beta_star);
        const GenResult r1 = gen_linear_adaptive(cfg, m, 100), r2 = gen_linear_adaptive(cfg, m, 101);
        CHECK(r1.truth.beta_star == r2.truth.beta_star);
    }

    TEST_CASE("reference arm frequency over 10000 rounds") {
        GenConfig cfg;
        cfg.n = 10000;
        cfg.n1 = 5000;
        const GenResult r = gen_linear_adaptive(cfg, 2024);
        int zeros = 0;
        for (const Sample& s : r.data.samples()) zeros += s.arm == 0;
        CHECK(std::abs(zeros / 10000.0 - 0.2) <= 0.013);
    }

    TEST_CASE("property: recorded laws match the assembly rule and the lower bound") {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            GenConfig cfg;
            cfg.d0 = 1 + static_cast<int>(seed % 3);
            cfg.t = 0.1 * static_cast<double>(seed % 3);
            const GenResult r = gen_linear_adaptive(cfg, seed);
            const double floor = std::min(1.0 / (2.0 * std::pow(cfg.n, 2.0 * cfg.t)), 0.4 / cfg.d0);
            for (int i = 0; i < r.data.size(); ++i) {
                const SelectionProbs& p = r.data.samples()[i].probs;
                const int round = i + 1;
                const double other = std::min(1.0 / (2.0 * std::pow(static_cast<double>(round), 2.0 * cfg.t)), 0.4 / cfg.d0);
                int k_star = 1;
                for (int k = 1; k <= cfg.d0; ++k)
                    if (p.atom(k) != other) k_star = k;
                const SelectionProbs ref = assemble_probs(k_star, round, cfg.t, cfg.d0);
                CHECK(p.arms() == ref.arms());
                CHECK(p.reference() == ref.reference());
                CHECK(p.arms().minCoeff() >= floor);
            }
        }
    }

    TEST_CASE("lasso-piloted generator runs with periodic refits") {
        GenConfig cfg;
        cfg.d1 = 30;
        cfg.n = 200;
        cfg.n1 = 100;
        cfg.pilot_kind = GenPilot::Lasso;
        cfg.refit_every = 10;
        const GenResult r = gen_linear_adaptive(cfg, 3);
        CHECK(r.diag.refit_every == 10);
        CHECK(r.diag.refits == 20);
        cfg.refit_every = 0;
        cfg.d1 = 200;
        CHECK(cfg.effective_refit() == 25);
    }

    TEST_CASE("logistic generator") {
        GenConfig cfg;
        cfg.link = LinkKind::logistic();
        cfg.d1 = 3;
        cfg.n = 2000;
        cfg.n1 = 1000;
        cfg.ar_gamma = 0.0;
        const GenResult iid = gen_logistic_adaptive(cfg, 9);
        for (const Sample& s : iid.data.samples()) CHECK((s.y == 0.0 || s.y == 1.0));
        CHECK(std::abs(lag1(iid.data)) < 0.08);
        cfg.ar_gamma = 0.5;
        const GenResult ar = gen_logistic_adaptive(cfg, 9);
        CHECK(std::abs(lag1(ar.data) - 0.5) < 0.08);
        CHECK(same_dataset(ar.data, gen_logistic_adaptive(cfg, 9).data));
        // gamma = 0 contexts are the raw innovations of the gamma > 0 run
        const Sample& a0 = iid.data.samples()[0];
        const Sample& b0 = ar.data.samples()[0];
        CHECK(a0.z == b0.z);
        const VectorXd w1 = ar.data.samples()[1].z - 0.5 * b0.z;
        CHECK((w1 - iid.data.samples()[1].z).cwiseAbs().maxCoeff() < 1e-15);
    }

    TEST_CASE("config validation") {
        GenConfig cfg;
        cfg.n1 = 500;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg = GenConfig{};
        cfg.t = 0.5;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg = GenConfig{};
        cfg.theta_star = VectorXd::Zero(3);
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg = GenConfig{};
        cfg.link = LinkKind::logistic();
        cfg.pilot_kind = GenPilot::Lasso;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}
