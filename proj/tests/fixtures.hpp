#pragma once

#include <vector>

#include "adaptz/model.hpp"
#include "adaptz/pilot.hpp"
#include "oracles.hpp"

namespace fixture {

using adaptz::Dataset;
using adaptz::LinkKind;
using adaptz::Sample;
using Eigen::VectorXd;

// Rows with per-row random selection laws and arms drawn from them. With
// noise = false, y is the conditional mean exactly.
inline Dataset random_dataset(oracle::TestRng& rng, int d0, int d1, int n, int n1, const VectorXd& theta,
                              const VectorXd& beta, const LinkKind& link, bool noise, double floor = 0.05) {
    std::vector<Sample> rows;
    for (int i = 0; i < n; ++i) {
        adaptz::SelectionProbs p = oracle::random_probs(rng, d0, floor);
        const int arm = oracle::draw_atom(rng, p);
        VectorXd z = rng.normal_vector(d1);
        const double eta = (arm ? theta[arm - 1] : 0.0) + z.dot(beta);
        double y;
        if (link.is_identity()) {
            y = eta + (noise ? link.noise_sd * rng.normal() : 0.0);
        } else {
            const double mu = oracle::logistic(eta);
            y = noise ? (rng.uniform() < mu ? 1.0 : 0.0) : mu;
        }
        rows.push_back(Sample{arm, std::move(z), y, std::move(p)});
    }
    return Dataset(std::move(rows), d0, d1, n1);
}

inline adaptz::PilotFit exact_pilot(const VectorXd& theta, const VectorXd& beta) {
    adaptz::PilotFit f;
    f.theta_hat = theta;
    f.beta_hat = beta;
    f.converged = true;
    return f;
}

}  // namespace fixture
