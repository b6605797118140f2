#pragma once

#include <Eigen/Dense>

#include "adaptz/model.hpp"
#include "adaptz/pilot.hpp"

namespace adaptz {

// Fold-2 Z-estimate from the unweighted score (X - pi)(Y - <X, theta> - h).
// `scaling` is (mean_i Sigma_i)^{1/2} from the recorded probabilities and is
// used exactly like the AdapTZ-PL scaling when forming intervals.
struct UnweightedSolution {
    VectorXd theta;
    MatrixXd scaling;
    int n2 = 0;
};

UnweightedSolution unweighted_z_baseline(const Dataset& data, const PilotFit& pilot);

// Full-sample plug-in fit of theta with the textbook covariance for i.i.d.
// data: sigma^2 (Q^T Q)^{-1} for OLS, the inverse Fisher information for the
// logistic MLE. `cov` is the theta block.
struct FullFit {
    VectorXd theta;
    MatrixXd cov;
    int n = 0;
    bool converged = true;
};

FullFit ols_full(const Dataset& data, double sigma);
FullFit mle_full(const Dataset& data);

}  // namespace adaptz
