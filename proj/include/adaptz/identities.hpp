#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace adaptz {

struct IdentityCheck {
    std::string name;
    double worst = 0.0;  // largest violation seen over all trials
    double tol = 0.0;
    bool passed = false;
};

// Exact finite-sum identities over `trials` random selection laws with d0 in
// 1..10: closed-form inverse, square root, conditional-mean-zero scores,
// Neyman orthogonality, unit variance of the direction weight and the
// eigenvalue lower bound of the covariance.
std::vector<IdentityCheck> run_identity_checks(std::uint64_t seed, int trials = 1000);

}  // namespace adaptz
