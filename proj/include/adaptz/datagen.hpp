#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "adaptz/model.hpp"
#include "adaptz/pilot.hpp"

namespace adaptz {

enum class GenPilot { OLS, Lasso };

struct GenConfig {
    int d0 = 2;
    int d1 = 5;
    int n = 500;
    int n1 = 125;
    double C = 2.0;
    double t = 0.2;
    LinkKind link = LinkKind::identity(1.0);
    GenPilot pilot_kind = GenPilot::OLS;
    double ar_gamma = 0.5;
    int sparsity = 2;
    int refit_every = 0;  // 0 selects 1, or 25 when d1 >= 200
    std::optional<VectorXd> theta_star;  // default: every entry 2
    std::optional<VectorXd> beta_star;   // default: drawn once from the truth stream
    bool beta_sparse = false;            // keep only the first `sparsity` entries of beta*
    double lasso_nu = 1.0;
    std::optional<double> lasso_B;       // default: max |z_i|_2 over the fitted rows
    std::optional<double> lasso_lambda;  // explicit override of the schedule

    int effective_refit() const;
    // Throws ConfigError on out-of-range fields.
    void validate() const;
};

// Lasso penalty for a fit on `rows` under the config's nu / B / s settings.
double config_lasso_lambda(const GenConfig& cfg, const SampleView& rows);
double config_lasso_lambda(const GenConfig& cfg, const Eigen::Ref<const MatrixXd>& z_rows, int n_rows);

struct GenDiagnostics {
    int refits = 0;
    int fallbacks = 0;  // rounds whose UCB index used the zero vector after a failed MLE
    int refit_every = 1;
};

struct GenResult {
    Dataset data;
    TrueModel truth;
    GenDiagnostics diag;
};

// theta* and beta* for an experiment, drawn from the truth stream of `seed`.
TrueModel draw_true_model(const GenConfig& cfg, std::uint64_t seed);

// argmax_k theta_k + sqrt(C log n / counts_k), 1-based; zero counts win,
// ties go to the smallest index.
int ucb_select(const VectorXd& theta_hat, const Eigen::VectorXi& counts, double C, int n);

// p0 = 0.2, min{1 / (2 i^{2t}), 0.4 / d0} on the other arms, the remainder on k_star.
SelectionProbs assemble_probs(int k_star, int i, double t, int d0);

// Inverse-CDF draw over the ordering (p0, p1, ..., p_d0).
int draw_arm(const SelectionProbs& probs, double uniform);

GenResult gen_linear_adaptive(const GenConfig& cfg, const TrueModel& truth, std::uint64_t seed);
GenResult gen_linear_adaptive(const GenConfig& cfg, std::uint64_t seed);
GenResult gen_logistic_adaptive(const GenConfig& cfg, const TrueModel& truth, std::uint64_t seed);
GenResult gen_logistic_adaptive(const GenConfig& cfg, std::uint64_t seed);

// Dispatches on cfg.link.
GenResult generate(const GenConfig& cfg, const TrueModel& truth, std::uint64_t seed);

}  // namespace adaptz
