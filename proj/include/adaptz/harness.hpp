#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adaptz/config.hpp"
#include "adaptz/inference.hpp"
#include "adaptz/model.hpp"
#include "adaptz/pilot.hpp"

namespace adaptz {

// One estimator on one replication. `estimate` and `sd` refer to <u, theta>.
struct EstimateRow {
    int rep = 0;
    double estimate = 0.0;
    double sd = 0.0;
    double std_error = 0.0;  // (estimate - <u, theta*>) / sd
    double chi2 = 0.0;       // region statistic at theta*; NaN for scalar estimators
    std::vector<double> coord_errors;  // sqrt(n2) scaling (theta - theta*) / sigma, vector estimators only
    int iterations = 0;
    bool converged = true;  // Newton converged without the bisection fallback
};

struct EstimatorReport {
    EstimatorId id;
    std::vector<EstimateRow> rows;  // successful replications, ordered by rep
    int failures = 0;
    std::vector<std::string> failure_notes;  // first few messages
    CoverageReport coverage;
    double chi2_rejection = -1.0;  // share of chi2 above the 95% quantile; -1 when not applicable
    double newton_rate = -1.0;     // share of all replications whose Newton solve converged
};

struct ExperimentReport {
    ExperimentConfig config;
    TrueModel truth;
    double truth_u = 0.0;
    std::vector<EstimatorReport> estimators;
    int rep_failures = 0;  // replications lost before any estimator ran
    bool unreliable = false;
    int workers_used = 1;
    double seconds = 0.0;
    long long generator_refits = 0;
    long long generator_fallbacks = 0;

    const EstimatorReport* find(EstimatorId id) const;
};

// Estimates from one dataset, in the order of cfg.estimators. A failed
// estimator yields std::nullopt with `note` filled.
struct SingleEstimate {
    EstimatorId id;
    std::optional<EstimateRow> row;
    std::string note;
};

// Fold-1 pilot for the estimators under cfg.pilot.
PilotFit fit_estimator_pilot(const ExperimentConfig& cfg, const Dataset& data);

// Runs every selected estimator on `data`. `truth` may be null, in which
// case error columns are NaN.
std::vector<SingleEstimate> estimate_all(const ExperimentConfig& cfg, const Dataset& data,
                                         const TrueModel* truth, int rep = 0);

// Worker count after the ADAPTZ_THREADS override.
int resolve_workers(int requested);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

}  // namespace adaptz
