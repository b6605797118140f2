#pragma once

#include <iosfwd>
#include <string>

#include "adaptz/harness.hpp"

namespace adaptz {

// rep,estimate,sd,std_error,chi2,iterations,converged,z_1..z_d0
void write_stderrs_csv(std::ostream& out, const EstimatorReport& er, int d0);

// Config echo, truth, failure counts, summaries and runtime.
std::string report_json(const ExperimentReport& report);

// Two-sided coverage against level for every estimator, with the y = x line.
std::string coverage_svg(const ExperimentReport& report);

// coverage_<est>.csv, stderrs_<est>.csv, report.json and optionally
// coverage.svg under `dir`. Throws IoError when the directory is not writable.
void write_experiment_outputs(const ExperimentReport& report, const std::string& dir);

}  // namespace adaptz
