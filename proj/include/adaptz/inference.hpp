#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "adaptz/estimators.hpp"

namespace adaptz {

// TwoSided: c -/+ q_{1-a/2} s. UpperOneSided: [c - q_{1-a} s, +inf), which
// misses when the estimate overshoots. LowerOneSided: (-inf, c + q_{1-a} s],
// which misses when the estimate undershoots; a negatively biased estimator
// loses coverage here first.
enum class IntervalKind { TwoSided, UpperOneSided, LowerOneSided };

struct Interval {
    double lo;
    double hi;
    double level;
    IntervalKind kind;

    bool contains(double x) const { return lo <= x && x <= hi; }
    double width() const { return hi - lo; }
};

double normal_cdf(double x);

// Rational approximation with one Halley step against std::erfc; absolute
// error far below 1e-8 on (0, 1). Throws ParameterError outside (0, 1).
double inv_normal_cdf(double p);

// Quantile of the chi-square distribution with `df` degrees of freedom.
double chi2_quantile(int df, double p);

Interval normal_interval(double centre, double sd, double level, IntervalKind kind);

// theta_u -/+ q sigma / (sqrt(n2) scale_bar). For GLM-Direction the limit is
// unit variance after v_cov scaling, so pass sigma = 1.
Interval dir_interval(const DirSolution& sol, double sigma, double alpha, IntervalKind kind);

// |sqrt(n2) scaling (theta - probe)|^2 / sigma^2; the GLM form has sigma = 1.
double chi2_region_stat(const PLSolution& sol, const VectorXd& theta_probe);
double chi2_region_stat(const GLMSolution& sol, const VectorXd& theta_probe);

// Standard deviation of u^T theta implied by sqrt(n2) scaling (theta - theta*)
// / sigma ~ N(0, I): sigma |scaling^{-T} u| / sqrt(n2).
double functional_sd(const MatrixXd& scaling, int n2, double sigma, const VectorXd& u);

// One-sample Kolmogorov-Smirnov distance to N(0, 1).
double ks_statistic(std::vector<double> sample);

struct CoverageCell {
    double coverage = 0.0;
    double se = 0.0;  // sqrt(c (1 - c) / T)
    double mean_width = 0.0;
    int count = 0;
};

// All intervals must share level and kind. Throws UsageError on empty input.
CoverageCell coverage_stats(double truth, const std::vector<Interval>& intervals);

struct ErrorSummary {
    double mean = 0.0;
    double sd = 0.0;
    double ks = 0.0;
    int count = 0;
};

ErrorSummary summarize_errors(const std::vector<double>& std_errors);

struct CoverageRow {
    double level;
    CoverageCell upper;
    CoverageCell lower;
    CoverageCell two;
};

struct CoverageReport {
    std::vector<CoverageRow> rows;
    std::vector<double> std_errors;
    ErrorSummary errors;
};

// Intervals at every level of the grid for per-replication (estimate, sd).
CoverageReport coverage_report(double truth, const std::vector<double>& estimates,
                               const std::vector<double>& sds, const std::vector<double>& levels);

void write_coverage_csv(std::ostream& out, const CoverageReport& report);

}  // namespace adaptz
