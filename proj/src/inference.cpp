#include "adaptz/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include <boost/math/distributions/chi_squared.hpp>

#include "adaptz/error.hpp"

namespace adaptz {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inv_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("normal quantile needs p in (0, 1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    // Work in the lower half and reflect, so that q(1 - p) = -q(p) exactly.
    const bool upper = p > 0.5;
    const double pp = upper ? 1.0 - p : p;
    double x;
    if (pp < p_low) {
        const double q = std::sqrt(-2.0 * std::log(pp));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = pp - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    if (pp != 0.5) {
        const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - pp;
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
        x = x - u / (1.0 + 0.5 * x * u);
    } else {
        x = 0.0;
    }
    return upper ? -x : x;
}

double chi2_quantile(int df, double p) {
    if (df < 1) throw ParameterError("chi-square degrees of freedom must be positive");
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("chi-square quantile needs p in (0, 1)");
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), p);
}

Interval normal_interval(double centre, double sd, double level, IntervalKind kind) {
    if (!(level > 0.0 && level < 1.0)) throw ParameterError("confidence level must lie in (0, 1)");
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind) {
        case IntervalKind::TwoSided: {
            const double half = inv_normal_cdf(1.0 - 0.5 * (1.0 - level)) * sd;
            return {centre - half, centre + half, level, kind};
        }
        case IntervalKind::UpperOneSided:
            return {centre - inv_normal_cdf(level) * sd, inf, level, kind};
        case IntervalKind::LowerOneSided:
            return {-inf, centre + inv_normal_cdf(level) * sd, level, kind};
    }
    throw ParameterError("unknown interval kind");
}

Interval dir_interval(const DirSolution& sol, double sigma, double alpha, IntervalKind kind) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    if (!(sol.scale_bar > 0.0)) throw ParameterError("scale_bar must be positive");
    const double sd = sigma / (std::sqrt(static_cast<double>(sol.n2)) * sol.scale_bar);
    return normal_interval(sol.theta_u, sd, 1.0 - alpha, kind);
}

namespace {

double region_stat(const MatrixXd& scaling, int n2, double sigma, const VectorXd& theta,
                   const VectorXd& probe) {
    if (probe.size() != theta.size()) throw ParameterError("probe dimension mismatch");
    const VectorXd z = std::sqrt(static_cast<double>(n2)) * (scaling * (theta - probe)) / sigma;
    return z.squaredNorm();
}

}  // namespace

double chi2_region_stat(const PLSolution& sol, const VectorXd& theta_probe) {
    return region_stat(sol.scaling, sol.n2, sol.sigma_noise, sol.theta, theta_probe);
}

double chi2_region_stat(const GLMSolution& sol, const VectorXd& theta_probe) {
    return region_stat(sol.scaling, sol.n2, 1.0, sol.theta, theta_probe);
}

double functional_sd(const MatrixXd& scaling, int n2, double sigma, const VectorXd& u) {
    const VectorXd v = scaling.transpose().partialPivLu().solve(u);
    return sigma * v.norm() / std::sqrt(static_cast<double>(n2));
}

double ks_statistic(std::vector<double> sample) {
    if (sample.empty()) throw UsageError("KS statistic of an empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = normal_cdf(sample[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

CoverageCell coverage_stats(double truth, const std::vector<Interval>& intervals) {
    if (intervals.empty()) throw UsageError("coverage of an empty interval list");
    CoverageCell cell;
    int hits = 0;
    double width = 0.0;
    for (const Interval& iv : intervals) {
        if (iv.level != intervals.front().level || iv.kind != intervals.front().kind)
            throw UsageError("coverage intervals must share level and kind");
        if (iv.contains(truth)) ++hits;
        width += iv.width();
    }
    const double t = static_cast<double>(intervals.size());
    cell.count = static_cast<int>(intervals.size());
    cell.coverage = hits / t;
    cell.se = std::sqrt(cell.coverage * (1.0 - cell.coverage) / t);
    cell.mean_width = width / t;
    return cell;
}

ErrorSummary summarize_errors(const std::vector<double>& std_errors) {
    ErrorSummary s;
    s.count = static_cast<int>(std_errors.size());
    if (std_errors.empty()) return s;
    double sum = 0.0;
    for (double e : std_errors) sum += e;
    s.mean = sum / s.count;
    double ss = 0.0;
    for (double e : std_errors) ss += (e - s.mean) * (e - s.mean);
    s.sd = s.count > 1 ? std::sqrt(ss / (s.count - 1)) : 0.0;
    s.ks = ks_statistic(std_errors);
    return s;
}

CoverageReport coverage_report(double truth, const std::vector<double>& estimates,
                               const std::vector<double>& sds, const std::vector<double>& levels) {
    if (estimates.size() != sds.size()) throw UsageError("estimates and sds differ in length");
    if (estimates.empty()) throw UsageError("coverage of an empty replication set");
    CoverageReport rep;
    for (double level : levels) {
        std::vector<Interval> up, lo, two;
        for (std::size_t r = 0; r < estimates.size(); ++r) {
            up.push_back(normal_interval(estimates[r], sds[r], level, IntervalKind::UpperOneSided));
            lo.push_back(normal_interval(estimates[r], sds[r], level, IntervalKind::LowerOneSided));
            two.push_back(normal_interval(estimates[r], sds[r], level, IntervalKind::TwoSided));
        }
        rep.rows.push_back({level, coverage_stats(truth, up), coverage_stats(truth, lo),
                            coverage_stats(truth, two)});
    }
    for (std::size_t r = 0; r < estimates.size(); ++r) rep.std_errors.push_back((estimates[r] - truth) / sds[r]);
    rep.errors = summarize_errors(rep.std_errors);
    return rep;
}

void write_coverage_csv(std::ostream& out, const CoverageReport& report) {
    out << "level,cov_upper,cov_lower,cov_two,se_upper,se_lower,se_two,mean_width\n";
    char buf[512];
    for (const CoverageRow& r : report.rows) {
        std::snprintf(buf, sizeof buf, "%.4g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.level,
                      r.upper.coverage, r.lower.coverage, r.two.coverage, r.upper.se, r.lower.se, r.two.se,
                      r.two.mean_width);
        out << buf;
    }
}

}  // namespace adaptz
