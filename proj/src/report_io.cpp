#include "adaptz/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adaptz/error.hpp"

namespace adaptz {

namespace {

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

nlohmann::json json_number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

nlohmann::json vec_json(const VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace

void write_stderrs_csv(std::ostream& out, const EstimatorReport& er, int d0) {
    out << "rep,estimate,sd,std_error,chi2,iterations,converged";
    for (int k = 1; k <= d0; ++k) out << ",z_" << k;
    out << '\n';
    for (const EstimateRow& r : er.rows) {
        out << r.rep << ',' << num(r.estimate) << ',' << num(r.sd) << ',' << num(r.std_error) << ','
            << num(r.chi2) << ',' << r.iterations << ',' << (r.converged ? 1 : 0);
        for (int k = 0; k < d0; ++k)
            out << ',' << (static_cast<std::size_t>(k) < r.coord_errors.size() ? num(r.coord_errors[k]) : "");
        out << '\n';
    }
}

std::string report_json(const ExperimentReport& report) {
    nlohmann::json j;
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : config_settings(report.config)) cfg[k] = v;
    j["preset"] = report.config.preset;
    j["config"] = cfg;
    j["truth"] = {{"theta_star", vec_json(report.truth.theta_star)},
                  {"beta_star", vec_json(report.truth.beta_star)},
                  {"target", report.truth_u}};
    j["reps"] = report.config.reps;
    j["replication_failures"] = report.rep_failures;
    j["unreliable"] = report.unreliable;
    j["workers"] = report.workers_used;
    j["seconds"] = report.seconds;
    j["generator"] = {{"refit_every", report.config.gen.effective_refit()},
                      {"refits", report.generator_refits},
                      {"mle_fallbacks", report.generator_fallbacks}};
    nlohmann::json ests = nlohmann::json::array();
    for (const EstimatorReport& er : report.estimators) {
        nlohmann::json e;
        e["name"] = estimator_name(er.id);
        e["successes"] = er.rows.size();
        e["failures"] = er.failures;
        e["failure_notes"] = er.failure_notes;
        if (!er.rows.empty()) {
            e["std_error_mean"] = json_number(er.coverage.errors.mean);
            e["std_error_sd"] = json_number(er.coverage.errors.sd);
            e["ks_statistic"] = json_number(er.coverage.errors.ks);
            nlohmann::json cov = nlohmann::json::array();
            for (const CoverageRow& row : er.coverage.rows)
                cov.push_back({{"level", row.level},
                               {"upper", row.upper.coverage},
                               {"lower", row.lower.coverage},
                               {"two_sided", row.two.coverage},
                               {"mean_width", row.two.mean_width}});
            e["coverage"] = cov;
        }
        if (er.chi2_rejection >= 0.0) e["chi2_rejection_95"] = er.chi2_rejection;
        if (er.newton_rate >= 0.0) e["newton_convergence_rate"] = er.newton_rate;
        ests.push_back(e);
    }
    j["estimators"] = ests;
    return j.dump(2) + "\n";
}

std::string coverage_svg(const ExperimentReport& report) {
    const double w = 640, h = 480, left = 70, right = 170, top = 30, bottom = 60;
    const double pw = w - left - right, ph = h - top - bottom;
    const auto& levels = report.config.levels;
    double lo = levels.front(), hi = levels.back();
    for (const auto& er : report.estimators)
        for (const auto& row : er.coverage.rows) lo = std::min(lo, row.two.coverage);
    lo = std::max(0.0, std::floor(lo * 20.0) / 20.0);
    hi = 1.0;
    const double xlo = levels.front(), xhi = levels.size() > 1 ? levels.back() : levels.front() + 0.01;
    auto px = [&](double x) { return left + (x - xlo) / (xhi - xlo) * pw; };
    auto py = [&](double y) { return top + (hi - y) / (hi - lo) * ph; };
    static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double l : levels) {
        s << "<text x=\"" << px(l) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << l << "</text>\n";
    }
    for (int k = 0; k <= 4; ++k) {
        const double y = lo + (hi - lo) * k / 4.0;
        s << "<text x=\"" << left - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << y << "</text>\n";
    }
    s << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 15 << "\" text-anchor=\"middle\">nominal level</text>\n";
    s << "<text x=\"18\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 18 " << top + ph / 2
      << ")\" text-anchor=\"middle\">two-sided coverage</text>\n";
    s << "<line x1=\"" << px(xlo) << "\" y1=\"" << py(xlo) << "\" x2=\"" << px(xhi) << "\" y2=\"" << py(xhi)
      << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    int idx = 0;
    for (const auto& er : report.estimators) {
        if (er.coverage.rows.empty()) continue;
        const char* c = colours[idx % 7];
        s << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
        for (const auto& row : er.coverage.rows) s << px(row.level) << ',' << py(row.two.coverage) << ' ';
        s << "\"/>\n";
        s << "<text x=\"" << left + pw + 12 << "\" y=\"" << top + 16 + 18 * idx << "\" fill=\"" << c << "\">"
          << estimator_name(er.id) << "</text>\n";
        ++idx;
    }
    s << "</svg>\n";
    return s.str();
}

void write_experiment_outputs(const ExperimentReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
    const fs::path base(dir);
    for (const EstimatorReport& er : report.estimators) {
        const std::string name = estimator_name(er.id);
        std::ostringstream cov, errs;
        if (!er.rows.empty()) write_coverage_csv(cov, er.coverage);
        else cov << "level,cov_upper,cov_lower,cov_two,se_upper,se_lower,se_two,mean_width\n";
        write_stderrs_csv(errs, er, report.config.gen.d0);
        write_file(base / ("coverage_" + name + ".csv"), cov.str());
        write_file(base / ("stderrs_" + name + ".csv"), errs.str());
    }
    write_file(base / "report.json", report_json(report));
    if (report.config.write_svg) write_file(base / "coverage.svg", coverage_svg(report));
}

}  // namespace adaptz
