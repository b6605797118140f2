#include "adaptz/model.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "adaptz/error.hpp"

namespace adaptz {

LinkKind LinkKind::identity(double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("identity link needs a positive noise standard deviation");
    return {LinkFamily::Identity, sigma};
}

LinkKind LinkKind::logistic() { return {LinkFamily::Logistic, 1.0}; }

LinkValue link_eval(const LinkKind& link, double eta) {
    if (link.family == LinkFamily::Identity) {
        return {eta, 1.0, link.noise_sd * link.noise_sd};
    }
    // Branch on the sign so exp never overflows; mu and 1 - mu are both
    // formed without cancellation.
    const double e = std::exp(-std::abs(eta));
    const double denom = 1.0 + e;
    const double big = 1.0 / denom;
    const double small = e / denom;
    const double mu = eta >= 0.0 ? big : small;
    const double deriv = big * small;
    return {mu, deriv, deriv};
}

double link_cumulant(const LinkKind& link, double eta) {
    if (link.family == LinkFamily::Identity) return 0.5 * eta * eta;
    return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta)));
}

VectorXd covariate_vector(int arm, int d0) {
    if (arm < 0 || arm > d0)
        throw ConfigError("arm index " + std::to_string(arm) + " outside 0.." + std::to_string(d0));
    VectorXd x = VectorXd::Zero(d0);
    if (arm > 0) x[arm - 1] = 1.0;
    return x;
}

Dataset::Dataset(std::vector<Sample> samples, int d0, int d1, int split_at)
    : samples_(std::move(samples)), d0_(d0), d1_(d1), split_at_(split_at) {
    if (d0_ < 1) throw ConfigError("target dimension must be at least 1");
    if (d1_ < 0) throw ConfigError("nuisance dimension must be non-negative");
    if (split_at_ < 1 || split_at_ >= static_cast<int>(samples_.size()))
        throw ConfigError("fold boundary " + std::to_string(split_at_) + " must lie in [1, " +
                          std::to_string(samples_.size()) + ")");
    for (const Sample& s : samples_) {
        if (s.z.size() != d1_ || s.probs.dim() != d0_)
            throw ConfigError("sample dimensions disagree with the dataset");
        if (s.arm < 0 || s.arm > d0_) throw ConfigError("sample arm out of range");
    }
}

SampleView Dataset::fold1() const {
    return {std::span<const Sample>(samples_).first(split_at_), d0_, d1_};
}

SampleView Dataset::fold2() const {
    return {std::span<const Sample>(samples_).subspan(split_at_), d0_, d1_};
}

SampleView Dataset::all() const { return {std::span<const Sample>(samples_), d0_, d1_}; }

Dataset Dataset::with_split(int split_at) const { return Dataset(samples_, d0_, d1_, split_at); }

namespace {

void put_double(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        cells.push_back(cell);
    }
    return cells;
}

double parse_double(const std::string& s, int line_no) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw IoError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
    return v;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    out << "i,arm,y";
    for (int j = 1; j <= data.d1(); ++j) out << ",z_" << j;
    for (int k = 1; k <= data.d0(); ++k) out << ",p_" << k;
    out << '\n';
    int i = 1;
    for (const Sample& s : data.samples()) {
        out << i++ << ',' << s.arm << ',';
        put_double(out, s.y);
        for (int j = 0; j < data.d1(); ++j) {
            out << ',';
            put_double(out, s.z[j]);
        }
        for (int k = 0; k < data.d0(); ++k) {
            out << ',';
            put_double(out, s.probs.arms()[k]);
        }
        out << '\n';
    }
}

Dataset read_dataset_csv(std::istream& in, int split_at) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty dataset file");
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "i" || header[1] != "arm" || header[2] != "y")
        throw IoError("dataset header must start with i,arm,y");
    int d1 = 0;
    int d0 = 0;
    for (std::size_t c = 3; c < header.size(); ++c) {
        const std::string expect_z = "z_" + std::to_string(d1 + 1);
        const std::string expect_p = "p_" + std::to_string(d0 + 1);
        if (d0 == 0 && header[c] == expect_z) {
            ++d1;
        } else if (header[c] == expect_p) {
            ++d0;
        } else {
            throw IoError("unexpected header column '" + header[c] + "'");
        }
    }
    if (d0 == 0) throw IoError("dataset has no p_ columns");

    std::vector<Sample> samples;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw IoError("line " + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " columns");
        Sample s{0, VectorXd(d1), 0.0, SelectionProbs::from_arms(VectorXd::Constant(d0, 1.0 / (d0 + 1)))};
        const double arm = parse_double(cells[1], line_no);
        s.arm = static_cast<int>(arm);
        if (s.arm != arm || s.arm < 0 || s.arm > d0)
            throw IoError("line " + std::to_string(line_no) + ": bad arm index");
        s.y = parse_double(cells[2], line_no);
        for (int j = 0; j < d1; ++j) s.z[j] = parse_double(cells[3 + j], line_no);
        VectorXd p(d0);
        for (int k = 0; k < d0; ++k) p[k] = parse_double(cells[3 + d1 + k], line_no);
        s.probs = SelectionProbs::from_arms(std::move(p));
        samples.push_back(std::move(s));
    }
    if (split_at <= 0) split_at = static_cast<int>(samples.size()) / 2;
    return Dataset(std::move(samples), d0, d1, split_at);
}

}  // namespace adaptz
