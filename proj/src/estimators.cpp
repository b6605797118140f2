#include "adaptz/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "adaptz/error.hpp"

namespace adaptz {

namespace {

constexpr double kMaxCondition = 1e12;

bool sample_less(const Sample& a, const Sample& b) {
    if (a.arm != b.arm) return a.arm < b.arm;
    if (a.y != b.y) return a.y < b.y;
    for (Eigen::Index k = 0; k < a.z.size(); ++k)
        if (a.z[k] != b.z[k]) return a.z[k] < b.z[k];
    const VectorXd& pa = a.probs.arms();
    const VectorXd& pb = b.probs.arms();
    for (Eigen::Index k = 0; k < pa.size(); ++k)
        if (pa[k] != pb[k]) return pa[k] < pb[k];
    return false;
}

// <x_i, v> for the one-hot covariate of `arm`.
double covariate_dot(int arm, const VectorXd& v) { return arm == 0 ? 0.0 : v[arm - 1]; }

// x_i - pi (or x_i - m) for a one-hot covariate.
VectorXd centred_covariate(int arm, const VectorXd& centre) {
    VectorXd out = -centre;
    if (arm > 0) out[arm - 1] += 1.0;
    return out;
}

std::string under_explored_arms(const SampleView& rows) {
    std::vector<int> counts(rows.d0 + 1, 0);
    for (const Sample& s : rows.rows) ++counts[s.arm];
    std::ostringstream msg;
    bool any = false;
    for (int k = 1; k <= rows.d0; ++k) {
        if (counts[k] == 0) {
            msg << (any ? ", " : "") << k;
            any = true;
        }
    }
    if (!any) return "every arm appears in fold 2 but the system is still ill-conditioned";
    return "arms never chosen in fold 2: " + msg.str();
}

// Smallest singular value; throws when the condition number exceeds 1e12.
double check_conditioning(const MatrixXd& a, const SampleView& rows, const char* what) {
    Eigen::JacobiSVD<MatrixXd> svd(a);
    const VectorXd& sv = svd.singularValues();
    const double smax = sv[0];
    const double smin = sv[sv.size() - 1];
    if (!std::isfinite(smax) || !(smin > 0.0) || smax / smin > kMaxCondition)
        throw DegenerateDesignError(std::string(what) + " is singular; " + under_explored_arms(rows));
    return smin;
}

void check_unit(const VectorXd& u, int d0) {
    if (u.size() != d0) throw ParameterError("direction has the wrong dimension");
    if (std::abs(u.norm() - 1.0) > 1e-10) throw ParameterError("direction must have unit norm");
}

void check_pilot(const PilotFit& pilot, const Dataset& data) {
    if (pilot.theta_hat.size() != data.d0() || pilot.beta_hat.size() != data.d1())
        throw ParameterError("pilot dimensions disagree with the dataset");
}

// Pilot-evaluated quantities for one fold-2 sample of the GLM path.
struct GlmRow {
    int arm;
    double y;
    double h;
    VectorXd a;  // omega (x - m)
    VectorXd centred;
    MatrixXd omega_sq;
};

std::vector<GlmRow> glm_rows(const SampleView& rows, const PilotFit& pilot, const LinkKind& link,
                             bool need_omega_sq) {
    std::vector<GlmRow> out;
    out.reserve(rows.size());
    for (std::size_t idx : canonical_order(rows)) {
        const Sample& s = rows.rows[idx];
        const double h = pilot.nuisance(s.z);
        GlmWeights w = glm_weights(s.probs, pilot.theta_hat, h, link);
        GlmRow r{s.arm, s.y, h, VectorXd(), centred_covariate(s.arm, w.m), MatrixXd()};
        r.a = w.omega * r.centred;
        if (need_omega_sq) r.omega_sq = w.omega * w.omega;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

std::vector<std::size_t> canonical_order(const SampleView& rows) {
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return sample_less(rows.rows[i], rows.rows[j]);
    });
    return order;
}

VectorXd pl_score(const Sample& sample, const VectorXd& theta, double h_val) {
    const double resid = sample.y - covariate_dot(sample.arm, theta) - h_val;
    return cov_inv_sqrt(sample.probs) * centred_covariate(sample.arm, sample.probs.arms()) * resid;
}

PLSolution adaptz_pl(const Dataset& data, const PilotFit& pilot, double sigma) {
    check_pilot(pilot, data);
    if (!(sigma > 0.0)) throw ParameterError("noise standard deviation must be positive");
    const SampleView rows = data.fold2();
    const int d0 = data.d0();
    MatrixXd a = MatrixXd::Zero(d0, d0);
    VectorXd b = VectorXd::Zero(d0);
    MatrixXd scaling = MatrixXd::Zero(d0, d0);
    for (std::size_t idx : canonical_order(rows)) {
        const Sample& s = rows.rows[idx];
        const VectorXd c = cov_inv_sqrt(s.probs) * centred_covariate(s.arm, s.probs.arms());
        if (s.arm > 0) a.col(s.arm - 1) += c;
        b += c * (s.y - pilot.nuisance(s.z));
        scaling += cov_sqrt(s.probs);
    }
    const double n2 = static_cast<double>(rows.size());
    a /= n2;
    b /= n2;
    scaling /= n2;

    PLSolution sol;
    sol.min_singular = check_conditioning(a, rows, "weighted linear system");
    sol.theta = a.partialPivLu().solve(b);
    sol.scaling = std::move(scaling);
    sol.n2 = static_cast<int>(rows.size());
    sol.sigma_noise = sigma;
    return sol;
}

DirSolution pl_direction(const Dataset& data, const VectorXd& u, const PilotFit& pilot) {
    check_pilot(pilot, data);
    check_unit(u, data.d0());
    const SampleView rows = data.fold2();
    const double u_theta = u.dot(pilot.theta_hat);
    double num = 0.0, den = 0.0, den_abs = 0.0, scale_sum = 0.0;
    for (std::size_t idx : canonical_order(rows)) {
        const Sample& s = rows.rows[idx];
        const DirectionWeight dw = direction_weight(s.probs, u);
        const double a = dw.w.dot(centred_covariate(s.arm, s.probs.arms()));
        const double c = covariate_dot(s.arm, u);
        // x^T (I - u u^T) theta_hat
        const double offset = covariate_dot(s.arm, pilot.theta_hat) - c * u_theta;
        num += a * (s.y - offset - pilot.nuisance(s.z));
        den += a * c;
        den_abs += std::abs(a * c);
        scale_sum += dw.scale;
    }
    if (den_abs == 0.0 || std::abs(den) <= 1e-12 * den_abs)
        throw DegenerateDesignError("direction score has no information on u; " + under_explored_arms(rows));
    DirSolution sol;
    sol.theta_u = num / den;
    sol.n2 = static_cast<int>(rows.size());
    sol.scale_bar = scale_sum / static_cast<double>(rows.size());
    return sol;
}

VectorXd glm_score(const Sample& sample, const GlmWeights& weights, const VectorXd& theta, double h_val,
                   const LinkKind& link) {
    const double mu = link_eval(link, covariate_dot(sample.arm, theta) + h_val).g;
    return weights.omega * centred_covariate(sample.arm, weights.m) * (sample.y - mu);
}

GLMSolution adaptz_glm(const Dataset& data, const PilotFit& pilot, const LinkKind& link) {
    check_pilot(pilot, data);
    const SampleView rows = data.fold2();
    const int d0 = data.d0();
    const std::vector<GlmRow> pre = glm_rows(rows, pilot, link, false);
    const double n2 = static_cast<double>(pre.size());

    auto residual = [&](const VectorXd& theta) {
        VectorXd f = VectorXd::Zero(d0);
        for (const GlmRow& r : pre)
            f += r.a * (r.y - link_eval(link, covariate_dot(r.arm, theta) + r.h).g);
        return VectorXd(f / n2);
    };
    // d residual / d theta = -E[a g'(.) x^T]
    auto jacobian = [&](const VectorXd& theta) {
        MatrixXd j = MatrixXd::Zero(d0, d0);
        for (const GlmRow& r : pre) {
            if (r.arm == 0) continue;
            j.col(r.arm - 1) -= r.a * link_eval(link, theta[r.arm - 1] + r.h).g_prime;
        }
        return MatrixXd(j / n2);
    };

    GLMSolution sol;
    sol.n2 = static_cast<int>(pre.size());
    sol.scaling = MatrixXd::Zero(d0, d0);
    for (const GlmRow& r : pre) {
        const double gp = link_eval(link, covariate_dot(r.arm, pilot.theta_hat) + r.h).g_prime;
        sol.scaling.noalias() += r.a * gp * r.centred.transpose();
    }
    sol.scaling /= n2;

    VectorXd theta = pilot.theta_hat;
    VectorXd f = residual(theta);
    double fnorm = f.norm();
    int iter = 0;
    for (; iter < 100 && f.lpNorm<Eigen::Infinity>() >= 1e-10; ++iter) {
        const MatrixXd j = jacobian(theta);
        check_conditioning(j, rows, "estimating-equation Jacobian");
        const VectorXd step = j.partialPivLu().solve(f);
        double scale = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= 30; ++halving, scale *= 0.5) {
            VectorXd cand = theta - scale * step;
            VectorXd fc = residual(cand);
            const double norm_c = fc.norm();
            if (std::isfinite(norm_c) && norm_c < fnorm) {
                theta = std::move(cand);
                f = std::move(fc);
                fnorm = norm_c;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    sol.theta = theta;
    sol.newton_iters = iter;
    sol.residual = f.lpNorm<Eigen::Infinity>();
    sol.converged = sol.residual < 1e-10;
    Eigen::JacobiSVD<MatrixXd> svd(jacobian(theta));
    sol.min_singular = svd.singularValues()[d0 - 1];
    return sol;
}

DirSolution glm_direction(const Dataset& data, const VectorXd& u, const PilotFit& pilot,
                          const LinkKind& link) {
    check_pilot(pilot, data);
    check_unit(u, data.d0());
    const SampleView rows = data.fold2();
    const std::vector<GlmRow> pre = glm_rows(rows, pilot, link, true);
    const double n2 = static_cast<double>(pre.size());
    const double u_theta = u.dot(pilot.theta_hat);

    struct DirRow {
        double b;       // w^T (x - m)
        double c;       // <x, u>
        double offset;  // x^T (I - u u^T) theta_hat + h
        double y;
    };
    std::vector<DirRow> dr;
    dr.reserve(pre.size());
    double v_cov = 0.0;
    for (const GlmRow& r : pre) {
        const VectorXd o2u = r.omega_sq * u;
        const double quad = u.dot(o2u);
        if (!(quad > 0.0)) throw DegenerateProbabilityError("direction weight has a zero normaliser");
        const double b = o2u.dot(r.centred) / std::sqrt(quad);
        const double c = covariate_dot(r.arm, u);
        const double xtheta = covariate_dot(r.arm, pilot.theta_hat);
        dr.push_back({b, c, xtheta - c * u_theta + r.h, r.y});
        v_cov += b * link_eval(link, xtheta + r.h).g_prime * r.centred.dot(u);
    }
    v_cov /= n2;

    auto score = [&](double t) {
        double f = 0.0;
        for (const DirRow& r : dr) f += r.b * (r.y - link_eval(link, r.c * t + r.offset).g);
        return f / n2;
    };
    auto slope = [&](double t) {
        double f = 0.0;
        for (const DirRow& r : dr) f -= r.b * r.c * link_eval(link, r.c * t + r.offset).g_prime;
        return f / n2;
    };

    DirSolution sol;
    sol.n2 = static_cast<int>(pre.size());
    sol.scale_bar = v_cov;

    double t = u_theta;
    double f = score(t);
    bool done = std::abs(f) <= 1e-13;
    int iter = 0;
    for (; !done && iter < 100; ++iter) {
        const double d = slope(t);
        if (!(std::abs(d) > 0.0) || !std::isfinite(d)) break;
        const double step = f / d;
        double scale = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= 30; ++halving, scale *= 0.5) {
            const double cand = t - scale * step;
            const double fc = score(cand);
            if (std::isfinite(fc) && std::abs(fc) < std::abs(f)) {
                t = cand;
                f = fc;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        if (std::abs(f) <= 1e-13 || std::abs(scale * step) <= 1e-13 * (1.0 + std::abs(t))) done = true;
    }
    sol.iterations = iter;
    sol.converged = done;

    if (!done) {
        // Expand a bracket around the pilot value, then bisect.
        const double t0 = u_theta;
        const double f0 = score(t0);
        double lo = t0, hi = t0;
        double flo = f0;
        bool bracketed = f0 == 0.0;
        for (double radius = 1.0; !bracketed && radius <= 1e3; radius *= 2.0) {
            const double fl = score(t0 - radius);
            const double fh = score(t0 + radius);
            if ((fl <= 0.0) != (f0 <= 0.0)) {
                lo = t0 - radius;
                hi = t0;
                flo = fl;
                bracketed = true;
            } else if ((fh <= 0.0) != (f0 <= 0.0)) {
                lo = t0;
                hi = t0 + radius;
                flo = f0;
                bracketed = true;
            }
        }
        if (!bracketed) throw RootBracketError("direction score has no sign change within radius 1e3");
        while (hi - lo > 1e-12) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            const double fm = score(mid);
            ++iter;
            if ((fm <= 0.0) == (flo <= 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        t = 0.5 * (lo + hi);
        sol.used_bisection = true;
        sol.iterations = iter;
    }
    sol.theta_u = t;
    if (!(v_cov > 0.0)) throw DegenerateDesignError("direction variance factor is not positive; " + under_explored_arms(rows));
    return sol;
}

}  // namespace adaptz
