#pragma once

// Slow, independent reference computations used only by the tests. Nothing
// here calls the library's solvers.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "adaptz/model.hpp"
#include "adaptz/probvec.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// splitmix64 with Box-Muller; deliberately unrelated to the library's generator.
class TestRng {
public:
    explicit TestRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    double uniform() { return (static_cast<double>(next() >> 11) + 0.5) / 9007199254740992.0; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }
    double normal() {
        const double u1 = uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }
    VectorXd normal_vector(int n) {
        VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = normal();
        return v;
    }
    VectorXd unit_vector(int n) {
        VectorXd v = normal_vector(n);
        while (v.norm() == 0.0) v = normal_vector(n);
        return v / v.norm();
    }

private:
    std::uint64_t state_;
};

// Valid selection law over d0 + 1 atoms, every probability at least `floor`.
inline adaptz::SelectionProbs random_probs(TestRng& rng, int d0, double floor = 0.01) {
    VectorXd w(d0 + 1);
    for (int j = 0; j <= d0; ++j) w[j] = rng.uniform();
    w /= w.sum();
    w = (w * (1.0 - floor * (d0 + 1))).array() + floor;
    VectorXd arms = w.tail(d0);
    return adaptz::SelectionProbs::from_arms(arms);
}

inline int draw_atom(TestRng& rng, const adaptz::SelectionProbs& p) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (int j = 0; j <= p.dim(); ++j) {
        cum += p.atom(j);
        if (u < cum) return j;
    }
    return p.dim();
}

inline MatrixXd gauss_jordan_inverse(MatrixXd a) {
    const Eigen::Index n = a.rows();
    MatrixXd inv = MatrixXd::Identity(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index piv = c;
        for (Eigen::Index r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        for (Eigen::Index k = 0; k < n; ++k) {
            std::swap(a(c, k), a(piv, k));
            std::swap(inv(c, k), inv(piv, k));
        }
        const double d = a(c, c);
        for (Eigen::Index k = 0; k < n; ++k) {
            a(c, k) /= d;
            inv(c, k) /= d;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a(r, c);
            for (Eigen::Index k = 0; k < n; ++k) {
                a(r, k) -= f * a(c, k);
                inv(r, k) -= f * inv(c, k);
            }
        }
    }
    return inv;
}

inline VectorXd gauss_jordan_solve(const MatrixXd& a, const VectorXd& b) { return gauss_jordan_inverse(a) * b; }

inline double soft(double x, double t) { return x > t ? x - t : (x < -t ? x + t : 0.0); }

inline double lasso_objective(const MatrixXd& q, const VectorXd& y, const VectorXd& b, double lambda) {
    const double n = static_cast<double>(q.rows());
    return (y - q * b).squaredNorm() / (2.0 * n) + lambda * b.cwiseAbs().sum();
}

// Largest eigenvalue of a PSD matrix by power iteration.
inline double power_iteration(const MatrixXd& m, int iters = 2000) {
    VectorXd v = VectorXd::Ones(m.rows()) / std::sqrt(static_cast<double>(m.rows()));
    double lam = 0.0;
    for (int k = 0; k < iters; ++k) {
        VectorXd w = m * v;
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        lam = v.dot(w);
        v = w / nw;
    }
    return lam;
}

// Plain ISTA with a fixed step 1/L, run to `tol` change or `max_iter`.
inline VectorXd prox_grad_lasso(const MatrixXd& q, const VectorXd& y, double lambda, double tol = 1e-13,
                                int max_iter = 500000) {
    const double n = static_cast<double>(q.rows());
    const MatrixXd g = q.transpose() * q / n;
    const VectorXd qy = q.transpose() * y / n;
    const double step = 1.0 / (power_iteration(g) * 1.0001);
    VectorXd b = VectorXd::Zero(q.cols());
    for (int it = 0; it < max_iter; ++it) {
        const VectorXd grad = g * b - qy;
        VectorXd nb(b.size());
        for (Eigen::Index j = 0; j < b.size(); ++j) nb[j] = soft(b[j] - step * grad[j], step * lambda);
        const double change = (nb - b).cwiseAbs().maxCoeff();
        b = nb;
        if (change < tol) break;
    }
    return b;
}

inline double logistic(double eta) { return eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta)); }

inline double logistic_nll(const MatrixXd& q, const VectorXd& y, const VectorXd& b) {
    double f = 0.0;
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        const double eta = q.row(i).dot(b);
        f += std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))) - y[i] * eta;
    }
    return f / static_cast<double>(q.rows());
}

// Long-run subgradient descent with diminishing steps; returns the best objective seen.
inline double subgradient_glm_lasso(const MatrixXd& q, const VectorXd& y, double lambda, int iters = 200000) {
    VectorXd b = VectorXd::Zero(q.cols());
    double best = logistic_nll(q, y, b) + lambda * b.cwiseAbs().sum();
    const double n = static_cast<double>(q.rows());
    for (int k = 1; k <= iters; ++k) {
        VectorXd g = VectorXd::Zero(q.cols());
        for (Eigen::Index i = 0; i < q.rows(); ++i) g += q.row(i).transpose() * (logistic(q.row(i).dot(b)) - y[i]);
        g /= n;
        for (Eigen::Index j = 0; j < b.size(); ++j) g[j] += lambda * (b[j] > 0 ? 1.0 : (b[j] < 0 ? -1.0 : 0.0));
        b -= (0.5 / std::sqrt(static_cast<double>(k))) * g;
        best = std::min(best, logistic_nll(q, y, b) + lambda * b.cwiseAbs().sum());
    }
    return best;
}

// Minimiser of a unimodal function by successively refined grid search.
inline double grid_search_min(const std::function<double(double)>& f, double lo, double hi, int rounds = 60) {
    for (int r = 0; r < rounds; ++r) {
        const int pts = 41;
        double best_x = lo, best_f = f(lo);
        for (int k = 1; k < pts; ++k) {
            const double x = lo + (hi - lo) * k / (pts - 1);
            const double fx = f(x);
            if (fx < best_f) best_f = fx, best_x = x;
        }
        const double w = (hi - lo) / (pts - 1);
        lo = best_x - w;
        hi = best_x + w;
    }
    return 0.5 * (lo + hi);
}

inline double bisect_root(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int k = 0; k < 200 && hi - lo > 1e-14 * (1.0 + std::abs(lo)); ++k) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm <= 0.0) == (flo <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Beasley-Springer-Moro quantile followed by Newton steps on the CDF.
inline double bsm_inv_normal(double p) {
    static const double a[] = {2.50662823884, -18.61500062529, 41.39119773534, -25.44106049637};
    static const double b[] = {-8.47351093090, 23.08336743743, -21.06224101826, 3.13082909833};
    static const double c[] = {0.3374754822726147, 0.9761690190917186, 0.1607979714918209,
                               0.0276438810333863, 0.0038405729373609, 0.0003951896511919,
                               0.0000321767881768, 0.0000002888167364, 0.0000003960315187};
    const double y = p - 0.5;
    double x;
    if (std::abs(y) < 0.42) {
        const double r = y * y;
        x = y * (((a[3] * r + a[2]) * r + a[1]) * r + a[0]) / ((((b[3] * r + b[2]) * r + b[1]) * r + b[0]) * r + 1.0);
    } else {
        double r = y > 0 ? 1.0 - p : p;
        r = std::log(-std::log(r));
        x = c[0] + r * (c[1] + r * (c[2] + r * (c[3] + r * (c[4] + r * (c[5] + r * (c[6] + r * (c[7] + r * c[8])))))));
        if (y < 0) x = -x;
    }
    for (int k = 0; k < 3; ++k) {
        const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.141592653589793);
        x -= (cdf - p) / pdf;
    }
    return x;
}

}  // namespace oracle
