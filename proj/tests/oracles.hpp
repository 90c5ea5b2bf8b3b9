// Test-only oracles, kept independent of the solver paths they check.
#pragma once

#include <functional>

#include "mdi/distribution.hpp"

namespace mdi::oracles {

// support function by corner enumeration (boxes, d <= ~20)
inline double box_support_by_vertices(const Vec& lower, const Vec& upper, const Vec& z) {
    const std::size_t d = lower.size();
    double best = -kInf;
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            s += ((mask >> j) & 1 ? upper[j] : lower[j]) * z[j];
        best = std::max(best, s);
    }
    return best;
}

// dense simplex grid over three weights with the given step
inline void for_each_simplex3(double step, const std::function<void(double, double, double)>& fn) {
    const long n = static_cast<long>(std::llround(1.0 / step));
    for (long i = 0; i <= n; ++i) {
        for (long j = 0; j <= n - i; ++j) {
            const double a = static_cast<double>(i) / n;
            const double b = static_cast<double>(j) / n;
            fn(a, b, 1.0 - a - b);
        }
    }
}

// min D(q || p) over the 3-atom simplex grid subject to moment(q) in E
inline double iprojection_grid_optimum(const DiscreteDistribution& base, const std::vector<Vec>& rows,
                                       const MomentSet& set, double step) {
    if (base.size() != 3) throw std::logic_error("grid oracle handles 3 atoms");
    const Vec& p = base.weights();
    double best = kInf;
    Vec m(rows.front().size());
    for_each_simplex3(step, [&](double a, double b, double c) {
        const double q[3] = {a, b, c};
        std::fill(m.begin(), m.end(), 0.0);
        for (int i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < m.size(); ++j) m[j] += q[i] * rows[i][j];
        if (!set.contains(m, 1e-12)) return;
        double d = 0.0;
        for (int i = 0; i < 3; ++i) {
            if (q[i] == 0.0) continue;
            if (p[i] == 0.0) {
                d = kInf;
                break;
            }
            d += q[i] * std::log(q[i] / p[i]);
        }
        best = std::min(best, d);
    });
    return best;
}

// max sum_i q_i L_i over the simplex grid subject to D(p' || q) <= r and
// moment(q) in E; the primal side of the worst-case risk duality
inline double worst_case_grid_optimum(const Vec& nominal_weights, const Vec& losses,
                                      const std::vector<Vec>& rows, const MomentSet& set, double r,
                                      double step) {
    const std::size_t n = nominal_weights.size();
    if (n != 2 && n != 3) throw std::logic_error("grid oracle handles 2 or 3 atoms");
    double best = -kInf;
    Vec m(rows.front().size());
    auto consider = [&](const double* q) {
        double kl = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (nominal_weights[i] == 0.0) continue;
            if (q[i] <= 0.0) return;
            kl += nominal_weights[i] * std::log(nominal_weights[i] / q[i]);
        }
        if (kl > r) return;
        std::fill(m.begin(), m.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m.size(); ++j) m[j] += q[i] * rows[i][j];
        if (!set.contains(m, 1e-12)) return;
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += q[i] * losses[i];
        best = std::max(best, v);
    };
    if (n == 2) {
        const long steps = static_cast<long>(std::llround(1.0 / step));
        for (long i = 0; i <= steps; ++i) {
            const double q[2] = {static_cast<double>(i) / steps, 1.0 - static_cast<double>(i) / steps};
            consider(q);
        }
    } else {
        for_each_simplex3(step, [&](double a, double b, double c) {
            const double q[3] = {a, b, c};
            consider(q);
        });
    }
    return best;
}

// largest mass on the high-loss atom of a two-point nominal (w0, w1) with
// losses (l0, l1), l1 > l0, inside the KL ball of radius r; bisection
inline double two_point_ball_optimum(double w0, double w1, double l0, double l1, double r) {
    auto kl = [&](double q1) {
        return w1 * std::log(w1 / q1) + w0 * std::log(w0 / (1.0 - q1));
    };
    double lo = w1, hi = 1.0 - 1e-15;
    if (kl(hi) <= r) return l1 * hi + l0 * (1.0 - hi);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (kl(mid) <= r ? lo : hi) = mid;
    }
    return l1 * lo + l0 * (1.0 - lo);
}

// central finite differences
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
    Vec g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        Vec hi = x, lo = x;
        hi[j] += h;
        lo[j] -= h;
        g[j] = (f(hi) - f(lo)) / (2.0 * h);
    }
    return g;
}

}  // namespace mdi::oracles
