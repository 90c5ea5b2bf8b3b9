#include "mdi/iprojection.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace mdi {

namespace {

// Atom features and base weights pulled out once per solve.
struct Featurized {
    std::vector<Vec> rows;  // psi(xi_i)
    Vec weights;
    std::size_t d = 0;

    explicit Featurized(const IProjectionProblem& problem)
        : rows(featurize(problem.base, problem.psi)), weights(problem.base.weights()) {
        d = rows.front().size();
        if (problem.set.dim() != d)
            throw InvalidInput("moment set dimension does not match the feature dimension");
    }

    Vec base_moment() const {
        Vec m(d, 0.0);
        for (std::size_t i = 0; i < rows.size(); ++i) axpy(weights[i], rows[i], m);
        return m;
    }

    double alpha_inf() const {
        double a = 0.0;
        for (const Vec& r : rows) a = std::max(a, norm_inf(r));
        return a;
    }
};

// log sum_i w_i exp(-z^T psi_i), shifted so no overflow occurs.
double log_partition(const Vec& z, const Featurized& f) {
    double tmax = -kInf;
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
        if (f.weights[i] == 0.0) continue;
        tmax = std::max(tmax, -dot(z, f.rows[i]));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
        if (f.weights[i] == 0.0) continue;
        s += f.weights[i] * std::exp(-dot(z, f.rows[i]) - tmax);
    }
    return tmax + std::log(s);
}

// Gibbs weights q_i proportional to w_i exp(-z^T psi_i).
Vec gibbs_weights(const Vec& z, const Featurized& f) {
    Vec q(f.rows.size(), 0.0);
    double tmax = -kInf;
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
        if (f.weights[i] == 0.0) continue;
        tmax = std::max(tmax, -dot(z, f.rows[i]));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
        if (f.weights[i] == 0.0) continue;
        q[i] = f.weights[i] * std::exp(-dot(z, f.rows[i]) - tmax);
        total += q[i];
    }
    for (double& v : q) v /= total;
    return q;
}

Vec weighted_moment(const Vec& q, const Featurized& f) {
    Vec m(f.d, 0.0);
    for (std::size_t i = 0; i < f.rows.size(); ++i) axpy(q[i], f.rows[i], m);
    return m;
}

Vec gradient_impl(const Vec& z, const Featurized& f, const MomentSet& set,
                  const SmoothingSchedule& s) {
    Vec scaled(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) scaled[j] = z[j] / s.eta1;
    Vec g = set.project(scaled);
    const Vec q = gibbs_weights(z, f);
    const Vec m = weighted_moment(q, f);
    for (std::size_t j = 0; j < z.size(); ++j) g[j] = -g[j] - s.eta2 * z[j] + m[j];
    return g;
}

double value_impl(const Vec& z, const Featurized& f, const MomentSet& set,
                  const SmoothingSchedule& s) {
    Vec scaled(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) scaled[j] = z[j] / s.eta1;
    const Vec xs = set.project(scaled);
    const double smooth_support = dot(xs, z) - 0.5 * s.eta1 * dot(xs, xs);
    return -smooth_support - log_partition(z, f) - 0.5 * s.eta2 * dot(z, z);
}

SmoothingSchedule schedule_impl(const Featurized& f, const MomentSet& set, const Vec& slater,
                                const DiscreteDistribution& base, double eps) {
    if (!(eps > 0.0)) throw InvalidInput("tolerance must be positive");
    if (slater.size() != f.weights.size())
        throw InvalidInput("Slater weight vector length must match the atom count");

    const DiscreteDistribution p0 = base.reweighted(slater);
    SmoothingSchedule s;
    s.delta = set.interior_margin(weighted_moment(p0.weights(), f));
    if (!(s.delta > 0.0))
        throw Infeasible("Slater violation: the Slater moment is not strictly inside E");

    s.C = relative_entropy(p0, base);
    if (!std::isfinite(s.C))
        throw InvalidInput("Slater weights put mass on atoms the base distribution does not carry");
    if (s.C == 0.0)
        throw InvalidInput(
            "Slater point equals the base distribution (C = 0): the base moment already lies in E, "
            "so solve() takes the feasible shortcut and no schedule is needed");

    s.D = 0.5 * set.max_norm();
    if (s.D == 0.0)
        throw Infeasible("degenerate set E = {0}: translate coordinates (shift psi by a constant)");

    s.alpha_inf = f.alpha_inf();
    s.eta1 = eps / (4.0 * s.D);
    s.eta2 = eps * s.delta * s.delta / (2.0 * s.C * s.C);
    s.L_eta = 1.0 / s.eta1 + s.eta2 + s.alpha_inf * s.alpha_inf;

    const double a2 = s.alpha_inf * s.alpha_inf;
    const double root = std::sqrt(8.0 * s.D * s.C * s.C / (eps * eps * s.delta * s.delta) +
                                  2.0 * a2 * s.C * s.C / (eps * s.delta * s.delta) + 1.0);
    s.M1 = 2.0 * root * std::log(10.0 * (eps + 2.0 * s.C) / eps);
    s.M2 = 2.0 * root *
           std::log(s.C / (eps * s.delta * (2.0 - std::sqrt(3.0))) *
                    std::sqrt(4.0 * (4.0 * s.D / eps + a2 + s.eta2) * (s.C + 0.5 * eps)));
    s.iterations = std::max(std::ceil(std::max(s.M1, s.M2)), 1.0);
    return s;
}

double default_inflation(const MomentSet& set) {
    return 1e-6 * (1.0 + norm_inf(set.center()));
}

}  // namespace

SmoothingSchedule compute_schedule(const IProjectionProblem& problem) {
    if (!problem.slater_weights)
        throw InvalidInput("compute_schedule requires Slater weights (see default_slater)");
    Featurized f(problem);
    return schedule_impl(f, problem.set, *problem.slater_weights, problem.base, problem.tolerance);
}

Vec smoothed_dual_gradient(const Vec& z, const IProjectionProblem& problem,
                           const SmoothingSchedule& schedule) {
    if (!all_finite(z)) throw InvalidInput("smoothed_dual_gradient: non-finite dual vector");
    Featurized f(problem);
    if (z.size() != f.d) throw InvalidInput("smoothed_dual_gradient: dimension mismatch");
    return gradient_impl(z, f, problem.set, schedule);
}

double smoothed_dual_value(const Vec& z, const IProjectionProblem& problem,
                           const SmoothingSchedule& schedule) {
    if (!all_finite(z)) throw InvalidInput("smoothed_dual_value: non-finite dual vector");
    Featurized f(problem);
    if (z.size() != f.d) throw InvalidInput("smoothed_dual_value: dimension mismatch");
    return value_impl(z, f, problem.set, schedule);
}

void project_to_simplex(Vec& v) {
    Vec u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumsum = 0.0;
    double tau = 0.0;
    std::size_t rho = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumsum += u[j];
        const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) {
            rho = j + 1;
            tau = t;
        }
    }
    (void)rho;
    for (double& x : v) x = std::max(x - tau, 0.0);
}

Vec default_slater(const IProjectionProblem& problem) {
    Featurized f(problem);
    const Vec base_m = f.base_moment();
    if (problem.set.interior_margin(base_m) > 0.0) return f.weights;

    const Vec target = problem.set.center();
    Vec q = f.weights;
    // start from the uniform vector when some base weights vanish, so the
    // search is not confined to a face of the simplex
    for (double w : q) {
        if (w == 0.0) {
            q.assign(q.size(), 1.0 / static_cast<double>(q.size()));
            break;
        }
    }

    auto objective = [&](const Vec& w) {
        Vec m = weighted_moment(w, f);
        double s = 0.0;
        for (std::size_t j = 0; j < m.size(); ++j) s += (m[j] - target[j]) * (m[j] - target[j]);
        return 0.5 * s;
    };

    double t = 1.0;
    double fq = objective(q);
    for (int iter = 0; iter < 2000; ++iter) {
        Vec m = weighted_moment(q, f);
        Vec grad(q.size(), 0.0);
        for (std::size_t i = 0; i < q.size(); ++i) {
            double g = 0.0;
            for (std::size_t j = 0; j < f.d; ++j) g += f.rows[i][j] * (m[j] - target[j]);
            grad[i] = g;
        }

        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            Vec trial = q;
            axpy(-t, grad, trial);
            project_to_simplex(trial);
            double step_sq = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i)
                step_sq += (trial[i] - q[i]) * (trial[i] - q[i]);
            const double ft = objective(trial);
            if (ft <= fq - 0.5 * step_sq / std::max(t, 1e-300)) {
                if (step_sq < 1e-28) {
                    q = std::move(trial);
                    fq = ft;
                    iter = 2000;  // converged
                    accepted = true;
                    break;
                }
                q = std::move(trial);
                fq = ft;
                t *= 1.3;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
    }

    const Vec m = weighted_moment(q, f);
    if (!(problem.set.interior_margin(m) > 0.0))
        throw Infeasible(
            "no Slater point found: the interior of E seems unreachable from the sample support; "
            "supply slater_weights or enlarge E");
    return q;
}

IProjectionSolution solve(const IProjectionProblem& problem, const IProjectionOptions& options) {
    if (!(problem.tolerance > 0.0)) throw InvalidInput("tolerance must be positive");
    Featurized f(problem);

    const Vec base_m = f.base_moment();
    if (problem.set.contains(base_m)) {
        IProjectionSolution sol{problem.base, Vec(f.d, 0.0), 0.0, 0.0,
                                2.0 * (1.0 + 2.0 * std::sqrt(3.0)) * problem.tolerance, 0.0, 0,
                                SmoothingSchedule{}, std::nullopt};
        return sol;
    }

    // Assumption requires an interior; inflate zero-interior sets.
    MomentSet set = problem.set;
    std::optional<MomentSet> solved_set;
    if (set.has_empty_interior()) {
        const double tau = options.singleton_inflation > 0.0 ? options.singleton_inflation
                                                             : default_inflation(set);
        set = set.inflated(tau);
        solved_set = set;
        if (set.contains(base_m)) {
            IProjectionSolution sol{problem.base, Vec(f.d, 0.0), 0.0, 0.0,
                                    2.0 * (1.0 + 2.0 * std::sqrt(3.0)) * problem.tolerance, 0.0, 0,
                                    SmoothingSchedule{}, solved_set};
            return sol;
        }
    }

    IProjectionProblem prepared{problem.base, problem.psi, set, problem.slater_weights,
                                problem.tolerance};
    const Vec slater = prepared.slater_weights ? *prepared.slater_weights : default_slater(prepared);
    const SmoothingSchedule schedule =
        schedule_impl(f, set, slater, problem.base, problem.tolerance);

    const double eps = problem.tolerance;
    const double feas_bound = 2.0 * eps * schedule.delta / schedule.C;
    const double opt_bound = 2.0 * (1.0 + 2.0 * std::sqrt(3.0)) * eps;
    // Exit once both measured gaps sit at half their certified bounds. The
    // smoothed optimum always reaches these: its feasibility floor is
    // eta2 ||z*|| <= eps delta / (2 C) and its duality surrogate floor is
    // eta2 ||z*||^2 <= eps / 2, both strictly inside the thresholds.
    const double early_feas = 0.5 * feas_bound;
    const double early_opt = 0.5 * opt_bound;

    const double total_iters = std::min(schedule.iterations,
                                        static_cast<double>(options.max_iterations));
    const long k_max = static_cast<long>(total_iters);
    long interval = options.check_interval > 0
                        ? options.check_interval
                        : std::clamp<long>(k_max / 100, 1, 500);

    const double momentum =
        (std::sqrt(schedule.L_eta) - std::sqrt(schedule.eta2)) /
        (std::sqrt(schedule.L_eta) + std::sqrt(schedule.eta2));

    Vec w(f.d, 0.0), y(f.d, 0.0), y_prev(f.d, 0.0);
    long iters = 0;

    auto exit_check = [&](const Vec& z) {
        const Vec q = gibbs_weights(z, f);
        const Vec mq = weighted_moment(q, f);
        const double feas = set.distance(mq);
        const double opt = std::abs(set.support(z) - dot(z, mq)) + norm2(z) * feas;
        return feas <= early_feas && opt <= early_opt;
    };

    // an almost-feasible base needs no dual ascent at all; checking the
    // origin first also makes re-solving an already-solved problem a fixed
    // point
    const bool done_at_origin = options.early_exit && exit_check(y);
    for (long k = 0; !done_at_origin && k < k_max; ++k) {
        const Vec g = gradient_impl(w, f, set, schedule);
        y_prev = y;
        for (std::size_t j = 0; j < f.d; ++j) y[j] = w[j] + g[j] / schedule.L_eta;

        double g_dot_dy = 0.0;
        for (std::size_t j = 0; j < f.d; ++j) g_dot_dy += g[j] * (y[j] - y_prev[j]);
        if (options.adaptive_restart && g_dot_dy < 0.0) {
            w = y;  // momentum was pointing against ascent; restart it
        } else {
            for (std::size_t j = 0; j < f.d; ++j) w[j] = y[j] + momentum * (y[j] - y_prev[j]);
        }

        if (!all_finite(y) || !all_finite(w)) {
            std::ostringstream os;
            os << "dual iterate diverged at iteration " << (k + 1);
            throw SolverError(os.str());
        }
        iters = k + 1;

        if (options.early_exit && (k + 1) % interval == 0 && exit_check(y)) break;
    }

    const Vec q = gibbs_weights(y, f);
    const Vec mq = weighted_moment(q, f);
    const double feas_gap = set.distance(mq);

    if (feas_gap > feas_bound) {
        std::ostringstream os;
        os << "feasibility gap " << feas_gap << " exceeds the certified bound " << feas_bound
           << " after " << iters << " iterations";
        throw SolverError(os.str());
    }
    if (iters >= options.max_iterations && schedule.iterations > total_iters) {
        // Iteration cap kicked in before the certified count: accept only if
        // the measured optimality surrogate is within the certificate.
        const double surrogate = std::abs(set.support(y) - dot(y, mq)) + norm2(y) * feas_gap;
        if (surrogate > opt_bound) {
            std::ostringstream os;
            os << "iteration cap " << options.max_iterations
               << " reached before certified accuracy (surrogate gap " << surrogate << " > "
               << opt_bound << ")";
            throw SolverError(os.str());
        }
    }

    DiscreteDistribution projection = problem.base.reweighted(q);
    const double entropy = relative_entropy(projection, problem.base);
    return IProjectionSolution{std::move(projection), y,       entropy, feas_gap, opt_bound,
                               feas_bound,            iters,   schedule, solved_set};
}

DiscreteDistribution tilting_oracle(const DiscreteDistribution& base, const FeatureMap& psi,
                                    double target_mean) {
    if (psi.output_dim(base.dim()) != 1)
        throw InvalidInput("tilting_oracle handles scalar feature maps only");
    Vec v(base.size());
    double vmin = kInf, vmax = -kInf;
    for (std::size_t i = 0; i < base.size(); ++i) {
        v[i] = psi(base.atoms()[i])[0];
        if (base.weights()[i] > 0.0) {
            vmin = std::min(vmin, v[i]);
            vmax = std::max(vmax, v[i]);
        }
    }
    if (!(target_mean > vmin && target_mean < vmax))
        throw Infeasible("tilting target must lie strictly between the smallest and largest feature value");

    const Vec& w = base.weights();
    auto tilted_mean = [&](double lambda) {
        double smax = -kInf;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (w[i] > 0.0) smax = std::max(smax, lambda * v[i]);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (w[i] == 0.0) continue;
            const double e = w[i] * std::exp(lambda * v[i] - smax);
            num += e * v[i];
            den += e;
        }
        return num / den;
    };

    double lo = -1.0, hi = 1.0;
    for (int i = 0; i < 200 && tilted_mean(lo) > target_mean; ++i) lo *= 2.0;
    for (int i = 0; i < 200 && tilted_mean(hi) < target_mean; ++i) hi *= 2.0;
    if (tilted_mean(lo) > target_mean || tilted_mean(hi) < target_mean)
        throw SolverError("tilting_oracle failed to bracket the target mean");

    double mid = 0.0;
    for (int i = 0; i < 500; ++i) {
        mid = 0.5 * (lo + hi);
        const double m = tilted_mean(mid);
        if (std::abs(m - target_mean) <= 1e-10) break;
        (m < target_mean ? lo : hi) = mid;
    }

    double smax = -kInf;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (w[i] > 0.0) smax = std::max(smax, mid * v[i]);
    Vec q(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] > 0.0) q[i] = w[i] * std::exp(mid * v[i] - smax);
    return base.reweighted(std::move(q));
}

ConditionalLimitResult conditional_limit_check(const DiscreteDistribution& p, const FeatureMap& psi,
                                               const MomentSet& set, const Vec& loss_values, int N,
                                               long trials, std::uint64_t seed,
                                               double projection_tolerance) {
    if (loss_values.size() != p.size())
        throw InvalidInput("conditional_limit_check: one loss value per atom required");
    if (N < 1 || trials < 1) throw InvalidInput("conditional_limit_check: N and trials must be positive");

    const std::vector<Vec> rows = featurize(p, psi);
    const std::size_t d = rows.front().size();
    Rng rng(seed);

    long accepted = 0;
    double loss_sum = 0.0;
    Vec mean_psi(d);
    for (long t = 0; t < trials; ++t) {
        std::fill(mean_psi.begin(), mean_psi.end(), 0.0);
        double mean_loss = 0.0;
        for (int i = 0; i < N; ++i) {
            const std::size_t idx = rng.categorical(p.weights());
            axpy(1.0 / N, rows[idx], mean_psi);
            mean_loss += loss_values[idx] / N;
        }
        if (set.contains(mean_psi)) {
            ++accepted;
            loss_sum += mean_loss;  // unbiased for E[L(xi_1) | accept] by exchangeability
        }
    }
    if (accepted == 0)
        throw Infeasible("rejection sampling accepted no trials; use a smaller N or a wider set");

    IProjectionProblem problem{p, psi, set, std::nullopt, projection_tolerance};
    const IProjectionSolution sol = solve(problem);
    double proj_mean = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        proj_mean += sol.projection.weights()[i] * loss_values[i];

    return ConditionalLimitResult{loss_sum / accepted, proj_mean, accepted};
}

}  // namespace mdi
