#pragma once

#include "mdi/distribution.hpp"

namespace mdi {

/// Entropy projection instance: minimize D(Q || base) over distributions Q
/// on the base atoms subject to E_Q[psi(xi)] in E.
struct IProjectionProblem {
    DiscreteDistribution base;
    FeatureMap psi;
    MomentSet set;
    /// Optional Slater point P° as weights over the base atoms; its moment
    /// must lie strictly inside E. Constructed automatically when absent.
    std::optional<Vec> slater_weights;
    /// Accuracy parameter epsilon of the smoothing schedule.
    double tolerance = 1e-3;
};

/// All quantities of the double-smoothing parameter schedule.
struct SmoothingSchedule {
    double C = 0;          // D(P° || base)
    double D = 0;          // (1/2) max_{y in E} ||y||_2
    double delta = 0;      // Slater margin of the P° moment
    double alpha_inf = 0;  // max_i ||psi(xi_i)||_inf
    double eta1 = 0;
    double eta2 = 0;
    double L_eta = 0;
    double M1 = 0;
    double M2 = 0;
    /// ceil(max{M1, M2}), saturated at numeric limits.
    double iterations = 0;
};

struct IProjectionSolution {
    DiscreteDistribution projection;  // Gibbs reweighting of the base atoms
    Vec dual;                         // final dual iterate z_k
    double entropy_value = 0;         // D(projection || base)
    double feasibility_gap = 0;       // distance(E, moment(projection))
    double certified_optimality_bound = 0;   // 2 (1 + 2 sqrt(3)) eps
    double certified_feasibility_bound = 0;  // 2 eps delta / C
    long iterations_run = 0;
    /// Schedule the run used; zero-initialized when the feasible-base
    /// shortcut applied.
    SmoothingSchedule schedule;
    /// Moment set actually solved against (differs from the problem's set
    /// only when a zero-interior set was inflated).
    std::optional<MomentSet> solved_set;
};

struct IProjectionOptions {
    /// Hard cap on iterations regardless of the schedule (the certified
    /// count can be astronomically large for near-degenerate sets).
    long max_iterations = 2'000'000;
    /// Stop once the measured feasibility gap and duality-gap surrogate
    /// both fall below half their certified bounds.
    bool early_exit = true;
    /// Gradient-based adaptive restart of the momentum sequence.
    bool adaptive_restart = true;
    /// Inflation half-width for zero-interior sets; <= 0 picks the default
    /// 1e-6 * (1 + ||center||_inf).
    double singleton_inflation = 0.0;
    /// Spacing of the early-exit checks; <= 0 picks a default.
    long check_interval = 0;
};

/// Evaluate the Slater margin and the schedule. Requires slater_weights.
SmoothingSchedule compute_schedule(const IProjectionProblem& problem);

/// Smoothed gradient G_eta(z) of the dual objective; log-sum-exp form.
Vec smoothed_dual_gradient(const Vec& z, const IProjectionProblem& problem,
                           const SmoothingSchedule& schedule);

/// Smoothed dual objective F_eta(z); G_eta is its gradient.
double smoothed_dual_value(const Vec& z, const IProjectionProblem& problem,
                           const SmoothingSchedule& schedule);

/// Fast-gradient solve with Gibbs primal recovery and certificate checks.
/// Returns the base unchanged when its moment already lies in E.
IProjectionSolution solve(const IProjectionProblem& problem, const IProjectionOptions& options = {});

/// Simplex weights whose psi-moment lies strictly inside E, found by
/// projected gradient towards the center of E. Returns the base weights
/// when the base moment is already interior.
Vec default_slater(const IProjectionProblem& problem);

/// Exponentially tilted distribution w_i e^{lambda psi_i} / Z with lambda
/// bisected so the psi-mean equals target (scalar psi only). Serves as the
/// independent optimum oracle for 1-d projections.
DiscreteDistribution tilting_oracle(const DiscreteDistribution& base, const FeatureMap& psi,
                                    double target_mean);

struct ConditionalLimitResult {
    double conditional_mean = 0;
    double projection_mean = 0;
    long accepted_trials = 0;
};

/// Rejection-sampling estimate of E[L(xi_1) | (1/N) sum psi(xi_i) in E]
/// next to E_{P^f}[L]; validation harness for the conditional limit
/// behaviour. loss_values holds L at each atom of p (atom order).
ConditionalLimitResult conditional_limit_check(const DiscreteDistribution& p, const FeatureMap& psi,
                                               const MomentSet& set, const Vec& loss_values, int N,
                                               long trials, std::uint64_t seed,
                                               double projection_tolerance = 1e-4);

/// Euclidean projection onto the probability simplex (in place).
void project_to_simplex(Vec& v);

}  // namespace mdi
