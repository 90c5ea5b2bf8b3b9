#pragma once

#include "mdi/dro.hpp"

namespace mdi {

/// Finite MDP with long-run average cost. Tables are flat with index
/// s * n_actions + a; states and actions are 0-based internally while the
/// inventory instance follows the 1-based labels S = {1..nS}, A = {1..nA}.
struct TabularMdp {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    /// kernel[(s * nA + a) * nS + s'] = Q(s' | s, a); rows sum to one.
    Vec kernel;
    /// cost[s * nA + a]
    Vec cost;
    std::size_t initial_state = 0;

    double transition(std::size_t s, std::size_t a, std::size_t s_next) const {
        return kernel[(s * n_actions + a) * n_states + s_next];
    }
    double cost_at(std::size_t s, std::size_t a) const { return cost[s * n_actions + a]; }
    void validate() const;
};

struct StationaryPolicy {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    /// prob[s * nA + a] = pi(a | s); rows sum to one.
    Vec prob;

    double at(std::size_t s, std::size_t a) const { return prob[s * n_actions + a]; }
    void validate() const;
};

/// Long-run state-action frequencies mu(s, a) of a stationary policy.
struct OccupationMeasure {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    Vec mu;  // mu[s * nA + a]
    double mean_cost = 0;

    double at(std::size_t s, std::size_t a) const { return mu[s * n_actions + a]; }
    /// max_s' |sum_a mu(s',a) - sum_{s,a} Q(s'|s,a) mu(s,a)|
    double balance_residual(const TabularMdp& mdp) const;
};

/// Stationary distribution by power iteration from uniform (residual 1e-12,
/// capped) and mu(s,a) = d(s) pi(a|s). Errors out for chains where the
/// iteration does not settle (multichain or periodic behaviour).
OccupationMeasure occupation_measure(const TabularMdp& mdp, const StationaryPolicy& policy);

/// V_pi = sum_{s,a} mu(s,a) c(s,a).
double long_run_cost(const TabularMdp& mdp, const StationaryPolicy& policy);

struct SaSample {
    std::size_t s = 0;
    std::size_t a = 0;
    double cost = 0;
};

/// N i.i.d. draws (s, a) ~ mu_pib with the stage cost attached.
std::vector<SaSample> sample_behavioral(const TabularMdp& mdp, const StationaryPolicy& behavioral,
                                        long N, std::uint64_t seed);

/// (1/N) sum c_i * mu_e(s_i,a_i) / mu_b(s_i,a_i); capped variant clips the
/// ratio at beta. IPS equals the capped estimator with beta = +inf.
double capped_ips_estimate(const std::vector<SaSample>& samples, const OccupationMeasure& mu_e,
                           const OccupationMeasure& mu_b, double beta);
double ips_estimate(const std::vector<SaSample>& samples, const OccupationMeasure& mu_e,
                    const OccupationMeasure& mu_b);

struct MdiOpeResult {
    double value = 0;       // J*_N, the worst-case upper bound
    double kl_target = 0;   // D(mu_e || mu_b)
    IProjectionSolution projection;
    WorstCaseRisk risk;
};

struct MdiOpeOptions {
    double radius = 0.1;
    /// Smoothing accuracy; <= 0 picks min(1e-3, radius/10).
    double projection_tolerance = 0.0;
    /// Singleton inflation half-width; <= 0 picks 1e-4 * (1 + |kl_target|).
    double tau = 0.0;
    DroConfig dro;  // radius is taken from `radius` above
};

/// The estimator built from observed costs: features log(mu_e/mu_b) through
/// the cost lookup, the moment set pinned to the cross-measure relative
/// entropy, then I-projection and worst-case risk with the linear loss.
/// Distinct observed pairs with identical costs break the cost inversion
/// and raise an error naming the pairs.
MdiOpeResult mdi_ope_estimate(const std::vector<SaSample>& samples, const OccupationMeasure& mu_e,
                              const OccupationMeasure& mu_b, const MdiOpeOptions& options = {});

struct InventoryParams {
    double lambda = 0.2;  // geometric demand success probability
    long capacity = 5;    // gamma
    double price = 0.6;   // p, unit order cost
    double holding = 0.3; // h, unit holding cost
    double sales = 1.0;   // v, unit sales price
    std::size_t n_states = 5;
    std::size_t n_actions = 4;
};

/// Lost-sales inventory control chain with geometric demand; stock level 0
/// is folded into the smallest state so S stays {1..nS}.
TabularMdp inventory_instance(const InventoryParams& params = {});

/// Expected one-period cost c(s, a) of the inventory model, 1-based (s, a).
double inventory_cost(const InventoryParams& params, long s, long a);

/// Flat-Dirichlet row per state; deterministic under the seed.
StationaryPolicy random_policy(std::size_t n_states, std::size_t n_actions, std::uint64_t seed);

}  // namespace mdi
