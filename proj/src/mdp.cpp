#include "mdi/mdp.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace mdi {

namespace {

void check_rows(const Vec& table, std::size_t rows, std::size_t cols, const char* what) {
    if (table.size() != rows * cols) throw InvalidInput(std::string(what) + ": wrong table size");
    for (std::size_t r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = table[r * cols + c];
            if (!(v >= 0.0)) throw InvalidInput(std::string(what) + ": negative entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-10)
            throw InvalidInput(std::string(what) + ": row does not sum to one");
    }
}

}  // namespace

void TabularMdp::validate() const {
    if (n_states == 0 || n_actions == 0) throw InvalidInput("MDP needs positive state and action counts");
    check_rows(kernel, n_states * n_actions, n_states, "kernel");
    if (cost.size() != n_states * n_actions) throw InvalidInput("cost: wrong table size");
    if (initial_state >= n_states) throw InvalidInput("initial state out of range");
}

void StationaryPolicy::validate() const {
    check_rows(prob, n_states, n_actions, "policy");
}

double OccupationMeasure::balance_residual(const TabularMdp& mdp) const {
    double worst = 0.0;
    for (std::size_t sn = 0; sn < n_states; ++sn) {
        double inflow = 0.0;
        for (std::size_t s = 0; s < n_states; ++s)
            for (std::size_t a = 0; a < n_actions; ++a)
                inflow += mdp.transition(s, a, sn) * at(s, a);
        double outflow = 0.0;
        for (std::size_t a = 0; a < n_actions; ++a) outflow += at(sn, a);
        worst = std::max(worst, std::abs(outflow - inflow));
    }
    return worst;
}

OccupationMeasure occupation_measure(const TabularMdp& mdp, const StationaryPolicy& policy) {
    mdp.validate();
    policy.validate();
    if (policy.n_states != mdp.n_states || policy.n_actions != mdp.n_actions)
        throw InvalidInput("policy shape does not match the MDP");

    const std::size_t nS = mdp.n_states, nA = mdp.n_actions;
    // policy-induced chain P(s'|s)
    Vec chain(nS * nS, 0.0);
    for (std::size_t s = 0; s < nS; ++s)
        for (std::size_t a = 0; a < nA; ++a) {
            const double pa = policy.at(s, a);
            if (pa == 0.0) continue;
            for (std::size_t sn = 0; sn < nS; ++sn)
                chain[s * nS + sn] += pa * mdp.transition(s, a, sn);
        }

    Vec d(nS, 1.0 / static_cast<double>(nS));
    Vec next(nS);
    const long cap = 1'000'000;
    bool settled = false;
    for (long it = 0; it < cap; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t s = 0; s < nS; ++s) {
            const double ds = d[s];
            if (ds == 0.0) continue;
            for (std::size_t sn = 0; sn < nS; ++sn) next[sn] += ds * chain[s * nS + sn];
        }
        double total = 0.0;
        for (double v : next) total += v;
        for (double& v : next) v /= total;
        double res = 0.0;
        for (std::size_t s = 0; s < nS; ++s) res = std::max(res, std::abs(next[s] - d[s]));
        d.swap(next);
        if (res <= 1e-12) {
            settled = true;
            break;
        }
    }
    if (!settled)
        throw SolverError("power iteration did not settle; the policy-induced chain looks multichain or periodic");

    OccupationMeasure occ;
    occ.n_states = nS;
    occ.n_actions = nA;
    occ.mu.resize(nS * nA);
    for (std::size_t s = 0; s < nS; ++s)
        for (std::size_t a = 0; a < nA; ++a) occ.mu[s * nA + a] = d[s] * policy.at(s, a);

    occ.mean_cost = 0.0;
    for (std::size_t i = 0; i < occ.mu.size(); ++i) occ.mean_cost += occ.mu[i] * mdp.cost[i];

    const double residual = occ.balance_residual(mdp);
    if (residual > 1e-8) {
        std::ostringstream os;
        os << "occupation measure violates the balance equations (residual " << residual << ")";
        throw SolverError(os.str());
    }
    return occ;
}

double long_run_cost(const TabularMdp& mdp, const StationaryPolicy& policy) {
    return occupation_measure(mdp, policy).mean_cost;
}

std::vector<SaSample> sample_behavioral(const TabularMdp& mdp, const StationaryPolicy& behavioral,
                                        long N, std::uint64_t seed) {
    if (N < 1) throw InvalidInput("sample_behavioral: N must be positive");
    const OccupationMeasure occ = occupation_measure(mdp, behavioral);
    Rng rng(seed);
    std::vector<SaSample> out;
    out.reserve(static_cast<std::size_t>(N));
    for (long i = 0; i < N; ++i) {
        const std::size_t idx = rng.categorical(occ.mu);
        const std::size_t s = idx / mdp.n_actions;
        const std::size_t a = idx % mdp.n_actions;
        out.push_back(SaSample{s, a, mdp.cost_at(s, a)});
    }
    return out;
}

double capped_ips_estimate(const std::vector<SaSample>& samples, const OccupationMeasure& mu_e,
                           const OccupationMeasure& mu_b, double beta) {
    if (samples.empty()) throw InvalidInput("IPS needs a nonempty sample list");
    if (!(beta >= 0.0)) throw InvalidInput("IPS cap must be nonnegative");
    double sum = 0.0;
    for (const SaSample& smp : samples) {
        const double b = mu_b.at(smp.s, smp.a);
        if (b <= 0.0) {
            std::ostringstream os;
            os << "behavioral occupation measure vanishes at observed pair (s=" << smp.s + 1
               << ", a=" << smp.a + 1 << ")";
            throw InvalidInput(os.str());
        }
        sum += smp.cost * std::min(beta, mu_e.at(smp.s, smp.a) / b);
    }
    return sum / static_cast<double>(samples.size());
}

double ips_estimate(const std::vector<SaSample>& samples, const OccupationMeasure& mu_e,
                    const OccupationMeasure& mu_b) {
    return capped_ips_estimate(samples, mu_e, mu_b, kInf);
}

MdiOpeResult mdi_ope_estimate(const std::vector<SaSample>& samples, const OccupationMeasure& mu_e,
                              const OccupationMeasure& mu_b, const MdiOpeOptions& options) {
    if (samples.empty()) throw InvalidInput("mdi_ope_estimate needs a nonempty sample list");

    // observed pairs with the cost inversion check
    std::map<std::pair<std::size_t, std::size_t>, double> observed;
    std::map<double, std::pair<std::size_t, std::size_t>> by_cost;
    for (const SaSample& smp : samples) {
        const auto pair = std::make_pair(smp.s, smp.a);
        observed.emplace(pair, smp.cost);
        auto [it, inserted] = by_cost.emplace(smp.cost, pair);
        if (!inserted && it->second != pair) {
            std::ostringstream os;
            os << "cost function is not invertible over the observed pairs: (s=" << it->second.first + 1
               << ", a=" << it->second.second + 1 << ") and (s=" << smp.s + 1 << ", a=" << smp.a + 1
               << ") share cost " << smp.cost;
            throw InvalidInput(os.str());
        }
        if (!(mu_b.at(smp.s, smp.a) > 0.0)) {
            std::ostringstream os;
            os << "behavioral occupation measure vanishes at observed pair (s=" << smp.s + 1
               << ", a=" << smp.a + 1 << ")";
            throw InvalidInput(os.str());
        }
    }

    // empirical distribution of the observed costs
    std::vector<Vec> cost_atoms;
    cost_atoms.reserve(samples.size());
    for (const SaSample& smp : samples) cost_atoms.push_back({smp.cost});
    DiscreteDistribution empirical = DiscreteDistribution::from_samples(cost_atoms);

    // psi maps the cost back through the pair to log(mu_e / mu_b)
    std::vector<Vec> table_atoms;
    std::vector<Vec> table_values;
    for (const auto& [pair, cost] : observed) {
        table_atoms.push_back({cost});
        table_values.push_back({std::log(mu_e.at(pair.first, pair.second) /
                                         mu_b.at(pair.first, pair.second))});
    }
    FeatureMap psi = FeatureMap::tabular(std::move(table_atoms), std::move(table_values));

    // the KL target over the full tables
    double kl = 0.0;
    for (std::size_t i = 0; i < mu_e.mu.size(); ++i) {
        const double qe = mu_e.mu[i];
        if (qe == 0.0) continue;
        if (!(mu_b.mu[i] > 0.0))
            throw InvalidInput("evaluation occupation measure is not absolutely continuous w.r.t. the behavioral one");
        kl += qe * std::log(qe / mu_b.mu[i]);
    }

    const double tau = options.tau > 0.0 ? options.tau : 1e-4 * (1.0 + std::abs(kl));
    MomentSet set = MomentSet::box({kl - tau}, {kl + tau});

    const double eps = options.projection_tolerance > 0.0
                           ? options.projection_tolerance
                           : default_projection_tolerance(options.radius);
    IProjectionProblem problem{empirical, psi, set, std::nullopt, eps};
    IProjectionSolution projection = solve(problem);

    ScenarioSet scenarios = ScenarioSet::from_support(empirical, psi);
    DroConfig cfg = options.dro;
    cfg.radius = options.radius;
    WorstCaseRisk wc = worst_case_risk({}, projection.projection, psi, set, scenarios, cfg,
                                       LossModel::linear());

    return MdiOpeResult{wc.value, kl, std::move(projection), std::move(wc)};
}

double inventory_cost(const InventoryParams& p, long s, long a) {
    const double stock = static_cast<double>(s + a);
    return p.price * static_cast<double>(a) + p.holding * stock -
           p.sales * (1.0 - p.lambda) / p.lambda * (1.0 - std::pow(1.0 - p.lambda, stock));
}

TabularMdp inventory_instance(const InventoryParams& p) {
    if (!(p.lambda > 0.0 && p.lambda < 1.0)) throw InvalidInput("inventory: lambda must lie in (0,1)");
    if (p.capacity < 1) throw InvalidInput("inventory: capacity must be at least 1");
    if (p.n_states == 0 || p.n_actions == 0) throw InvalidInput("inventory: empty state or action space");
    if (static_cast<std::size_t>(p.capacity) > p.n_states)
        throw InvalidInput("inventory: capacity must not exceed the number of states");

    TabularMdp mdp;
    mdp.n_states = p.n_states;
    mdp.n_actions = p.n_actions;
    mdp.kernel.assign(p.n_states * p.n_actions * p.n_states, 0.0);
    mdp.cost.resize(p.n_states * p.n_actions);
    mdp.initial_state = 0;

    for (std::size_t si = 0; si < p.n_states; ++si) {
        for (std::size_t ai = 0; ai < p.n_actions; ++ai) {
            const long s = static_cast<long>(si) + 1;  // 1-based labels
            const long a = static_cast<long>(ai) + 1;
            mdp.cost[si * p.n_actions + ai] = inventory_cost(p, s, a);

            // post-order stock y = min(gamma, s + a); next state is
            // max(0, y - demand) with the stock floor folded into state 1
            const long y = std::min(p.capacity, s + a);
            double* row = &mdp.kernel[(si * p.n_actions + ai) * p.n_states];
            double mass_above_floor = 0.0;
            for (long k = 2; k <= y; ++k) {
                const double prob = p.lambda * std::pow(1.0 - p.lambda, static_cast<double>(y - k));
                row[k - 1] = prob;
                mass_above_floor += prob;
            }
            row[0] = 1.0 - mass_above_floor;  // P(demand >= y - 1)
        }
    }
    mdp.validate();
    return mdp;
}

StationaryPolicy random_policy(std::size_t n_states, std::size_t n_actions, std::uint64_t seed) {
    if (n_states == 0 || n_actions == 0) throw InvalidInput("random_policy: empty state or action space");
    Rng rng(seed);
    StationaryPolicy pi;
    pi.n_states = n_states;
    pi.n_actions = n_actions;
    pi.prob.resize(n_states * n_actions);
    for (std::size_t s = 0; s < n_states; ++s) {
        double total = 0.0;
        for (std::size_t a = 0; a < n_actions; ++a) {
            const double e = rng.exponential();  // flat Dirichlet via normalized exponentials
            pi.prob[s * n_actions + a] = e;
            total += e;
        }
        for (std::size_t a = 0; a < n_actions; ++a) pi.prob[s * n_actions + a] /= total;
    }
    return pi;
}

}  // namespace mdi
