#include "doctest.h"

#include <map>

#include "mdi/mdp.hpp"

using namespace mdi;

TEST_SUITE_BEGIN("mdp");

namespace {

// two states, one action, deterministic swap
TabularMdp swap_chain() {
    TabularMdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 1;
    mdp.kernel = {0.0, 1.0, 1.0, 0.0};
    mdp.cost = {1.0, 2.0};  // c(s, a) = s with 1-based states
    return mdp;
}

StationaryPolicy single_action_policy(std::size_t n_states) {
    StationaryPolicy pi;
    pi.n_states = n_states;
    pi.n_actions = 1;
    pi.prob.assign(n_states, 1.0);
    return pi;
}

}  // namespace

TEST_CASE("occupation measure of the swap chain") {
    auto occ = occupation_measure(swap_chain(), single_action_policy(2));
    CHECK(occ.at(0, 0) == doctest::Approx(0.5));
    CHECK(occ.at(1, 0) == doctest::Approx(0.5));
    CHECK(occ.balance_residual(swap_chain()) <= 1e-8);
    CHECK(long_run_cost(swap_chain(), single_action_policy(2)) == doctest::Approx(1.5));
}

TEST_CASE("absorbing state concentrates the occupation measure") {
    TabularMdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 1;
    // state 1 absorbs; state 0 leaks into 1
    mdp.kernel = {0.1, 0.9, 0.0, 1.0};
    mdp.cost = {0.0, 3.0};
    auto occ = occupation_measure(mdp, single_action_policy(2));
    CHECK(occ.at(1, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(occ.mean_cost == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("constant cost yields that constant for any policy") {
    const TabularMdp mdp = inventory_instance();
    TabularMdp flat = mdp;
    std::fill(flat.cost.begin(), flat.cost.end(), 2.5);
    const StationaryPolicy pi = random_policy(mdp.n_states, mdp.n_actions, 71);
    CHECK(long_run_cost(flat, pi) == doctest::Approx(2.5).epsilon(1e-10));
}

TEST_CASE("occupation measures satisfy the balance polytope on random unichain MDPs") {
    Rng rng(1234);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t nS = 2 + rng.uniform_int(5);
        const std::size_t nA = 1 + rng.uniform_int(4);
        TabularMdp mdp;
        mdp.n_states = nS;
        mdp.n_actions = nA;
        mdp.kernel.resize(nS * nA * nS);
        mdp.cost.resize(nS * nA);
        for (std::size_t row = 0; row < nS * nA; ++row) {
            double total = 0.0;
            for (std::size_t sn = 0; sn < nS; ++sn) {
                const double e = rng.exponential();  // strictly positive rows: ergodic
                mdp.kernel[row * nS + sn] = e;
                total += e;
            }
            for (std::size_t sn = 0; sn < nS; ++sn) mdp.kernel[row * nS + sn] /= total;
            mdp.cost[row] = rng.uniform(-1, 1);
        }
        const StationaryPolicy pi = random_policy(nS, nA, rng.uniform_int(1'000'000));
        const auto occ = occupation_measure(mdp, pi);
        CHECK(occ.balance_residual(mdp) <= 1e-8);
        double total = 0.0;
        for (double v : occ.mu) {
            CHECK(v >= 0.0);
            total += v;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-10));

        // policy recovery from the occupation measure
        for (std::size_t s = 0; s < nS; ++s) {
            double ds = 0.0;
            for (std::size_t a = 0; a < nA; ++a) ds += occ.at(s, a);
            if (ds <= 1e-9) continue;
            for (std::size_t a = 0; a < nA; ++a)
                CHECK(occ.at(s, a) / ds == doctest::Approx(pi.at(s, a)).epsilon(1e-8));
        }
    }
}

TEST_CASE("long-run cost agrees with Monte Carlo sampling from the occupation measure") {
    const TabularMdp mdp = inventory_instance();
    const StationaryPolicy pi = random_policy(mdp.n_states, mdp.n_actions, 5);
    const double v = long_run_cost(mdp, pi);
    const auto samples = sample_behavioral(mdp, pi, 100'000, 17);
    double mean = 0.0;
    for (const auto& s : samples) mean += s.cost;
    mean /= static_cast<double>(samples.size());
    CHECK(mean == doctest::Approx(v).epsilon(0.02));
}

TEST_CASE("behavioral sampling is deterministic and tracks the occupation measure") {
    const TabularMdp mdp = inventory_instance();
    const StationaryPolicy pi = random_policy(mdp.n_states, mdp.n_actions, 9);
    const auto a = sample_behavioral(mdp, pi, 200, 33);
    const auto b = sample_behavioral(mdp, pi, 200, 33);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].s == b[i].s);
        CHECK(a[i].a == b[i].a);
        CHECK(a[i].cost == b[i].cost);
    }

    const auto occ = occupation_measure(mdp, pi);
    const auto big = sample_behavioral(mdp, pi, 10'000, 3);
    Vec freq(mdp.n_states * mdp.n_actions, 0.0);
    for (const auto& s : big) freq[s.s * mdp.n_actions + s.a] += 1.0 / big.size();
    double tv = 0.0;
    for (std::size_t i = 0; i < freq.size(); ++i) tv += std::abs(freq[i] - occ.mu[i]);
    CHECK(tv / 2.0 < 0.02);
}

TEST_CASE("IPS estimators") {
    const TabularMdp mdp = inventory_instance();
    const StationaryPolicy pi = random_policy(mdp.n_states, mdp.n_actions, 40);
    const auto occ = occupation_measure(mdp, pi);
    const auto samples = sample_behavioral(mdp, pi, 500, 77);

    // identical policies: every weight is one, so the estimate is the
    // sample mean of the observed costs
    double mean = 0.0;
    for (const auto& s : samples) mean += s.cost / samples.size();
    CHECK(ips_estimate(samples, occ, occ) == doctest::Approx(mean).epsilon(1e-12));

    // degenerate cap
    CHECK(capped_ips_estimate(samples, occ, occ, 0.0) == doctest::Approx(0.0));

    // cap at +inf is bitwise identical to plain IPS
    const StationaryPolicy pi2 = random_policy(mdp.n_states, mdp.n_actions, 41);
    const auto occ2 = occupation_measure(mdp, pi2);
    CHECK(ips_estimate(samples, occ2, occ) == capped_ips_estimate(samples, occ2, occ, kInf));

    // hand-set two-cell instance: ratios (2, 0.5), costs (1, 3)
    OccupationMeasure mu_b{2, 1, {0.4, 0.6}, 0.0};
    OccupationMeasure mu_e{2, 1, {0.8, 0.2}, 0.0};
    std::vector<SaSample> at_first = {{0, 0, 1.0}, {0, 0, 1.0}};
    CHECK(ips_estimate(at_first, mu_e, mu_b) == doctest::Approx(2.0));
    CHECK(capped_ips_estimate(at_first, mu_e, mu_b, 1.5) == doctest::Approx(1.5));

    // capped IPS bias grows as the cap shrinks (scan on positive costs)
    std::vector<SaSample> mixed = {{0, 0, 1.0}, {1, 0, 3.0}, {0, 0, 1.0}};
    double prev = kInf;
    for (double beta : {4.0, 2.0, 1.0, 0.5, 0.25}) {
        const double est = capped_ips_estimate(mixed, mu_e, mu_b, beta);
        CHECK(est <= prev + 1e-12);
        prev = est;
    }
}

TEST_CASE("unbiasedness of IPS across seeds") {
    const TabularMdp mdp = inventory_instance();
    const StationaryPolicy pi_b = random_policy(mdp.n_states, mdp.n_actions, 50);
    const StationaryPolicy pi_e = random_policy(mdp.n_states, mdp.n_actions, 51);
    const auto mu_b = occupation_measure(mdp, pi_b);
    const auto mu_e = occupation_measure(mdp, pi_e);
    double mean = 0.0;
    const int reps = 400;
    for (int rep = 0; rep < reps; ++rep) {
        const auto samples = sample_behavioral(mdp, pi_b, 100, mix_seed(600, rep));
        mean += ips_estimate(samples, mu_e, mu_b) / reps;
    }
    CHECK(mean == doctest::Approx(mu_e.mean_cost).epsilon(0.05));
}

TEST_CASE("inventory instance") {
    const InventoryParams defaults;
    // appendix formula evaluated by hand
    CHECK(inventory_cost(defaults, 1, 1) == doctest::Approx(-0.24).epsilon(1e-12));

    const TabularMdp mdp = inventory_instance();
    CHECK(mdp.n_states == 5);
    CHECK(mdp.n_actions == 4);
    for (std::size_t row = 0; row < mdp.n_states * mdp.n_actions; ++row) {
        double sum = 0.0;
        for (std::size_t sn = 0; sn < mdp.n_states; ++sn) sum += mdp.kernel[row * mdp.n_states + sn];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }

    // kernel spot check: stock y = min(5, s + a), next = max(0, y - demand)
    // with the floor folded into state 1
    const double lam = 0.2;
    // s = 1, a = 1 (indices 0, 0): y = 2
    CHECK(mdp.transition(0, 0, 1) == doctest::Approx(lam));            // demand 0
    CHECK(mdp.transition(0, 0, 0) == doctest::Approx(1.0 - lam));      // demand >= 1
    // s = 5, a = 4 (indices 4, 3): y = 5
    CHECK(mdp.transition(4, 3, 4) == doctest::Approx(lam));
    CHECK(mdp.transition(4, 3, 2) == doctest::Approx(lam * std::pow(0.8, 2)));
    CHECK(mdp.transition(4, 3, 0) == doctest::Approx(std::pow(0.8, 4)));
}

TEST_CASE("expected inventory cost matches simulation of the per-period cost") {
    const InventoryParams p;
    Rng rng(808);
    const long draws = 1'000'000;
    const long s = 2, a = 3;
    double mean = 0.0;
    for (long i = 0; i < draws; ++i) {
        const double demand = static_cast<double>(rng.geometric(p.lambda));
        const double reward = p.price * a + p.holding * (s + a) -
                              p.sales * std::min(static_cast<double>(s + a), demand);
        mean += reward;
    }
    mean /= static_cast<double>(draws);
    CHECK(mean == doctest::Approx(inventory_cost(p, s, a)).epsilon(5e-3));
}

TEST_CASE("random policies are valid, deterministic and uniform on average") {
    const auto pi = random_policy(5, 4, 123);
    pi.validate();
    const auto pi2 = random_policy(5, 4, 123);
    CHECK(pi.prob == pi2.prob);

    Vec mean(4, 0.0);
    const int reps = 10'000;
    for (int rep = 0; rep < reps; ++rep) {
        const auto draw = random_policy(1, 4, mix_seed(9000, rep));
        for (int a = 0; a < 4; ++a) mean[a] += draw.prob[a] / reps;
    }
    for (int a = 0; a < 4; ++a) CHECK(mean[a] == doctest::Approx(0.25).epsilon(0.04));
}

TEST_CASE("mdi OPE estimate: no shift means the sample mean plus slack") {
    const TabularMdp mdp = inventory_instance();
    const StationaryPolicy pi = random_policy(mdp.n_states, mdp.n_actions, 60);
    const auto occ = occupation_measure(mdp, pi);
    const auto samples = sample_behavioral(mdp, pi, 400, 61);
    MdiOpeOptions opts;
    opts.radius = 1e-6;
    const auto res = mdi_ope_estimate(samples, occ, occ, opts);
    CHECK(res.kl_target == doctest::Approx(0.0));
    double mean = 0.0;
    for (const auto& s : samples) mean += s.cost / samples.size();
    CHECK(res.value == doctest::Approx(mean).epsilon(1e-2));
}

TEST_CASE("mdi OPE recovers the evaluation measure through the cost inversion") {
    // explicit two-cell instance: mu_e known in closed form via the tables
    TabularMdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 1;
    mdp.kernel = {0.3, 0.7, 0.6, 0.4};
    mdp.cost = {1.0, 2.0};
    OccupationMeasure mu_b{2, 1, {0.45, 0.55}, 0.0};
    OccupationMeasure mu_e{2, 1, {0.3, 0.7}, 0.0};

    Rng rng(404);
    std::vector<SaSample> samples;
    for (int i = 0; i < 4000; ++i) {
        const std::size_t s = rng.categorical(mu_b.mu);
        samples.push_back({s, 0, mdp.cost_at(s, 0)});
    }
    MdiOpeOptions opts;
    opts.radius = 0.05;
    const auto res = mdi_ope_estimate(samples, mu_e, mu_b, opts);

    // at large N the projection approximates mu_e composed with the cost lookup
    double tv = 0.0;
    for (std::size_t i = 0; i < res.projection.projection.size(); ++i) {
        const double cost = res.projection.projection.atoms()[i][0];
        const double target = cost == 1.0 ? 0.3 : 0.7;
        tv += std::abs(res.projection.projection.weights()[i] - target);
    }
    CHECK(tv / 2.0 < 0.02);
}

TEST_CASE("mdi OPE equals the generic pipeline on the same data") {
    const TabularMdp mdp = inventory_instance();
    const StationaryPolicy pi_b = random_policy(5, 4, 80);
    const StationaryPolicy pi_e = random_policy(5, 4, 81);
    const auto mu_b = occupation_measure(mdp, pi_b);
    const auto mu_e = occupation_measure(mdp, pi_e);
    const auto samples = sample_behavioral(mdp, pi_b, 300, 82);

    MdiOpeOptions opts;
    opts.radius = 0.05;
    const auto ope = mdi_ope_estimate(samples, mu_e, mu_b, opts);

    // rebuild the same problem through the generic linear-loss pipeline
    std::vector<Vec> cost_atoms;
    for (const auto& s : samples) cost_atoms.push_back({s.cost});
    std::map<std::pair<std::size_t, std::size_t>, double> seen;
    std::vector<Vec> t_atoms;
    std::vector<Vec> t_vals;
    for (const auto& s : samples) {
        if (!seen.emplace(std::make_pair(s.s, s.a), s.cost).second) continue;
        t_atoms.push_back({s.cost});
        t_vals.push_back({std::log(mu_e.at(s.s, s.a) / mu_b.at(s.s, s.a))});
    }
    FeatureMap psi = FeatureMap::tabular(t_atoms, t_vals);
    const double tau = 1e-4 * (1.0 + std::abs(ope.kl_target));
    MomentSet set = MomentSet::box({ope.kl_target - tau}, {ope.kl_target + tau});
    DroConfig cfg;
    cfg.radius = 0.05;
    const auto pipe = mdi_dro_pipeline(cost_atoms, psi, set, LossModel::linear(), cfg,
                                       default_projection_tolerance(0.05));
    CHECK(ope.value == doctest::Approx(pipe.train.value).epsilon(1e-12));
}

TEST_CASE("mdi OPE refuses silently colliding costs") {
    OccupationMeasure mu{2, 2, {0.25, 0.25, 0.25, 0.25}, 0.0};
    std::vector<SaSample> samples = {{0, 0, 1.5}, {1, 1, 1.5}};
    CHECK_THROWS_WITH_AS(mdi_ope_estimate(samples, mu, mu), doctest::Contains("invertible"),
                         InvalidInput);

    // support violation
    OccupationMeasure zero_b{2, 2, {1.0, 0.0, 0.0, 0.0}, 0.0};
    std::vector<SaSample> off_support = {{1, 1, 2.0}};
    CHECK_THROWS_AS(mdi_ope_estimate(off_support, mu, zero_b), InvalidInput);
}

TEST_SUITE_END();
