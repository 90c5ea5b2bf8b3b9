#include "doctest.h"

#include "mdi/iprojection.hpp"
#include "oracles.hpp"

using namespace mdi;

TEST_SUITE_BEGIN("iprojection");

namespace {

// symmetric three-atom weights (q, 1-2q, q) on {-1, 0, 1} whose relative
// entropy to the uniform base equals the requested value; moment stays 0
Vec symmetric_slater_with_entropy(double target) {
    auto entropy = [](double q) {
        return 2.0 * q * std::log(3.0 * q) + (1.0 - 2.0 * q) * std::log(3.0 * (1.0 - 2.0 * q));
    };
    double lo = 1.0 / 3.0, hi = 0.5 - 1e-12;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (entropy(mid) < target ? lo : hi) = mid;
    }
    return {lo, 1.0 - 2.0 * lo, lo};
}

}  // namespace

TEST_CASE("schedule formulas on a hand instance") {
    // base uniform on {-1, 0, 1}, Slater moment 0, C tuned to 0.2
    DiscreteDistribution base({{-1.0}, {0.0}, {1.0}}, {1, 1, 1});
    IProjectionProblem problem{base, FeatureMap::identity(), MomentSet::box({-1.0}, {1.0}),
                               symmetric_slater_with_entropy(0.2), 0.1};
    SmoothingSchedule s = compute_schedule(problem);
    CHECK(s.C == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(s.delta == doctest::Approx(1.0));
    CHECK(s.D == doctest::Approx(0.5));
    CHECK(s.alpha_inf == doctest::Approx(1.0));
    CHECK(s.eta1 == doctest::Approx(0.05));
    CHECK(s.eta2 == doctest::Approx(0.1 * 1.0 / (2.0 * 0.04)).epsilon(1e-7));
    CHECK(s.eta2 == doctest::Approx(1.25).epsilon(1e-7));
    CHECK(s.L_eta == doctest::Approx(1.0 / s.eta1 + s.eta2 + 1.0));
    CHECK(s.iterations >= 1.0);
}

TEST_CASE("schedule errors") {
    DiscreteDistribution base({{-1.0}, {0.0}, {1.0}}, {1, 1, 1});
    // Slater moment on the boundary of E
    IProjectionProblem boundary{base, FeatureMap::identity(), MomentSet::box({0.0}, {1.0}),
                                Vec{0.25, 0.5, 0.25}, 0.1};
    CHECK_THROWS_AS(compute_schedule(boundary), Infeasible);

    // Slater weights equal to the base weights: C = 0 guard
    IProjectionProblem zero_c{base, FeatureMap::identity(), MomentSet::box({-1.0}, {1.0}),
                              Vec{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.1};
    CHECK_THROWS_WITH_AS(compute_schedule(zero_c), doctest::Contains("shortcut"), InvalidInput);

    // E = {0} has D = 0
    IProjectionProblem degenerate{base, FeatureMap::identity(),
                                  MomentSet::box({-0.0}, {0.0}).inflated(1e-9), Vec{0.3, 0.4, 0.3},
                                  0.1};
    // after a tiny inflation D is positive, so build the true degenerate case directly
    IProjectionProblem zero_d{base, FeatureMap::identity(), MomentSet::singleton({0.0}),
                              Vec{0.3, 0.4, 0.3}, 0.1};
    CHECK_THROWS_AS(compute_schedule(zero_d), Infeasible);
    CHECK_NOTHROW(compute_schedule(degenerate));
}

TEST_CASE("smoothed gradient reduces to the base moment at z = 0") {
    DiscreteDistribution base({{-1.0}, {1.0}}, {0.5, 0.5});
    MomentSet set = MomentSet::box({-0.5}, {0.5});  // symmetric around the base moment, 0 in E
    IProjectionProblem problem{base, FeatureMap::identity(), set, Vec{0.3, 0.7}, 1e-2};
    SmoothingSchedule s = compute_schedule(problem);
    Vec g = smoothed_dual_gradient({0.0}, problem, s);
    CHECK(g[0] == doctest::Approx(0.0).epsilon(1e-14));  // base moment is 0
}

TEST_CASE("smoothed gradient matches finite differences of the smoothed dual") {
    DiscreteDistribution base({{-1.0, 0.5}, {0.3, -0.2}, {1.0, 1.0}}, {0.2, 0.5, 0.3});
    MomentSet set = MomentSet::box({0.45, 0.35}, {0.65, 0.55});
    IProjectionProblem problem{base, FeatureMap::identity(), set, std::nullopt, 1e-2};
    problem.slater_weights = default_slater(problem);
    SmoothingSchedule s = compute_schedule(problem);

    Rng rng(5150);
    for (int rep = 0; rep < 20; ++rep) {
        Vec z = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
        Vec g = smoothed_dual_gradient(z, problem, s);
        Vec fd = oracles::fd_gradient(
            [&](const Vec& zz) { return smoothed_dual_value(zz, problem, s); }, z, 1e-6);
        for (int j = 0; j < 2; ++j) CHECK(g[j] == doctest::Approx(fd[j]).epsilon(2e-5));
    }
    CHECK_THROWS_AS(smoothed_dual_gradient({kInf, 0.0}, problem, s), InvalidInput);
}

TEST_CASE("two-atom Gibbs mean matches the closed form") {
    DiscreteDistribution base({{0.2}, {1.4}}, {0.3, 0.7});
    MomentSet set = MomentSet::box({0.3}, {0.8});
    IProjectionProblem problem{base, FeatureMap::identity(), set, std::nullopt, 1e-2};
    problem.slater_weights = default_slater(problem);
    SmoothingSchedule s = compute_schedule(problem);

    for (double z : {-1.3, -0.2, 0.0, 0.7, 2.5}) {
        Vec g = smoothed_dual_gradient({z}, problem, s);
        const double e1 = 0.3 * std::exp(-z * 0.2), e2 = 0.7 * std::exp(-z * 1.4);
        const double gibbs = (0.2 * e1 + 1.4 * e2) / (e1 + e2);
        const double proj = std::clamp(z / s.eta1, 0.3, 0.8);
        CHECK(g[0] == doctest::Approx(-proj - s.eta2 * z + gibbs).epsilon(1e-12));
    }
}

TEST_CASE("solve takes the shortcut when the base is feasible") {
    DiscreteDistribution base({{0.0}, {1.0}, {2.0}}, {1, 1, 1});
    IProjectionProblem problem{base, FeatureMap::identity(), MomentSet::box({-5.0}, {5.0}),
                               std::nullopt, 1e-3};
    auto sol = solve(problem);
    CHECK(sol.entropy_value == doctest::Approx(0.0));
    CHECK(sol.feasibility_gap == doctest::Approx(0.0));
    CHECK(sol.iterations_run == 0);
    CHECK(sol.projection.weights() == base.weights());
}

TEST_CASE("solve matches the exponential tilting oracle") {
    DiscreteDistribution base({{0.0}, {1.0}, {2.0}}, {1, 1, 1});
    MomentSet set = MomentSet::box({1.5 - 1e-4}, {1.5 + 1e-4});
    IProjectionProblem problem{base, FeatureMap::identity(), set, std::nullopt, 1e-3};
    auto sol = solve(problem);

    auto oracle = tilting_oracle(base, FeatureMap::identity(), 1.5);
    CHECK(total_variation(sol.projection, oracle) < 1e-2);
    CHECK(sol.feasibility_gap <= sol.certified_feasibility_bound);
    CHECK(std::abs(sol.entropy_value - relative_entropy(oracle, base)) <=
          sol.certified_optimality_bound);

    // dual ascent sanity: the final smoothed dual value dominates the origin's
    IProjectionProblem prepared = problem;
    prepared.slater_weights = default_slater(problem);
    SmoothingSchedule s = compute_schedule(prepared);
    CHECK(smoothed_dual_value(sol.dual, prepared, s) >=
          smoothed_dual_value(Vec(1, 0.0), prepared, s) - 1e-9);

    // Gibbs positivity
    for (double w : sol.projection.weights()) CHECK(w > 0.0);
}

TEST_CASE("solve reconstructs a named distribution from its log-ratio features") {
    std::vector<Vec> atoms = {{0.0}, {1.0}, {2.0}};
    DiscreteDistribution p(atoms, {0.5, 0.3, 0.2});
    DiscreteDistribution q(atoms, {0.2, 0.5, 0.3});
    FeatureMap psi = FeatureMap::log_ratio(q, p);
    const double kl = relative_entropy(q, p);
    MomentSet set = MomentSet::box({kl - 1e-5}, {kl + 1e-5});
    IProjectionProblem problem{p, psi, set, std::nullopt, 1e-4};
    auto sol = solve(problem);
    CHECK(total_variation(sol.projection, q) < 1e-2);
}

TEST_CASE("solve certificates against the 3-atom grid oracle") {
    DiscreteDistribution base({{0.0, 0.0}, {1.0, 0.2}, {0.4, 1.0}}, {0.5, 0.25, 0.25});
    MomentSet set = MomentSet::box({0.45, 0.3}, {0.7, 0.5});
    IProjectionProblem problem{base, FeatureMap::identity(), set, std::nullopt, 1e-2};
    auto sol = solve(problem);
    const double oracle =
        oracles::iprojection_grid_optimum(base, featurize(base, FeatureMap::identity()), set, 1e-3);
    CHECK(std::abs(sol.entropy_value - oracle) <= sol.certified_optimality_bound);
    CHECK(sol.feasibility_gap <= sol.certified_feasibility_bound);
}

TEST_CASE("solve is idempotent") {
    DiscreteDistribution base({{0.0}, {1.0}, {2.0}}, {0.6, 0.3, 0.1});
    MomentSet set = MomentSet::box({1.2}, {1.4});
    IProjectionProblem problem{base, FeatureMap::identity(), set, std::nullopt, 1e-3};
    auto first = solve(problem);
    IProjectionProblem again{first.projection, FeatureMap::identity(), set, std::nullopt, 1e-3};
    auto second = solve(again);
    CHECK(total_variation(first.projection, second.projection) < 1e-8);
}

TEST_CASE("singleton sets are inflated before solving") {
    DiscreteDistribution base({{0.0}, {1.0}}, {0.5, 0.5});
    IProjectionProblem problem{base, FeatureMap::identity(), MomentSet::singleton({0.7}),
                               std::nullopt, 1e-4};
    auto sol = solve(problem);
    REQUIRE(sol.solved_set.has_value());
    CHECK(!sol.solved_set->has_empty_interior());
    auto oracle = tilting_oracle(base, FeatureMap::identity(), 0.7);
    CHECK(total_variation(sol.projection, oracle) < 1e-2);
}

TEST_CASE("default slater") {
    DiscreteDistribution base({{0.0}, {1.0}}, {0.5, 0.5});
    // targets the box center 0.75
    IProjectionProblem problem{base, FeatureMap::identity(), MomentSet::box({0.6}, {0.9}),
                               std::nullopt, 1e-3};
    Vec w = default_slater(problem);
    CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-4));
    CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-4));

    // base moment already interior: base weights returned
    IProjectionProblem easy{base, FeatureMap::identity(), MomentSet::box({0.0}, {1.0}),
                            std::nullopt, 1e-3};
    CHECK(default_slater(easy) == base.weights());

    // E disjoint from the hull of feature values
    IProjectionProblem off{base, FeatureMap::identity(), MomentSet::box({2.0}, {3.0}), std::nullopt,
                           1e-3};
    CHECK_THROWS_AS(default_slater(off), Infeasible);
}

TEST_CASE("tilting oracle") {
    DiscreteDistribution base({{0.0}, {1.0}}, {0.5, 0.5});
    auto tilted = tilting_oracle(base, FeatureMap::identity(), 0.75);
    CHECK(tilted.weights()[0] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(tilted.weights()[1] == doctest::Approx(0.75).epsilon(1e-9));

    auto same = tilting_oracle(base, FeatureMap::identity(), 0.5);
    CHECK(same.weights()[0] == doctest::Approx(0.5).epsilon(1e-10));

    DiscreteDistribution three({{0.0}, {1.0}, {2.0}}, {1, 1, 1});
    auto shifted = tilting_oracle(three, FeatureMap::identity(), 1.5);
    CHECK(moment(shifted, FeatureMap::identity())[0] == doctest::Approx(1.5).epsilon(1e-10));

    CHECK_THROWS_AS(tilting_oracle(base, FeatureMap::identity(), 1.5), Infeasible);
    CHECK_THROWS_AS(tilting_oracle(base, FeatureMap::identity(), 1.0), Infeasible);
}

TEST_CASE("simplex projection") {
    Vec v = {0.4, 0.3, 0.3};
    project_to_simplex(v);
    CHECK(v[0] == doctest::Approx(0.4));
    v = {2.0, 0.0, 0.0};
    project_to_simplex(v);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[1] == doctest::Approx(0.0));
    Rng rng(3);
    for (int rep = 0; rep < 100; ++rep) {
        Vec x = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        project_to_simplex(x);
        double sum = 0.0;
        for (double t : x) {
            CHECK(t >= 0.0);
            sum += t;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("conditional limit harness edge cases") {
    DiscreteDistribution coin({{0.0}, {1.0}}, {0.5, 0.5});

    // the whole range accepts everything: conditional mean = plain mean
    auto whole = conditional_limit_check(coin, FeatureMap::identity(),
                                         MomentSet::box({-1.0}, {2.0}), {0.0, 1.0}, 5, 4000, 99);
    CHECK(whole.accepted_trials == 4000);
    CHECK(whole.conditional_mean == doctest::Approx(0.5).epsilon(0.05));

    // N = 1 with E = [0.5, 1.5] accepts only xi = 1
    auto one = conditional_limit_check(coin, FeatureMap::identity(), MomentSet::box({0.5}, {1.5}),
                                       {0.0, 1.0}, 1, 2000, 7);
    CHECK(one.conditional_mean == doctest::Approx(1.0));

    // no trial can satisfy an unreachable set
    CHECK_THROWS_AS(conditional_limit_check(coin, FeatureMap::identity(),
                                            MomentSet::box({2.0}, {3.0}), {0.0, 1.0}, 3, 100, 1),
                    Infeasible);
}

TEST_SUITE_END();
