#include "doctest.h"

#include "mdi/experiments.hpp"

using namespace mdi;

namespace {
const std::string kFixture = std::string(MDI_TEST_DATA_DIR) + "/heart_fixture.csv";
}

TEST_SUITE_BEGIN("experiments");

TEST_CASE("weighted risk minimizer fits separated data") {
    // (x, y) with y = sign(x1 - x2)
    std::vector<Vec> atoms = {{1.0, 0.1, 1.0}, {0.8, 0.2, 1.0}, {0.1, 0.9, -1.0},
                              {0.2, 1.1, -1.0}};
    LossModel loss = LossModel::logistic({-8.0, -8.0}, {8.0, 8.0});
    Vec theta = minimize_weighted_risk(loss, atoms, Vec(4, 1.0));
    CHECK(mean_loss(theta, loss, atoms) < 0.05);
    CHECK(theta[0] > 0.0);
    CHECK(theta[1] < 0.0);
}

TEST_CASE("trial results are independent of the thread count") {
    OpeInventoryParams p;
    p.trials = 6;
    p.N = 60;
    RunContext one{11, 1, "", "", {}};
    RunContext two{11, 2, "", "", {}};
    const auto a = run_ope_inventory(p, one);
    const auto b = run_ope_inventory(p, two);
    for (const std::string& name : {"ips", "capped", "mdi"}) {
        CHECK(a.at(name).mean_estimate == b.at(name).mean_estimate);
        CHECK(a.at(name).mean_abs_error == b.at(name).mean_abs_error);
    }
}

TEST_CASE("covshift runner emits every method at every grid point") {
    CovshiftParams p;
    p.trials = 2;
    p.n_grid = {30};
    p.mc_budget = 20'000;
    p.test_size = 2'000;
    RunContext ctx{5, 2, "", "", {}};
    const auto s = run_covshift(p, ctx);
    CHECK(s.cells.size() == 3);
    CHECK(s.at(30, "mdi-dro").trials == 2);
    CHECK(s.at(30, "erm").mean_risk > 0.0);
    CHECK(s.at(30, "iwerm").mean_risk > 0.0);
    CHECK(s.y_mean > 0.0);
}

TEST_CASE("consistency runner reports shrinking-radius gaps") {
    ConsistencyParams p;
    p.n_grid = {50, 200};
    RunContext ctx{7, 1, "", "", {}};
    const auto s = run_consistency(p, ctx);
    REQUIRE(s.points.size() == 2);
    CHECK(s.true_value == doctest::Approx(0.8));
    CHECK(s.points[0].radius == doctest::Approx(1.0 / 50));
    for (const auto& pt : s.points) CHECK(pt.gap < 0.5);
}

TEST_CASE("conditional limit runner on a small coin instance") {
    ConditionalLimitParams p;
    p.N = 10;
    p.trials = 20'000;
    RunContext ctx{3, 1, "", "", {}};
    const auto s = run_conditional_limit(p, ctx);
    CHECK(s.result.accepted_trials > 100);
    CHECK(s.result.projection_mean == doctest::Approx(0.7).epsilon(1e-2));
    CHECK(s.difference < 0.1);
}

TEST_CASE("heart runner survives per-trial projection failures") {
    // with three eligible rows a Slater point in R^6 cannot exist, so the
    // mdi column records failures while the baselines stay intact
    HeartParams p;
    p.data_path = kFixture;
    p.trials = 2;
    p.N = 3;
    p.r_grid = {1e-3};
    RunContext ctx{9, 1, "", "", {}};
    const auto s = run_heart(p, ctx);
    REQUIRE(s.cells.size() == 2);
    const auto& erm = s.cells[1];
    CHECK(erm.method == "erm");
    CHECK(std::isfinite(erm.mean_risk));
    CHECK(erm.mean_misclassification >= 0.0);
    CHECK(std::isfinite(s.ideal_risk));
    CHECK(s.ideal_misclassification <= 0.5);
    const auto& mdi = s.cells[0];
    CHECK(mdi.failures + (std::isfinite(mdi.mean_risk) ? 0 : mdi.trials) >= 0);
}

TEST_SUITE_END();
