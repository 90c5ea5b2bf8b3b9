#pragma once

#include <functional>

#include <nlohmann/json.hpp>

#include "mdi/datasets.hpp"
#include "mdi/dro.hpp"
#include "mdi/mdp.hpp"

namespace mdi {

/// Output locations and reproducibility context shared by the experiment
/// runners. Every output file starts with the resolved config and the
/// artifact version; a run is fully determined by (config, seed).
struct RunContext {
    std::uint64_t seed = 7;
    int threads = 1;
    std::string rows_path;     // tidy per-trial CSV ("" to skip)
    std::string summary_path;  // aggregated CSV ("" to skip)
    nlohmann::json config;     // echoed into the file headers
};

/// Weighted empirical risk minimization over the loss model's theta box by
/// projected gradient; the ERM / IWERM baselines of the classification
/// experiments.
Vec minimize_weighted_risk(const LossModel& loss, const std::vector<Vec>& atoms, const Vec& weights,
                           long max_iterations = 4000, double tolerance = 1e-9);

double mean_loss(const Vec& theta, const LossModel& loss, const std::vector<Vec>& atoms);
double misclassification_rate(const Vec& theta, const std::vector<LabeledSample>& samples);

struct CovshiftParams {
    long trials = 100;
    std::vector<long> n_grid = {30, 100, 300};
    std::size_t m = 6;
    double radius = 1e-4;
    /// Moment box half-width; must stay below the test label mean (about
    /// 0.21 at m = 6) so the training distribution violates the constraint.
    double slack = 0.18;
    long mc_budget = 1'000'000;
    long test_size = 20'000;
    double theta_bound = 10.0;
    double projection_tolerance = 0.0;  // <= 0: min(1e-3, radius/10)
};

struct CovshiftCell {
    long N = 0;
    std::string method;
    double mean_risk = 0;
    double mean_bound = 0;   // nan for the baselines
    double reliability = 0;  // fraction of trials with risk <= bound (mdi only)
    long failures = 0;
    long trials = 0;
};

struct CovshiftSummary {
    std::vector<CovshiftCell> cells;
    double y_mean = 0;
    double y_std_error = 0;

    const CovshiftCell& at(long N, const std::string& method) const;
};

CovshiftSummary run_covshift(const CovshiftParams& params, const RunContext& ctx);

struct OpeInventoryParams {
    long trials = 500;
    long N = 500;
    double radius = 0.1;
    double beta = 4.0;
    InventoryParams inventory;
    std::vector<std::string> estimators = {"ips", "capped", "mdi"};
    double projection_tolerance = 0.0;
    double tau = 0.0;
};

struct OpeEstimatorSummary {
    std::string estimator;
    double mean_estimate = 0;
    double mean_true = 0;
    double mean_abs_error = 0;
    double disappointment = 0;  // fraction of trials with true > estimate
    long failures = 0;
    long trials = 0;
};

struct OpeInventorySummary {
    std::vector<OpeEstimatorSummary> estimators;
    const OpeEstimatorSummary& at(const std::string& name) const;
};

OpeInventorySummary run_ope_inventory(const OpeInventoryParams& params, const RunContext& ctx);

struct ConsistencyParams {
    std::vector<long> n_grid = {50, 200, 800, 3200};
    // the fixed instance: a four-atom chain tilted into a binding box
    std::vector<Vec> atoms = {{0.0}, {0.5}, {1.0}, {1.5}};
    Vec weights = {0.4, 0.3, 0.2, 0.1};
    double box_lower = 0.8;
    double box_upper = 0.95;
};

struct ConsistencyPoint {
    long N = 0;
    double radius = 0;
    double value = 0;
    double true_value = 0;
    double gap = 0;
};

struct ConsistencySummary {
    std::vector<ConsistencyPoint> points;
    double true_value = 0;
};

ConsistencySummary run_consistency(const ConsistencyParams& params, const RunContext& ctx);

struct ConditionalLimitParams {
    int N = 40;
    long trials = 200'000;
    double box_lower = 0.7;
    double box_upper = 0.8;
};

struct ConditionalLimitSummary {
    ConditionalLimitResult result;
    double difference = 0;
};

ConditionalLimitSummary run_conditional_limit(const ConditionalLimitParams& params,
                                              const RunContext& ctx);

struct HeartParams {
    std::string data_path;
    long trials = 20;
    long N = 20;
    std::vector<double> r_grid = {1e-4, 1e-3, 1e-2, 1e-1};
    double delta_m = 1e-3;
    double theta_bound = 10.0;
    double projection_tolerance = 0.0;
};

struct HeartCell {
    double radius = 0;
    std::string method;
    double mean_risk = 0;
    double mean_bound = 0;
    double mean_misclassification = 0;
    long failures = 0;
    long trials = 0;
};

struct HeartSummary {
    std::vector<HeartCell> cells;
    double ideal_risk = 0;  // full-data logistic regression benchmark
    double ideal_misclassification = 0;
};

HeartSummary run_heart(const HeartParams& params, const RunContext& ctx);

/// Split [0, count) over the context's thread count; fn(i) must only touch
/// slot i of its output. Exceptions are rethrown on the caller thread.
void parallel_trials(long count, int threads, const std::function<void(long)>& fn);

}  // namespace mdi
