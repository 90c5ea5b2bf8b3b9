#pragma once

#include "mdi/distribution.hpp"
#include "mdi/iprojection.hpp"

namespace mdi {

/// Loss L(theta, xi), convex in theta, together with the search box Theta.
/// Logistic expects atoms (x, y) with the label in the last coordinate;
/// Linear is the theta-free case L = xi on scalar atoms; Newsvendor is
/// c_p theta + c_u max(xi - theta, 0).
class LossModel {
public:
    static LossModel logistic(Vec theta_lower, Vec theta_upper);
    static LossModel linear();
    static LossModel newsvendor(double cost_produce, double cost_unmet, double theta_lower,
                                double theta_upper);

    double value(std::span<const double> theta, const Vec& atom) const;
    /// dL/dtheta at (theta, atom); a subgradient at kinks.
    Vec theta_gradient(std::span<const double> theta, const Vec& atom) const;

    std::size_t theta_dim() const { return theta_lower_.size(); }
    const Vec& theta_lower() const { return theta_lower_; }
    const Vec& theta_upper() const { return theta_upper_; }
    Vec clamp_theta(Vec theta) const;

    enum class Kind { Logistic, Linear, Newsvendor };
    Kind kind() const { return kind_; }
    double cost_produce() const { return cost_produce_; }
    double cost_unmet() const { return cost_unmet_; }

private:
    Kind kind_ = Kind::Linear;
    Vec theta_lower_, theta_upper_;
    double cost_produce_ = 0, cost_unmet_ = 0;
};

/// E_dist[L(theta, xi)].
double risk(const Vec& theta, const DiscreteDistribution& dist, const LossModel& loss);

/// Finite surrogate for the uncertainty set Xi: the points over which the
/// robust constraint alpha >= L - z^T psi is enforced. Must cover the
/// support of the nominal distribution.
struct ScenarioSet {
    std::vector<Vec> points;
    std::vector<Vec> features;  // psi(xi_j)

    static ScenarioSet from_support(const DiscreteDistribution& nominal, const FeatureMap& psi);
    void add(Vec point, const FeatureMap& psi);
};

struct DroConfig {
    double radius = 0.1;  // relative entropy ball radius r > 0, in nats
    double tolerance = 1e-6;
    long max_iterations = 20000;
    double backtrack = 0.5;
    long max_backtracks = 60;
};

struct WorstCaseRisk {
    double value = 0;
    double alpha = 0;
    Vec z;
    bool converged = false;
    double first_order_residual = 0;
};

/// Worst-case risk sup { E_Q[L] : D(nominal || Q) <= r, E_Q[psi] in E }
/// evaluated through its convex dual
///   inf_{alpha, z} alpha + sigma_E(z) - e^{-r} exp(E_nominal[log(alpha - L + z^T psi)])
///   s.t. alpha >= max_j L(theta, xi_j) - z^T psi(xi_j),
/// solved by a feasible-start proximal gradient method with backtracking
/// that keeps every log argument strictly positive on the nominal support.
WorstCaseRisk worst_case_risk(const Vec& theta, const DiscreteDistribution& nominal,
                              const FeatureMap& psi, const MomentSet& set,
                              const ScenarioSet& scenarios, const DroConfig& config,
                              const LossModel& loss);

struct DroTrainResult {
    Vec theta;
    double value = 0;
    double alpha = 0;
    Vec z;
    bool converged = false;
    double first_order_residual = 0;
};

/// Jointly minimize the dual objective over (theta, alpha, z) with theta
/// projected onto its box. Among tolerance-equal candidates the iterate
/// with smallest ||theta||_2 is kept.
DroTrainResult dro_train(const LossModel& loss, const DiscreteDistribution& nominal,
                         const FeatureMap& psi, const MomentSet& set, const ScenarioSet& scenarios,
                         const DroConfig& config);

struct PipelineResult {
    IProjectionSolution projection;
    DroTrainResult train;
};

/// empirical distribution -> I-projection -> DRO training, with the sample
/// support as the scenario set. End-to-end entry point of the experiments.
PipelineResult mdi_dro_pipeline(const std::vector<Vec>& samples, const FeatureMap& psi,
                                const MomentSet& set, const LossModel& loss, const DroConfig& config,
                                double projection_tolerance,
                                const IProjectionOptions& projection_options = {});

/// Default smoothing accuracy for a given ball radius: min(1e-3, r/10).
double default_projection_tolerance(double radius);

/// Dual objective of the worst-case risk program at (theta, alpha, z);
/// exposed for gradient checks and grid oracles.
double dro_dual_objective(const Vec& theta, double alpha, const Vec& z,
                          const DiscreteDistribution& nominal, const std::vector<Vec>& nominal_features,
                          const MomentSet& set, double radius, const LossModel& loss);

struct DroDualGradient {
    Vec theta;
    double alpha = 0;
    Vec z;
};

DroDualGradient dro_dual_gradient(const Vec& theta, double alpha, const Vec& z,
                                  const DiscreteDistribution& nominal,
                                  const std::vector<Vec>& nominal_features, const MomentSet& set,
                                  double radius, const LossModel& loss);

}  // namespace mdi
