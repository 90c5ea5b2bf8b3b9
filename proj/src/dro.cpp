#include "mdi/dro.hpp"

#include <algorithm>
#include <sstream>

namespace mdi {

namespace {

double logistic_loss(double margin) {
    // log(1 + exp(-margin)) without overflow
    if (margin >= 0.0) return std::log1p(std::exp(-margin));
    return -margin + std::log1p(std::exp(margin));
}

// sigma_E(z) = linear^T z + nonsmooth(z); the nonsmooth part is separable
// for boxes and radial for balls, so its prox is closed form.
struct SupportSplit {
    enum class Kind { BoxPart, BallPart, None } kind = Kind::None;
    Vec linear;      // box midpoint / ball center / singleton point
    Vec halfwidth;   // box only
    double rho = 0;  // ball only

    explicit SupportSplit(const MomentSet& set) {
        linear = set.center();
        std::visit(
            [&](const auto& impl) {
                using T = std::decay_t<decltype(impl)>;
                if constexpr (std::is_same_v<T, MomentSet::Box>) {
                    kind = Kind::BoxPart;
                    halfwidth.resize(impl.lower.size());
                    for (std::size_t j = 0; j < halfwidth.size(); ++j)
                        halfwidth[j] = 0.5 * (impl.upper[j] - impl.lower[j]);
                } else if constexpr (std::is_same_v<T, MomentSet::Ball>) {
                    kind = Kind::BallPart;
                    rho = impl.radius;
                }
            },
            set.variant());
    }

    double nonsmooth(const Vec& z) const {
        switch (kind) {
            case Kind::BoxPart: {
                double s = 0.0;
                for (std::size_t j = 0; j < z.size(); ++j) s += halfwidth[j] * std::abs(z[j]);
                return s;
            }
            case Kind::BallPart:
                return rho * norm2(z);
            default:
                return 0.0;
        }
    }

    void prox(double t, Vec& z) const {
        switch (kind) {
            case Kind::BoxPart:
                for (std::size_t j = 0; j < z.size(); ++j) {
                    const double thr = t * halfwidth[j];
                    if (z[j] > thr) z[j] -= thr;
                    else if (z[j] < -thr) z[j] += thr;
                    else z[j] = 0.0;
                }
                break;
            case Kind::BallPart: {
                const double n = norm2(z);
                const double scale = n > t * rho ? 1.0 - t * rho / n : 0.0;
                for (double& v : z) v *= scale;
                break;
            }
            default:
                break;
        }
    }
};

struct GeomStats {
    bool feasible = false;  // all log arguments strictly positive on the support
    double G = 0;           // exp(sum_i w_i log u_i)
    double s1 = 0;          // sum_i w_i / u_i
    Vec s_psi;              // sum_i (w_i / u_i) psi_i
    Vec s_theta;            // sum_i (w_i / u_i) dL/dtheta_i
};

// Weighted geometric-mean statistics of u_i = alpha - L_i + z^T psi_i over
// the nominal support.
GeomStats geometric_stats(double alpha, const Vec& z, const Vec& losses,
                          const std::vector<Vec>& feats, const Vec& weights,
                          const std::vector<Vec>* theta_grads, std::size_t theta_dim) {
    GeomStats g;
    g.s_psi.assign(z.size(), 0.0);
    g.s_theta.assign(theta_dim, 0.0);
    const double tiny = 1e-13 * (1.0 + std::abs(alpha));
    double log_sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double w = weights[i];
        if (w == 0.0) continue;
        const double u = alpha - losses[i] + dot(z, feats[i]);
        if (!(u > tiny)) return g;  // infeasible trial point
        log_sum += w * std::log(u);
        const double c = w / u;
        g.s1 += c;
        axpy(c, feats[i], g.s_psi);
        if (theta_grads) axpy(c, (*theta_grads)[i], g.s_theta);
    }
    g.feasible = true;
    g.G = std::exp(log_sum);
    return g;
}

// Shared proximal-gradient engine for worst_case_risk (theta fixed) and
// dro_train (theta included in the iterate).
struct DualSolver {
    const LossModel& loss;
    const DiscreteDistribution& nominal;
    const ScenarioSet& scen;
    const MomentSet& set;
    const DroConfig& cfg;
    bool optimize_theta;

    std::vector<Vec> nom_feats;
    SupportSplit sigma;

    DualSolver(const LossModel& l, const DiscreteDistribution& nom, const FeatureMap& psi,
               const ScenarioSet& s, const MomentSet& e, const DroConfig& c, bool opt_theta)
        : loss(l), nominal(nom), scen(s), set(e), cfg(c), optimize_theta(opt_theta), sigma(e) {
        if (!(cfg.radius > 0.0)) throw InvalidInput("DRO radius must be positive");
        if (scen.points.empty()) throw InvalidInput("scenario set must be nonempty");
        nom_feats = featurize(nominal, psi);
        if (nom_feats.front().size() != set.dim())
            throw InvalidInput("moment set dimension does not match the feature dimension");
        for (const Vec& fz : scen.features) {
            if (fz.size() != set.dim())
                throw InvalidInput("scenario feature dimension does not match the moment set");
        }

        // the nominal support must be covered by the scenario set
        std::vector<Vec> sorted = scen.points;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < nominal.size(); ++i) {
            if (nominal.weights()[i] == 0.0) continue;
            if (!std::binary_search(sorted.begin(), sorted.end(), nominal.atoms()[i]))
                throw InvalidInput("nominal support is not contained in the scenario set");
        }
    }

    Vec scenario_losses(const Vec& theta) const {
        Vec out(scen.points.size());
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] = loss.value(theta, scen.points[j]);
            if (!std::isfinite(out[j]))
                throw InvalidInput("loss evaluates to a non-finite value at a scenario point");
        }
        return out;
    }

    Vec nominal_losses(const Vec& theta) const {
        Vec out(nominal.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = loss.value(theta, nominal.atoms()[i]);
        return out;
    }

    std::vector<Vec> nominal_theta_grads(const Vec& theta) const {
        std::vector<Vec> out(nominal.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = loss.theta_gradient(theta, nominal.atoms()[i]);
        return out;
    }

    // alpha lower bound max_j L_j(theta) - z^T psi_j over the scenarios
    double alpha_floor(const Vec& scen_losses, const Vec& z) const {
        double m = -kInf;
        for (std::size_t j = 0; j < scen_losses.size(); ++j)
            m = std::max(m, scen_losses[j] - dot(z, scen.features[j]));
        return m;
    }

    double objective(double alpha, const Vec& z, const Vec& nom_losses) const {
        const GeomStats g = geometric_stats(alpha, z, nom_losses, nom_feats, nominal.weights(),
                                            nullptr, 0);
        if (!g.feasible) return kInf;
        return alpha + dot(sigma.linear, z) + sigma.nonsmooth(z) -
               std::exp(-cfg.radius) * g.G;
    }

    DroTrainResult run(Vec theta) {
        if (theta.size() != loss.theta_dim())
            throw InvalidInput("theta dimension does not match the loss model");
        if (optimize_theta) theta = loss.clamp_theta(std::move(theta));
        Vec scen_l = scenario_losses(theta);
        Vec nom_l = nominal_losses(theta);
        Vec z(set.dim(), 0.0);
        double alpha = alpha_floor(scen_l, z) + 1.0;
        double obj = objective(alpha, z, nom_l);

        DroTrainResult best;
        best.theta = theta;
        best.alpha = alpha;
        best.z = z;
        best.value = obj;
        best.first_order_residual = kInf;
        const double tie_tol = std::max(cfg.tolerance, 1e-10);

        const double discount = std::exp(-cfg.radius);
        double t = 1.0;
        double residual = kInf;
        bool converged = false;

        for (long iter = 0; iter < cfg.max_iterations; ++iter) {
            std::vector<Vec> tgrads;
            const std::vector<Vec>* tg = nullptr;
            if (optimize_theta && loss.theta_dim() > 0) {
                tgrads = nominal_theta_grads(theta);
                tg = &tgrads;
            }
            const GeomStats g = geometric_stats(alpha, z, nom_l, nom_feats, nominal.weights(), tg,
                                                optimize_theta ? loss.theta_dim() : 0);
            if (!g.feasible)
                throw SolverError("dual iterate left the feasible region");

            const double d_alpha = 1.0 - discount * g.G * g.s1;
            Vec d_z(z.size());
            for (std::size_t j = 0; j < z.size(); ++j)
                d_z[j] = sigma.linear[j] - discount * g.G * g.s_psi[j];
            Vec d_theta(optimize_theta ? loss.theta_dim() : 0);
            for (std::size_t j = 0; j < d_theta.size(); ++j)
                d_theta[j] = discount * g.G * g.s_theta[j];

            bool accepted = false;
            for (long bt = 0; bt < cfg.max_backtracks; ++bt) {
                Vec theta_t = theta;
                Vec nom_l_t = nom_l;
                Vec scen_l_t = scen_l;
                if (!d_theta.empty()) {
                    axpy(-t, d_theta, theta_t);
                    theta_t = loss.clamp_theta(std::move(theta_t));
                    nom_l_t = nominal_losses(theta_t);
                    scen_l_t = scenario_losses(theta_t);
                }
                Vec z_t = z;
                axpy(-t, d_z, z_t);
                sigma.prox(t, z_t);
                double alpha_t = std::max(alpha - t * d_alpha, alpha_floor(scen_l_t, z_t));

                const double obj_t = objective(alpha_t, z_t, nom_l_t);
                double step_sq = (alpha_t - alpha) * (alpha_t - alpha);
                for (std::size_t j = 0; j < z.size(); ++j)
                    step_sq += (z_t[j] - z[j]) * (z_t[j] - z[j]);
                for (std::size_t j = 0; j < theta_t.size(); ++j)
                    step_sq += (theta_t[j] - theta[j]) * (theta_t[j] - theta[j]);

                if (std::isfinite(obj_t) && obj_t <= obj - 0.5 * step_sq / t) {
                    residual = std::sqrt(step_sq) / t;
                    theta = std::move(theta_t);
                    nom_l = std::move(nom_l_t);
                    scen_l = std::move(scen_l_t);
                    z = std::move(z_t);
                    alpha = alpha_t;
                    obj = obj_t;
                    t *= 1.25;
                    accepted = true;
                    break;
                }
                t *= cfg.backtrack;
            }

            if (obj < best.value - tie_tol ||
                (obj <= best.value + tie_tol && norm2(theta) < norm2(best.theta))) {
                best.theta = theta;
                best.alpha = alpha;
                best.z = z;
                best.value = obj;
            }

            if (!accepted) break;  // step size exhausted, usually a boundary optimum
            if (residual <= cfg.tolerance) {
                converged = true;
                break;
            }
        }

        best.converged = converged;
        best.first_order_residual = residual;
        return best;
    }
};

}  // namespace

LossModel LossModel::logistic(Vec theta_lower, Vec theta_upper) {
    if (theta_lower.empty() || theta_lower.size() != theta_upper.size())
        throw InvalidInput("logistic loss: theta box must be nonempty and consistent");
    for (std::size_t j = 0; j < theta_lower.size(); ++j)
        if (!(theta_lower[j] <= theta_upper[j])) throw InvalidInput("logistic loss: empty theta box");
    LossModel m;
    m.kind_ = Kind::Logistic;
    m.theta_lower_ = std::move(theta_lower);
    m.theta_upper_ = std::move(theta_upper);
    return m;
}

LossModel LossModel::linear() {
    LossModel m;
    m.kind_ = Kind::Linear;
    return m;
}

LossModel LossModel::newsvendor(double cost_produce, double cost_unmet, double theta_lower,
                                double theta_upper) {
    if (!(theta_lower <= theta_upper)) throw InvalidInput("newsvendor: empty theta box");
    LossModel m;
    m.kind_ = Kind::Newsvendor;
    m.theta_lower_ = {theta_lower};
    m.theta_upper_ = {theta_upper};
    m.cost_produce_ = cost_produce;
    m.cost_unmet_ = cost_unmet;
    return m;
}

double LossModel::value(std::span<const double> theta, const Vec& atom) const {
    switch (kind_) {
        case Kind::Logistic: {
            if (atom.size() != theta.size() + 1)
                throw InvalidInput("logistic loss expects atoms (x, y) with dim(x) = dim(theta)");
            const double y = atom.back();
            double margin = 0.0;
            for (std::size_t j = 0; j < theta.size(); ++j) margin += theta[j] * atom[j];
            return logistic_loss(y * margin);
        }
        case Kind::Linear:
            if (atom.size() != 1) throw InvalidInput("linear loss expects scalar atoms");
            return atom[0];
        case Kind::Newsvendor: {
            if (atom.size() != 1) throw InvalidInput("newsvendor loss expects scalar atoms");
            const double th = theta.empty() ? 0.0 : theta[0];
            return cost_produce_ * th + cost_unmet_ * std::max(atom[0] - th, 0.0);
        }
    }
    throw InvalidInput("unknown loss kind");
}

Vec LossModel::theta_gradient(std::span<const double> theta, const Vec& atom) const {
    switch (kind_) {
        case Kind::Logistic: {
            const double y = atom.back();
            double margin = 0.0;
            for (std::size_t j = 0; j < theta.size(); ++j) margin += theta[j] * atom[j];
            // d/dtheta log(1+e^{-y theta.x}) = -y x / (1 + e^{y theta.x})
            const double m = y * margin;
            const double s = m >= 0.0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
            Vec g(theta.size());
            for (std::size_t j = 0; j < theta.size(); ++j) g[j] = -y * atom[j] * s;
            return g;
        }
        case Kind::Linear:
            return {};
        case Kind::Newsvendor: {
            const double th = theta.empty() ? 0.0 : theta[0];
            return {cost_produce_ - (atom[0] > th ? cost_unmet_ : 0.0)};
        }
    }
    throw InvalidInput("unknown loss kind");
}

Vec LossModel::clamp_theta(Vec theta) const {
    if (theta.size() != theta_dim())
        throw InvalidInput("theta dimension does not match the loss model");
    for (std::size_t j = 0; j < theta.size(); ++j)
        theta[j] = std::clamp(theta[j], theta_lower_[j], theta_upper_[j]);
    return theta;
}

double risk(const Vec& theta, const DiscreteDistribution& dist, const LossModel& loss) {
    double s = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i)
        s += dist.weights()[i] * loss.value(theta, dist.atoms()[i]);
    return s;
}

ScenarioSet ScenarioSet::from_support(const DiscreteDistribution& nominal, const FeatureMap& psi) {
    ScenarioSet s;
    s.points = nominal.atoms();
    s.features = featurize(nominal, psi);
    return s;
}

void ScenarioSet::add(Vec point, const FeatureMap& psi) {
    features.push_back(psi(point));
    points.push_back(std::move(point));
}

WorstCaseRisk worst_case_risk(const Vec& theta, const DiscreteDistribution& nominal,
                              const FeatureMap& psi, const MomentSet& set,
                              const ScenarioSet& scenarios, const DroConfig& config,
                              const LossModel& loss) {
    DualSolver solver(loss, nominal, psi, scenarios, set, config, /*opt_theta=*/false);
    DroTrainResult r = solver.run(theta);
    return WorstCaseRisk{r.value, r.alpha, std::move(r.z), r.converged, r.first_order_residual};
}

DroTrainResult dro_train(const LossModel& loss, const DiscreteDistribution& nominal,
                         const FeatureMap& psi, const MomentSet& set, const ScenarioSet& scenarios,
                         const DroConfig& config) {
    DualSolver solver(loss, nominal, psi, scenarios, set, config, /*opt_theta=*/true);
    return solver.run(Vec(loss.theta_dim(), 0.0));
}

double default_projection_tolerance(double radius) { return std::min(1e-3, radius / 10.0); }

PipelineResult mdi_dro_pipeline(const std::vector<Vec>& samples, const FeatureMap& psi,
                                const MomentSet& set, const LossModel& loss, const DroConfig& config,
                                double projection_tolerance,
                                const IProjectionOptions& projection_options) {
    DiscreteDistribution empirical = DiscreteDistribution::from_samples(samples);
    IProjectionProblem problem{empirical, psi, set, std::nullopt, projection_tolerance};
    IProjectionSolution projection = solve(problem, projection_options);
    ScenarioSet scenarios = ScenarioSet::from_support(empirical, psi);
    DroTrainResult train =
        dro_train(loss, projection.projection, psi, set, scenarios, config);
    return PipelineResult{std::move(projection), std::move(train)};
}

double dro_dual_objective(const Vec& theta, double alpha, const Vec& z,
                          const DiscreteDistribution& nominal,
                          const std::vector<Vec>& nominal_features, const MomentSet& set,
                          double radius, const LossModel& loss) {
    double log_sum = 0.0;
    for (std::size_t i = 0; i < nominal.size(); ++i) {
        const double w = nominal.weights()[i];
        if (w == 0.0) continue;
        const double u = alpha - loss.value(theta, nominal.atoms()[i]) + dot(z, nominal_features[i]);
        if (!(u > 0.0)) return kInf;
        log_sum += w * std::log(u);
    }
    return alpha + set.support(z) - std::exp(-radius) * std::exp(log_sum);
}

DroDualGradient dro_dual_gradient(const Vec& theta, double alpha, const Vec& z,
                                  const DiscreteDistribution& nominal,
                                  const std::vector<Vec>& nominal_features, const MomentSet& set,
                                  double radius, const LossModel& loss) {
    Vec losses(nominal.size());
    std::vector<Vec> tgrads(nominal.size());
    for (std::size_t i = 0; i < nominal.size(); ++i) {
        losses[i] = loss.value(theta, nominal.atoms()[i]);
        tgrads[i] = loss.theta_gradient(theta, nominal.atoms()[i]);
    }
    const GeomStats g = geometric_stats(alpha, z, losses, nominal_features, nominal.weights(),
                                        &tgrads, loss.theta_dim());
    if (!g.feasible) throw InvalidInput("dro_dual_gradient: infeasible point (nonpositive log argument)");

    const double discount = std::exp(-radius);
    DroDualGradient out;
    out.alpha = 1.0 - discount * g.G * g.s1;

    // subgradient of the support function
    out.z.assign(z.size(), 0.0);
    std::visit(
        [&](const auto& impl) {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, MomentSet::Box>) {
                for (std::size_t j = 0; j < z.size(); ++j) {
                    const double c = 0.5 * (impl.lower[j] + impl.upper[j]);
                    const double h = 0.5 * (impl.upper[j] - impl.lower[j]);
                    out.z[j] = c + (z[j] > 0.0 ? h : (z[j] < 0.0 ? -h : 0.0));
                }
            } else if constexpr (std::is_same_v<T, MomentSet::Ball>) {
                const double n = norm2(z);
                for (std::size_t j = 0; j < z.size(); ++j)
                    out.z[j] = impl.center[j] + (n > 0.0 ? impl.radius * z[j] / n : 0.0);
            } else {
                out.z = impl.point;
            }
        },
        set.variant());
    for (std::size_t j = 0; j < z.size(); ++j) out.z[j] -= discount * g.G * g.s_psi[j];

    out.theta.assign(loss.theta_dim(), 0.0);
    for (std::size_t j = 0; j < out.theta.size(); ++j)
        out.theta[j] = discount * g.G * g.s_theta[j];
    return out;
}

}  // namespace mdi
