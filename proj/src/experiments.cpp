#include "mdi/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <atomic>
#include <thread>

namespace mdi {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Tidy CSV with the resolved config and version in comment lines.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const nlohmann::json& config) {
        if (path.empty()) return;
        out_.open(path);
        if (!out_) throw ConfigError("could not open '" + path + "' for writing");
        out_ << "# version: " << kVersion << "\n";
        out_ << "# config: " << config.dump() << "\n";
    }

    void header(const std::vector<std::string>& cols) {
        if (!out_.is_open()) return;
        for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
        out_ << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        if (!out_.is_open()) return;
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

// context config plus the fully resolved runner parameters, so reruns are
// reproducible from the file header alone
nlohmann::json merged_config(const RunContext& ctx, nlohmann::json resolved) {
    nlohmann::json cfg = ctx.config.is_null() ? nlohmann::json::object() : ctx.config;
    resolved["seed"] = ctx.seed;
    cfg["resolved"] = std::move(resolved);
    return cfg;
}

}  // namespace

void parallel_trials(long count, int threads, const std::function<void(long)>& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || count <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::atomic<long> next{0};
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (long i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

double mean_loss(const Vec& theta, const LossModel& loss, const std::vector<Vec>& atoms) {
    double s = 0.0;
    for (const Vec& a : atoms) s += loss.value(theta, a);
    return s / static_cast<double>(atoms.size());
}

double misclassification_rate(const Vec& theta, const std::vector<LabeledSample>& samples) {
    long wrong = 0;
    for (const LabeledSample& s : samples) {
        const double margin = dot(theta, s.x);
        const double predicted = margin > 0.0 ? 1.0 : -1.0;
        if (predicted != s.y) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(samples.size());
}

Vec minimize_weighted_risk(const LossModel& loss, const std::vector<Vec>& atoms, const Vec& weights,
                           long max_iterations, double tolerance) {
    if (atoms.size() != weights.size() || atoms.empty())
        throw InvalidInput("minimize_weighted_risk: atoms and weights must match and be nonempty");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw InvalidInput("minimize_weighted_risk: zero total weight");

    Vec theta = loss.clamp_theta(Vec(loss.theta_dim(), 0.0));
    if (theta.empty()) return theta;

    auto objective = [&](const Vec& th) {
        double s = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            s += weights[i] * loss.value(th, atoms[i]);
        return s / total;
    };

    double obj = objective(theta);
    double t = 1.0;
    for (long iter = 0; iter < max_iterations; ++iter) {
        Vec grad(theta.size(), 0.0);
        for (std::size_t i = 0; i < atoms.size(); ++i)
            axpy(weights[i] / total, loss.theta_gradient(theta, atoms[i]), grad);

        bool accepted = false;
        double residual = 0.0;
        for (int bt = 0; bt < 60; ++bt) {
            Vec trial = theta;
            axpy(-t, grad, trial);
            trial = loss.clamp_theta(std::move(trial));
            double step_sq = 0.0;
            for (std::size_t j = 0; j < trial.size(); ++j)
                step_sq += (trial[j] - theta[j]) * (trial[j] - theta[j]);
            const double obj_t = objective(trial);
            if (obj_t <= obj - 0.5 * step_sq / t) {
                residual = std::sqrt(step_sq) / t;
                theta = std::move(trial);
                obj = obj_t;
                t *= 1.25;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted || residual <= tolerance) break;
    }
    return theta;
}

const CovshiftCell& CovshiftSummary::at(long N, const std::string& method) const {
    for (const CovshiftCell& c : cells)
        if (c.N == N && c.method == method) return c;
    throw InvalidInput("covshift summary: no cell for the requested (N, method)");
}

CovshiftSummary run_covshift(const CovshiftParams& p, const RunContext& ctx) {
    if (p.trials < 1 || p.n_grid.empty()) throw ConfigError("covshift: need trials >= 1 and a nonempty N grid");

    const CovshiftMomentSet cov = covshift_moment_set(p.m, p.slack, p.mc_budget, mix_seed(ctx.seed, 0xC0));
    const std::vector<LabeledSample> test = synth_test(p.m, p.test_size, mix_seed(ctx.seed, 0xE1));
    const std::vector<Vec> test_atoms = atoms_of(test);

    const std::size_t n_theta = p.m - 1;
    const LossModel loss = LossModel::logistic(Vec(n_theta, -p.theta_bound), Vec(n_theta, p.theta_bound));
    const double eps = p.projection_tolerance > 0.0 ? p.projection_tolerance
                                                    : default_projection_tolerance(p.radius);
    const nlohmann::json file_config = merged_config(
        ctx, {{"experiment", "covshift"},
              {"trials", p.trials},
              {"n_grid", p.n_grid},
              {"m", p.m},
              {"radius", p.radius},
              {"slack", p.slack},
              {"mc_budget", p.mc_budget},
              {"test_size", p.test_size},
              {"theta_bound", p.theta_bound},
              {"projection_tolerance", eps}});

    struct TrialRow {
        long N = 0;
        long trial = 0;
        double risk_mdi = nan_value(), bound = nan_value();
        double risk_erm = nan_value(), risk_iwerm = nan_value();
        int disappointed = 0;
        std::string status = "ok";
    };

    const long rows_count = static_cast<long>(p.n_grid.size()) * p.trials;
    std::vector<TrialRow> rows(static_cast<std::size_t>(rows_count));

    parallel_trials(rows_count, ctx.threads, [&](long idx) {
        TrialRow& row = rows[static_cast<std::size_t>(idx)];
        row.N = p.n_grid[static_cast<std::size_t>(idx) / static_cast<std::size_t>(p.trials)];
        row.trial = idx % p.trials;
        const std::uint64_t seed = mix_seed(ctx.seed, static_cast<std::uint64_t>(idx) + 1);

        const std::vector<LabeledSample> train = synth_train(p.m, row.N, seed);
        const std::vector<Vec> train_atoms = atoms_of(train);

        // naive ERM ignores the shift
        const Vec theta_erm =
            minimize_weighted_risk(loss, train_atoms, Vec(train_atoms.size(), 1.0));
        row.risk_erm = mean_loss(theta_erm, loss, test_atoms);

        // IWERM reweights by the known density ratio
        Vec iw(train.size());
        for (std::size_t i = 0; i < train.size(); ++i)
            iw[i] = covshift_density_ratio(train[i].x, p.m);
        const Vec theta_iw = minimize_weighted_risk(loss, train_atoms, iw);
        row.risk_iwerm = mean_loss(theta_iw, loss, test_atoms);

        try {
            DroConfig cfg;
            cfg.radius = p.radius;
            const PipelineResult res =
                mdi_dro_pipeline(train_atoms, FeatureMap::identity(), cov.set, loss, cfg, eps);
            row.bound = res.train.value;
            row.risk_mdi = mean_loss(res.train.theta, loss, test_atoms);
            row.disappointed = row.risk_mdi > row.bound ? 1 : 0;
        } catch (const Error& e) {
            row.status = std::string("mdi-failed: ") + e.what();
        }
    });

    CsvWriter rows_csv(ctx.rows_path, file_config);
    rows_csv.header({"trial", "N", "method", "oos_risk", "bound", "disappointed", "status"});
    for (const TrialRow& r : rows) {
        rows_csv.row({std::to_string(r.trial), std::to_string(r.N), "mdi-dro", fmt(r.risk_mdi),
                      fmt(r.bound), std::to_string(r.disappointed), r.status});
        rows_csv.row({std::to_string(r.trial), std::to_string(r.N), "erm", fmt(r.risk_erm), "nan",
                      "0", "ok"});
        rows_csv.row({std::to_string(r.trial), std::to_string(r.N), "iwerm", fmt(r.risk_iwerm),
                      "nan", "0", "ok"});
    }

    CovshiftSummary summary;
    summary.y_mean = cov.y_mean;
    summary.y_std_error = cov.y_std_error;
    for (long N : p.n_grid) {
        CovshiftCell mdi{N, "mdi-dro", 0, 0, 0, 0, 0};
        CovshiftCell erm{N, "erm", 0, nan_value(), nan_value(), 0, 0};
        CovshiftCell iw_cell{N, "iwerm", 0, nan_value(), nan_value(), 0, 0};
        long ok = 0;
        for (const TrialRow& r : rows) {
            if (r.N != N) continue;
            erm.mean_risk += r.risk_erm;
            erm.trials += 1;
            iw_cell.mean_risk += r.risk_iwerm;
            iw_cell.trials += 1;
            mdi.trials += 1;
            if (r.status == "ok") {
                ++ok;
                mdi.mean_risk += r.risk_mdi;
                mdi.mean_bound += r.bound;
                mdi.reliability += r.disappointed ? 0.0 : 1.0;
            } else {
                mdi.failures += 1;
            }
        }
        erm.mean_risk /= static_cast<double>(erm.trials);
        iw_cell.mean_risk /= static_cast<double>(iw_cell.trials);
        if (ok > 0) {
            mdi.mean_risk /= static_cast<double>(ok);
            mdi.mean_bound /= static_cast<double>(ok);
            mdi.reliability /= static_cast<double>(ok);
        }
        summary.cells.push_back(mdi);
        summary.cells.push_back(erm);
        summary.cells.push_back(iw_cell);
    }

    CsvWriter summary_csv(ctx.summary_path, file_config);
    summary_csv.header({"N", "method", "mean_oos_risk", "mean_bound", "reliability", "failures",
                        "trials"});
    for (const CovshiftCell& c : summary.cells)
        summary_csv.row({std::to_string(c.N), c.method, fmt(c.mean_risk), fmt(c.mean_bound),
                         fmt(c.reliability), std::to_string(c.failures), std::to_string(c.trials)});
    return summary;
}

const OpeEstimatorSummary& OpeInventorySummary::at(const std::string& name) const {
    for (const OpeEstimatorSummary& e : estimators)
        if (e.estimator == name) return e;
    throw InvalidInput("ope summary: no estimator named '" + name + "'");
}

OpeInventorySummary run_ope_inventory(const OpeInventoryParams& p, const RunContext& ctx) {
    if (p.trials < 1 || p.N < 1) throw ConfigError("ope-inventory: need trials >= 1 and N >= 1");
    const TabularMdp mdp = inventory_instance(p.inventory);
    const nlohmann::json file_config = merged_config(
        ctx, {{"experiment", "ope-inventory"},
              {"trials", p.trials},
              {"N", p.N},
              {"radius", p.radius},
              {"beta", p.beta},
              {"estimators", p.estimators},
              {"projection_tolerance", p.projection_tolerance},
              {"tau", p.tau}});

    struct TrialRow {
        long trial = 0;
        double true_value = 0;
        double ips = nan_value(), capped = nan_value(), mdi = nan_value();
        std::string status = "ok";
    };
    std::vector<TrialRow> rows(static_cast<std::size_t>(p.trials));

    const bool want_ips = std::count(p.estimators.begin(), p.estimators.end(), "ips") > 0;
    const bool want_capped = std::count(p.estimators.begin(), p.estimators.end(), "capped") > 0;
    const bool want_mdi = std::count(p.estimators.begin(), p.estimators.end(), "mdi") > 0;

    parallel_trials(p.trials, ctx.threads, [&](long idx) {
        TrialRow& row = rows[static_cast<std::size_t>(idx)];
        row.trial = idx;
        const std::uint64_t seed = mix_seed(ctx.seed, static_cast<std::uint64_t>(idx) + 1);

        const StationaryPolicy pi_b = random_policy(mdp.n_states, mdp.n_actions, mix_seed(seed, 1));
        const StationaryPolicy pi_e = random_policy(mdp.n_states, mdp.n_actions, mix_seed(seed, 2));
        const OccupationMeasure mu_b = occupation_measure(mdp, pi_b);
        const OccupationMeasure mu_e = occupation_measure(mdp, pi_e);
        row.true_value = mu_e.mean_cost;

        const std::vector<SaSample> samples = sample_behavioral(mdp, pi_b, p.N, mix_seed(seed, 3));

        if (want_ips) row.ips = ips_estimate(samples, mu_e, mu_b);
        if (want_capped) row.capped = capped_ips_estimate(samples, mu_e, mu_b, p.beta);
        if (want_mdi) {
            try {
                MdiOpeOptions opts;
                opts.radius = p.radius;
                opts.projection_tolerance = p.projection_tolerance;
                opts.tau = p.tau;
                row.mdi = mdi_ope_estimate(samples, mu_e, mu_b, opts).value;
            } catch (const Error& e) {
                row.status = std::string("mdi-failed: ") + e.what();
            }
        }
    });

    // exactly the documented schema; a failed trial shows up as a nan
    // estimate and is excluded from the summary averages
    CsvWriter rows_csv(ctx.rows_path, file_config);
    rows_csv.header({"trial", "estimator", "estimate", "true_value", "disappointed"});
    auto emit = [&](const TrialRow& r, const std::string& name, double est) {
        rows_csv.row({std::to_string(r.trial), name, fmt(est), fmt(r.true_value),
                      r.true_value > est ? "1" : "0"});
    };
    for (const TrialRow& r : rows) {
        if (want_ips) emit(r, "ips", r.ips);
        if (want_capped) emit(r, "capped", r.capped);
        if (want_mdi) emit(r, "mdi", r.mdi);
    }

    OpeInventorySummary summary;
    auto summarize = [&](const std::string& name, auto getter, bool has_status) {
        OpeEstimatorSummary s;
        s.estimator = name;
        long ok = 0;
        for (const TrialRow& r : rows) {
            s.trials += 1;
            const double est = getter(r);
            if (has_status && r.status != "ok") {
                s.failures += 1;
                continue;
            }
            ++ok;
            s.mean_estimate += est;
            s.mean_true += r.true_value;
            s.mean_abs_error += std::abs(est - r.true_value);
            s.disappointment += r.true_value > est ? 1.0 : 0.0;
        }
        if (ok > 0) {
            s.mean_estimate /= ok;
            s.mean_true /= ok;
            s.mean_abs_error /= ok;
            s.disappointment /= ok;
        }
        summary.estimators.push_back(std::move(s));
    };
    if (want_ips) summarize("ips", [](const TrialRow& r) { return r.ips; }, false);
    if (want_capped) summarize("capped", [](const TrialRow& r) { return r.capped; }, false);
    if (want_mdi) summarize("mdi", [](const TrialRow& r) { return r.mdi; }, true);

    CsvWriter summary_csv(ctx.summary_path, file_config);
    summary_csv.header({"estimator", "mean_estimate", "mean_true", "mean_abs_error",
                        "disappointment", "failures", "trials"});
    for (const OpeEstimatorSummary& s : summary.estimators)
        summary_csv.row({s.estimator, fmt(s.mean_estimate), fmt(s.mean_true), fmt(s.mean_abs_error),
                         fmt(s.disappointment), std::to_string(s.failures), std::to_string(s.trials)});
    return summary;
}

ConsistencySummary run_consistency(const ConsistencyParams& p, const RunContext& ctx) {
    if (p.n_grid.empty()) throw ConfigError("consistency: empty N grid");
    const nlohmann::json file_config = merged_config(ctx, {{"experiment", "consistency"},
                                                           {"n_grid", p.n_grid},
                                                           {"box_lower", p.box_lower},
                                                           {"box_upper", p.box_upper}});
    const DiscreteDistribution base(p.atoms, p.weights);
    const FeatureMap psi = FeatureMap::identity();
    const MomentSet set = MomentSet::box({p.box_lower}, {p.box_upper});
    const LossModel loss = LossModel::linear();

    // true projection: the base mean sits below the box, so the optimum is
    // the exponential tilt onto the lower face
    const double base_mean = moment(base, psi)[0];
    double target = std::clamp(base_mean, p.box_lower, p.box_upper);
    ConsistencySummary summary;
    if (target != base_mean) {
        const DiscreteDistribution true_projection = tilting_oracle(base, psi, target);
        summary.true_value = risk({}, true_projection, loss);
    } else {
        summary.true_value = base_mean;
    }

    for (long N : p.n_grid) {
        Rng rng(mix_seed(ctx.seed, static_cast<std::uint64_t>(N)));
        std::vector<Vec> samples;
        samples.reserve(static_cast<std::size_t>(N));
        for (long i = 0; i < N; ++i)
            samples.push_back(base.atoms()[rng.categorical(base.weights())]);

        const double r = 1.0 / static_cast<double>(N);
        DroConfig cfg;
        cfg.radius = r;
        const PipelineResult res = mdi_dro_pipeline(samples, psi, set, loss, cfg,
                                                    default_projection_tolerance(r));
        ConsistencyPoint pt;
        pt.N = N;
        pt.radius = r;
        pt.value = res.train.value;
        pt.true_value = summary.true_value;
        pt.gap = std::abs(pt.value - pt.true_value);
        summary.points.push_back(pt);
    }

    CsvWriter rows_csv(ctx.rows_path, file_config);
    rows_csv.header({"N", "radius", "value", "true_value", "gap"});
    for (const ConsistencyPoint& pt : summary.points)
        rows_csv.row({std::to_string(pt.N), fmt(pt.radius), fmt(pt.value), fmt(pt.true_value),
                      fmt(pt.gap)});

    CsvWriter summary_csv(ctx.summary_path, file_config);
    summary_csv.header({"N", "gap"});
    for (const ConsistencyPoint& pt : summary.points)
        summary_csv.row({std::to_string(pt.N), fmt(pt.gap)});
    return summary;
}

ConditionalLimitSummary run_conditional_limit(const ConditionalLimitParams& p,
                                              const RunContext& ctx) {
    const nlohmann::json file_config = merged_config(ctx, {{"experiment", "conditional-limit"},
                                                           {"N", p.N},
                                                           {"trials", p.trials},
                                                           {"box_lower", p.box_lower},
                                                           {"box_upper", p.box_upper}});
    const DiscreteDistribution coin({{0.0}, {1.0}}, {0.5, 0.5});
    const MomentSet set = MomentSet::box({p.box_lower}, {p.box_upper});
    const ConditionalLimitResult res = conditional_limit_check(
        coin, FeatureMap::identity(), set, {0.0, 1.0}, p.N, p.trials, mix_seed(ctx.seed, 1));

    ConditionalLimitSummary summary;
    summary.result = res;
    summary.difference = std::abs(res.conditional_mean - res.projection_mean);

    CsvWriter rows_csv(ctx.rows_path, file_config);
    rows_csv.header({"N", "trials", "accepted", "conditional_mean", "projection_mean", "difference"});
    rows_csv.row({std::to_string(p.N), std::to_string(p.trials), std::to_string(res.accepted_trials),
                  fmt(res.conditional_mean), fmt(res.projection_mean), fmt(summary.difference)});
    CsvWriter summary_csv(ctx.summary_path, file_config);
    summary_csv.header({"conditional_mean", "projection_mean", "difference"});
    summary_csv.row({fmt(res.conditional_mean), fmt(res.projection_mean), fmt(summary.difference)});
    return summary;
}

HeartSummary run_heart(const HeartParams& p, const RunContext& ctx) {
    if (p.data_path.empty()) throw ConfigError("heart: a data path is required");
    const nlohmann::json file_config = merged_config(ctx, {{"experiment", "heart"},
                                                           {"data", p.data_path},
                                                           {"trials", p.trials},
                                                           {"N", p.N},
                                                           {"r_grid", p.r_grid},
                                                           {"delta_m", p.delta_m},
                                                           {"theta_bound", p.theta_bound}});
    const HeartDataset data = load_heart_csv(p.data_path);
    const std::vector<LabeledSample> all = data.samples();
    const std::vector<Vec> all_atoms = atoms_of(all);
    const MomentSet set = empirical_mean_box(all, p.delta_m);

    const std::size_t n_theta = all.front().x.size();
    const LossModel loss = LossModel::logistic(Vec(n_theta, -p.theta_bound), Vec(n_theta, p.theta_bound));

    HeartSummary summary;
    const Vec theta_ideal = minimize_weighted_risk(loss, all_atoms, Vec(all_atoms.size(), 1.0));
    summary.ideal_risk = mean_loss(theta_ideal, loss, all_atoms);
    summary.ideal_misclassification = misclassification_rate(theta_ideal, all);

    struct TrialRow {
        long trial = 0;
        double radius = 0;
        double risk_mdi = nan_value(), bound = nan_value(), mis_mdi = nan_value();
        double risk_erm = nan_value(), mis_erm = nan_value();
        std::string status = "ok";
    };
    const long rows_count = static_cast<long>(p.r_grid.size()) * p.trials;
    std::vector<TrialRow> rows(static_cast<std::size_t>(rows_count));

    parallel_trials(rows_count, ctx.threads, [&](long idx) {
        TrialRow& row = rows[static_cast<std::size_t>(idx)];
        const std::size_t r_idx = static_cast<std::size_t>(idx) / static_cast<std::size_t>(p.trials);
        row.radius = p.r_grid[r_idx];
        row.trial = idx % p.trials;
        // the same subsample is reused across the radius grid
        const std::uint64_t seed = mix_seed(ctx.seed, static_cast<std::uint64_t>(row.trial) + 1);
        const std::vector<LabeledSample> sub = biased_subsample(data, p.N, seed);
        const std::vector<Vec> sub_atoms = atoms_of(sub);

        const Vec theta_erm = minimize_weighted_risk(loss, sub_atoms, Vec(sub_atoms.size(), 1.0));
        row.risk_erm = mean_loss(theta_erm, loss, all_atoms);
        row.mis_erm = misclassification_rate(theta_erm, all);

        try {
            DroConfig cfg;
            cfg.radius = row.radius;
            const double eps = p.projection_tolerance > 0.0
                                   ? p.projection_tolerance
                                   : default_projection_tolerance(row.radius);
            const PipelineResult res =
                mdi_dro_pipeline(sub_atoms, FeatureMap::identity(), set, loss, cfg, eps);
            row.bound = res.train.value;
            row.risk_mdi = mean_loss(res.train.theta, loss, all_atoms);
            row.mis_mdi = misclassification_rate(res.train.theta, all);
        } catch (const Error& e) {
            row.status = std::string("mdi-failed: ") + e.what();
        }
    });

    CsvWriter rows_csv(ctx.rows_path, file_config);
    rows_csv.header({"trial", "radius", "method", "oos_risk", "bound", "misclassification",
                     "status"});
    for (const TrialRow& r : rows) {
        rows_csv.row({std::to_string(r.trial), fmt(r.radius), "mdi-dro", fmt(r.risk_mdi),
                      fmt(r.bound), fmt(r.mis_mdi), r.status});
        rows_csv.row({std::to_string(r.trial), fmt(r.radius), "erm", fmt(r.risk_erm), "nan",
                      fmt(r.mis_erm), "ok"});
    }

    for (double r : p.r_grid) {
        HeartCell mdi{r, "mdi-dro", 0, 0, 0, 0, 0};
        HeartCell erm{r, "erm", 0, nan_value(), 0, 0, 0};
        long ok = 0;
        for (const TrialRow& row : rows) {
            if (row.radius != r) continue;
            erm.mean_risk += row.risk_erm;
            erm.mean_misclassification += row.mis_erm;
            erm.trials += 1;
            mdi.trials += 1;
            if (row.status == "ok") {
                ++ok;
                mdi.mean_risk += row.risk_mdi;
                mdi.mean_bound += row.bound;
                mdi.mean_misclassification += row.mis_mdi;
            } else {
                mdi.failures += 1;
            }
        }
        erm.mean_risk /= static_cast<double>(erm.trials);
        erm.mean_misclassification /= static_cast<double>(erm.trials);
        if (ok > 0) {
            mdi.mean_risk /= static_cast<double>(ok);
            mdi.mean_bound /= static_cast<double>(ok);
            mdi.mean_misclassification /= static_cast<double>(ok);
        }
        summary.cells.push_back(mdi);
        summary.cells.push_back(erm);
    }

    CsvWriter summary_csv(ctx.summary_path, file_config);
    summary_csv.header({"radius", "method", "mean_oos_risk", "mean_bound",
                        "mean_misclassification", "failures", "trials"});
    for (const HeartCell& c : summary.cells)
        summary_csv.row({fmt(c.radius), c.method, fmt(c.mean_risk), fmt(c.mean_bound),
                         fmt(c.mean_misclassification), std::to_string(c.failures),
                         std::to_string(c.trials)});
    summary_csv.row({"ideal", "full-data", fmt(summary.ideal_risk), "nan",
                     fmt(summary.ideal_misclassification), "0", "1"});
    return summary;
}

}  // namespace mdi
