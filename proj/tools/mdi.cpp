// mdi: command line frontend for the MDI-DRO toolkit.
//
// Subcommands: iproject, dro-train, dro-eval, ope, bound, gen-data,
// experiment. Exit codes: 0 success, 2 configuration or input error,
// 3 solver non-convergence (outputs are still written).

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mdi/experiments.hpp"
#include "mdi/guarantees.hpp"

using nlohmann::json;
using namespace mdi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("could not open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("could not parse '" + path + "': " + e.what());
    }
    return j;
}

// inline JSON, a *.json path, or a shorthand name
json parse_spec(const std::string& spec) {
    if (spec.empty()) throw ConfigError("empty spec");
    if (spec.front() == '{') {
        try {
            return json::parse(spec);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("could not parse inline JSON spec: ") + e.what());
        }
    }
    if (spec == "identity") return json{{"variant", "identity"}};
    return load_json_file(spec);
}

FeatureMap parse_features(const std::string& spec) { return FeatureMap::from_json(parse_spec(spec)); }
MomentSet parse_set(const std::string& spec) { return MomentSet::from_json(parse_spec(spec)); }

void write_json_output(const std::string& path, const json& j) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << std::endl;
        return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("could not open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::stod(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    return out;
}

// samples from a labeled CSV (atoms (x, y)) or a distribution JSON
DiscreteDistribution load_input_distribution(const std::string& path) {
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
        return DiscreteDistribution::from_json(load_json_file(path));
    return DiscreteDistribution::from_samples(atoms_of(read_samples_csv(path)));
}

LossModel make_loss(const std::string& name, std::size_t theta_dim, double theta_bound, double cp,
                    double cu) {
    if (name == "linear") return LossModel::linear();
    if (name == "newsvendor") return LossModel::newsvendor(cp, cu, 0.0, theta_bound);
    if (name == "logistic") {
        if (theta_dim == 0) throw ConfigError("logistic loss needs at least two atom coordinates");
        return LossModel::logistic(Vec(theta_dim, -theta_bound), Vec(theta_dim, theta_bound));
    }
    throw ConfigError("unknown loss '" + name + "'");
}

json dro_result_json(const DroTrainResult& res, const json& config) {
    return json{{"theta", res.theta},
                {"J", res.value},
                {"alpha", res.alpha},
                {"z", res.z},
                {"converged", res.converged},
                {"first_order_residual", res.first_order_residual},
                {"config", config},
                {"version", kVersion}};
}

// merge --config file values into argv as defaults for flags not given
std::vector<std::string> apply_config_defaults(const std::vector<std::string>& args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;
    const json defaults = load_json_file(config_path);
    if (!defaults.is_object()) throw ConfigError("config file must hold a JSON object");
    std::vector<std::string> out = args;
    for (auto it = defaults.begin(); it != defaults.end(); ++it) {
        const std::string flag = "--" + it.key();
        bool present = false;
        for (const std::string& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
        if (present) continue;
        out.push_back(flag);
        out.push_back(it.value().is_string() ? it.value().get<std::string>() : it.value().dump());
    }
    return out;
}

struct GlobalOptions {
    std::uint64_t seed = 7;
    int threads = 1;
    std::string config_path;
    std::string out;
};

void add_global_options(CLI::App* cmd, GlobalOptions& g) {
    cmd->add_option("--seed", g.seed, "Master seed");
    cmd->add_option("--threads", g.threads, "Worker threads for trial sweeps");
    cmd->add_option("--config", g.config_path, "JSON file with default flag values");
    cmd->add_option("--out", g.out, "Output path ('-' for stdout)");
}

json echo_config(const CLI::App* cmd, const GlobalOptions& g) {
    json j{{"seed", g.seed}, {"threads", g.threads}};
    for (const CLI::Option* opt : cmd->get_options()) {
        if (opt->count() == 0 || opt->get_name().size() < 3) continue;
        const std::string key = opt->get_name().substr(2);
        // output locations do not affect the results and would break
        // byte-identical reruns into different files
        if (key == "out" || key == "summary" || key == "config") continue;
        j[key] = opt->results().size() == 1 ? json(opt->results().front())
                                            : json(opt->results());
    }
    return j;
}

int run(int argc, char** argv) {
    CLI::App app{"Minimum-discriminating-information distributionally robust optimization toolkit"};
    app.require_subcommand(1);

    // ---- iproject ----------------------------------------------------
    auto* iproject = app.add_subcommand("iproject", "Entropy projection onto a moment set");
    GlobalOptions ip_g;
    std::string ip_input, ip_features = "identity", ip_set, ip_slater;
    double ip_eps = 1e-3;
    long ip_cap = 0;
    iproject->add_option("--input", ip_input, "Distribution JSON or labeled CSV")->required();
    iproject->add_option("--features", ip_features, "Feature map spec (JSON, file, or 'identity')");
    iproject->add_option("--set", ip_set, "Moment set spec (JSON or file)")->required();
    iproject->add_option("--eps", ip_eps, "Smoothing accuracy");
    iproject->add_option("--slater", ip_slater, "Optional JSON file with Slater weights");
    iproject->add_option("--max-iterations", ip_cap, "Hard cap on fast-gradient iterations");
    add_global_options(iproject, ip_g);

    // ---- dro-train / dro-eval ----------------------------------------
    auto* train = app.add_subcommand("dro-train", "Minimize the worst-case risk over theta");
    auto* eval = app.add_subcommand("dro-eval", "Evaluate the worst-case risk at a fixed theta");
    struct DroCli {
        GlobalOptions g;
        std::string input, features = "identity", set, loss = "logistic", theta;
        double radius = 0.1, theta_bound = 10.0, cp = 1.0, cu = 2.0, eps = 0.0;
        bool skip_projection = false;
    } tr, ev;
    for (auto [cmd, opts] : {std::pair{train, &tr}, std::pair{eval, &ev}}) {
        cmd->add_option("--input", opts->input, "Labeled CSV or distribution JSON")->required();
        cmd->add_option("--features", opts->features, "Feature map spec");
        cmd->add_option("--set", opts->set, "Moment set spec (JSON or file)")->required();
        cmd->add_option("--radius", opts->radius, "Relative entropy ball radius r");
        cmd->add_option("--loss", opts->loss, "logistic | linear | newsvendor");
        cmd->add_option("--theta-box", opts->theta_bound, "Half-width of the theta box");
        cmd->add_option("--cp", opts->cp, "Newsvendor production cost");
        cmd->add_option("--cu", opts->cu, "Newsvendor unmet-demand cost");
        cmd->add_option("--eps", opts->eps, "Projection accuracy (default min(1e-3, r/10))");
        cmd->add_flag("--skip-projection", opts->skip_projection,
                      "Use the input distribution as the nominal without projecting");
        add_global_options(cmd, opts->g);
    }
    eval->add_option("--theta", ev.theta, "Comma-separated theta values")->required();

    // ---- ope ----------------------------------------------------------
    auto* ope = app.add_subcommand("ope", "Off-policy evaluation trial sweep");
    GlobalOptions ope_g;
    std::string ope_mdp = "inventory", ope_estimators = "ips,capped:4,mdi";
    long ope_N = 500, ope_trials = 1000;
    double ope_radius = 0.1, ope_eps = 0.0, ope_tau = 0.0;
    ope->add_option("--mdp", ope_mdp, "Model name (inventory)");
    ope->add_option("--N", ope_N, "Samples per trial");
    ope->add_option("--radius", ope_radius, "Ball radius r");
    ope->add_option("--trials", ope_trials, "Number of trials");
    ope->add_option("--estimators", ope_estimators, "Comma list: ips, capped:<beta>, mdi");
    ope->add_option("--eps", ope_eps, "Projection accuracy");
    ope->add_option("--tau", ope_tau, "Singleton inflation half-width");
    add_global_options(ope, ope_g);

    // ---- bound ----------------------------------------------------------
    auto* bound = app.add_subcommand("bound", "Closed-form concentration bounds");
    GlobalOptions bound_g;
    std::string bound_kind = "finite";
    double bound_r = 0.1, bound_eps = 0.1, bound_b = 1.0;
    long bound_N = 100, bound_card = 2, bound_nS = 5, bound_nA = 4;
    bound->add_option("--kind", bound_kind, "finite | ope | hoeffding");
    bound->add_option("--r", bound_r, "Ball radius r");
    bound->add_option("--N", bound_N, "Sample count");
    bound->add_option("--card", bound_card, "|Xi| for the finite-sample bound");
    bound->add_option("--nS", bound_nS, "Number of states");
    bound->add_option("--nA", bound_nA, "Number of actions");
    bound->add_option("--epsilon", bound_eps, "Hoeffding deviation");
    bound->add_option("--b", bound_b, "Hoeffding scale b");
    add_global_options(bound, bound_g);

    // ---- gen-data ------------------------------------------------------
    auto* gen = app.add_subcommand("gen-data", "Generate synthetic datasets");
    GlobalOptions gen_g;
    std::string gen_kind = "synth-train";
    std::size_t gen_m = 6;
    long gen_N = 100;
    gen->add_option("--kind", gen_kind, "synth-train | synth-test");
    gen->add_option("--m", gen_m, "Dimension m (features m-1 plus label)");
    gen->add_option("--N", gen_N, "Number of samples");
    add_global_options(gen, gen_g);

    // ---- experiment ------------------------------------------------------
    auto* exp = app.add_subcommand("experiment", "Seeded experiment sweeps with CSV output");
    GlobalOptions exp_g;
    std::string exp_name, exp_summary, exp_grid, exp_rgrid, exp_data, exp_estimators = "ips,capped,mdi";
    long exp_trials = 0, exp_N = 0, exp_test = 20'000, exp_budget = 1'000'000;
    std::size_t exp_m = 6;
    double exp_radius = 0.0, exp_slack = 0.05, exp_beta = 4.0, exp_delta_m = 1e-3;
    exp->add_option("--name", exp_name,
                    "covshift | heart | ope-inventory | consistency | conditional-limit")
        ->required();
    exp->add_option("--trials", exp_trials, "Trials per grid point");
    exp->add_option("--N", exp_N, "Sample count (single-N experiments)");
    exp->add_option("--N-grid", exp_grid, "Comma list of N values");
    exp->add_option("--r-grid", exp_rgrid, "Comma list of radii (heart)");
    exp->add_option("--m", exp_m, "Dimension m");
    exp->add_option("--radius", exp_radius, "Ball radius r");
    exp->add_option("--slack", exp_slack, "Moment box half-width (covshift)");
    exp->add_option("--beta", exp_beta, "IPS cap (ope-inventory)");
    exp->add_option("--test-N", exp_test, "Held-out test size (covshift)");
    exp->add_option("--mc-budget", exp_budget, "Monte Carlo budget for the label mean (covshift)");
    exp->add_option("--data", exp_data, "Heart CSV path");
    exp->add_option("--delta-m", exp_delta_m, "Box half-width (heart)");
    exp->add_option("--estimators", exp_estimators, "Estimator list (ope-inventory)");
    exp->add_option("--summary", exp_summary, "Summary CSV path");
    add_global_options(exp, exp_g);

    std::vector<std::string> raw_args(argv + 1, argv + argc);
    std::vector<std::string> args = apply_config_defaults(raw_args);
    {
        std::vector<const char*> cargs;
        cargs.push_back(argv[0]);
        for (const std::string& a : args) cargs.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(cargs.size()), cargs.data());
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e);
            return code == 0 ? kExitOk : kExitConfig;
        }
    }

    if (iproject->parsed()) {
        const json config = echo_config(iproject, ip_g);
        IProjectionProblem problem{load_input_distribution(ip_input), parse_features(ip_features),
                                   parse_set(ip_set), std::nullopt, ip_eps};
        if (!ip_slater.empty()) problem.slater_weights = load_json_file(ip_slater).get<Vec>();
        IProjectionOptions options;
        if (ip_cap > 0) options.max_iterations = ip_cap;
        const IProjectionSolution sol = solve(problem, options);
        json out{{"projection", sol.projection.to_json()},
                 {"dual", sol.dual},
                 {"entropy", sol.entropy_value},
                 {"feasibility_gap", sol.feasibility_gap},
                 {"certified_optimality_bound", sol.certified_optimality_bound},
                 {"certified_feasibility_bound", sol.certified_feasibility_bound},
                 {"iterations", sol.iterations_run},
                 {"config", config},
                 {"version", kVersion}};
        write_json_output(ip_g.out, out);
        return kExitOk;
    }

    for (auto [cmd, opts, is_train] : {std::tuple{train, &tr, true}, std::tuple{eval, &ev, false}}) {
        if (!cmd->parsed()) continue;
        const json config = echo_config(cmd, opts->g);
        const DiscreteDistribution input = load_input_distribution(opts->input);
        const FeatureMap psi = parse_features(opts->features);
        const MomentSet set = parse_set(opts->set);
        const std::size_t theta_dim = opts->loss == "logistic" ? input.dim() - 1 : 1;
        const LossModel loss = make_loss(opts->loss, theta_dim, opts->theta_bound, opts->cp,
                                         opts->cu);
        DroConfig cfg;
        cfg.radius = opts->radius;
        const double eps = opts->eps > 0.0 ? opts->eps : default_projection_tolerance(opts->radius);

        DiscreteDistribution nominal = input;
        json projection_info;
        if (!opts->skip_projection) {
            IProjectionProblem problem{input, psi, set, std::nullopt, eps};
            IProjectionSolution sol = solve(problem);
            projection_info = json{{"entropy", sol.entropy_value},
                                   {"feasibility_gap", sol.feasibility_gap},
                                   {"iterations", sol.iterations_run}};
            nominal = std::move(sol.projection);
        }
        const ScenarioSet scenarios = ScenarioSet::from_support(input, psi);

        DroTrainResult result;
        if (is_train) {
            result = dro_train(loss, nominal, psi, set, scenarios, cfg);
        } else {
            const Vec theta = parse_number_list(opts->theta);
            const WorstCaseRisk wc = worst_case_risk(theta, nominal, psi, set, scenarios, cfg,
                                                     loss);
            result = DroTrainResult{theta, wc.value, wc.alpha, wc.z, wc.converged,
                                    wc.first_order_residual};
        }
        json out = dro_result_json(result, config);
        if (!projection_info.is_null()) out["projection"] = projection_info;
        write_json_output(opts->g.out, out);
        return result.converged ? kExitOk : kExitSolver;
    }

    if (ope->parsed()) {
        const json config = echo_config(ope, ope_g);
        if (ope_mdp != "inventory") throw ConfigError("unknown MDP '" + ope_mdp + "'");
        OpeInventoryParams params;
        params.trials = ope_trials;
        params.N = ope_N;
        params.radius = ope_radius;
        params.projection_tolerance = ope_eps;
        params.tau = ope_tau;
        params.estimators.clear();
        for (const std::string& tok : CLI::detail::split(ope_estimators, ',')) {
            if (tok.rfind("capped", 0) == 0) {
                params.estimators.push_back("capped");
                const auto colon = tok.find(':');
                if (colon != std::string::npos) params.beta = std::stod(tok.substr(colon + 1));
            } else {
                params.estimators.push_back(tok);
            }
        }
        RunContext ctx{ope_g.seed, ope_g.threads, ope_g.out.empty() ? "ope_results.csv" : ope_g.out,
                       "", config};
        run_ope_inventory(params, ctx);
        return kExitOk;
    }

    if (bound->parsed()) {
        const json config = echo_config(bound, bound_g);
        json out{{"kind", bound_kind}, {"config", config}, {"version", kVersion}};
        if (bound_kind == "finite") {
            const BoundReport b = finite_sample_bound(bound_r, bound_N, bound_card);
            out["log_probability_bound"] = b.log_probability_bound;
            out["probability_bound"] = b.probability_bound;
        } else if (bound_kind == "ope") {
            const BoundReport b = ope_bound(bound_r, bound_N, bound_nS, bound_nA);
            out["log_probability_bound"] = b.log_probability_bound;
            out["probability_bound"] = b.probability_bound;
        } else if (bound_kind == "hoeffding") {
            out["probability_bound"] = hoeffding_ips_bound(bound_eps, bound_N, bound_b);
        } else {
            throw ConfigError("unknown bound kind '" + bound_kind + "'");
        }
        write_json_output(bound_g.out, out);
        return kExitOk;
    }

    if (gen->parsed()) {
        const json config = echo_config(gen, gen_g);
        std::vector<LabeledSample> samples;
        if (gen_kind == "synth-train") samples = synth_train(gen_m, gen_N, gen_g.seed);
        else if (gen_kind == "synth-test") samples = synth_test(gen_m, gen_N, gen_g.seed);
        else throw ConfigError("unknown dataset kind '" + gen_kind + "'");
        if (gen_g.out.empty()) throw ConfigError("gen-data needs --out");
        write_samples_csv(gen_g.out, samples,
                          std::string(kVersion) + " config: " + config.dump());
        return kExitOk;
    }

    if (exp->parsed()) {
        const json config = echo_config(exp, exp_g);
        RunContext ctx{exp_g.seed, exp_g.threads,
                       exp_g.out.empty() ? exp_name + "_rows.csv" : exp_g.out,
                       exp_summary.empty() ? exp_name + "_summary.csv" : exp_summary, config};
        if (exp_name == "covshift") {
            CovshiftParams p;
            if (exp_trials > 0) p.trials = exp_trials;
            if (!exp_grid.empty()) {
                p.n_grid.clear();
                for (double v : parse_number_list(exp_grid)) p.n_grid.push_back(static_cast<long>(v));
            }
            p.m = exp_m;
            if (exp_radius > 0.0) p.radius = exp_radius;
            p.slack = exp_slack;
            p.mc_budget = exp_budget;
            p.test_size = exp_test;
            run_covshift(p, ctx);
        } else if (exp_name == "ope-inventory") {
            OpeInventoryParams p;
            if (exp_trials > 0) p.trials = exp_trials;
            if (exp_N > 0) p.N = exp_N;
            if (exp_radius > 0.0) p.radius = exp_radius;
            p.beta = exp_beta;
            p.estimators.clear();
            for (const std::string& tok : CLI::detail::split(exp_estimators, ','))
                p.estimators.push_back(tok.rfind("capped", 0) == 0 ? "capped" : tok);
            run_ope_inventory(p, ctx);
        } else if (exp_name == "consistency") {
            ConsistencyParams p;
            if (!exp_grid.empty()) {
                p.n_grid.clear();
                for (double v : parse_number_list(exp_grid)) p.n_grid.push_back(static_cast<long>(v));
            }
            run_consistency(p, ctx);
        } else if (exp_name == "conditional-limit") {
            ConditionalLimitParams p;
            if (exp_N > 0) p.N = static_cast<int>(exp_N);
            if (exp_trials > 0) p.trials = exp_trials;
            run_conditional_limit(p, ctx);
        } else if (exp_name == "heart") {
            HeartParams p;
            p.data_path = exp_data;
            if (exp_trials > 0) p.trials = exp_trials;
            if (exp_N > 0) p.N = exp_N;
            if (!exp_rgrid.empty()) p.r_grid = parse_number_list(exp_rgrid);
            p.delta_m = exp_delta_m;
            run_heart(p, ctx);
        } else {
            throw ConfigError("unknown experiment '" + exp_name + "'");
        }
        return kExitOk;
    }

    return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << std::endl;
        return kExitSolver;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitConfig;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitConfig;
    }
}
