// Python bindings for the core operations: distributions, moment sets,
// entropy projection, worst-case risk, bounds, the tabular MDP tooling and
// the dataset generators.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mdi/experiments.hpp"
#include "mdi/guarantees.hpp"

namespace py = pybind11;
using namespace mdi;

namespace {

MomentSet set_from_kwargs(const std::string& variant, const py::kwargs& kwargs) {
    if (variant == "box")
        return MomentSet::box(kwargs["lower"].cast<Vec>(), kwargs["upper"].cast<Vec>());
    if (variant == "ball")
        return MomentSet::ball(kwargs["center"].cast<Vec>(), kwargs["radius"].cast<double>());
    if (variant == "singleton") return MomentSet::singleton(kwargs["point"].cast<Vec>());
    throw InvalidInput("unknown moment set variant '" + variant + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Minimum-discriminating-information distributionally robust optimization";
    m.attr("__version__") = kVersion;

    py::register_exception<Error>(m, "MdiError");

    py::class_<DiscreteDistribution>(m, "DiscreteDistribution")
        .def(py::init<std::vector<Vec>, Vec>(), py::arg("atoms"), py::arg("weights"))
        .def_static("from_samples", &DiscreteDistribution::from_samples, py::arg("samples"))
        .def_property_readonly("atoms", &DiscreteDistribution::atoms)
        .def_property_readonly("weights", &DiscreteDistribution::weights)
        .def("__len__", &DiscreteDistribution::size)
        .def("reweighted", &DiscreteDistribution::reweighted, py::arg("weights"))
        .def("to_json", [](const DiscreteDistribution& d) { return d.to_json().dump(); })
        .def_static("from_json", [](const std::string& text) {
            return DiscreteDistribution::from_json(nlohmann::json::parse(text));
        });

    m.def("relative_entropy", &relative_entropy, py::arg("q"), py::arg("p"));
    m.def("total_variation", &total_variation, py::arg("q"), py::arg("p"));

    py::class_<FeatureMap>(m, "FeatureMap")
        .def_static("identity", &FeatureMap::identity)
        .def_static("coordinate", &FeatureMap::coordinate, py::arg("indices"))
        .def_static("affine", &FeatureMap::affine, py::arg("matrix"), py::arg("offset"))
        .def_static("tabular", &FeatureMap::tabular, py::arg("atoms"), py::arg("values"))
        .def_static("log_ratio",
                    py::overload_cast<const DiscreteDistribution&, const DiscreteDistribution&>(
                        &FeatureMap::log_ratio),
                    py::arg("q"), py::arg("p"))
        .def("__call__", &FeatureMap::operator(), py::arg("atom"));

    m.def("moment", &moment, py::arg("dist"), py::arg("psi"));

    py::class_<MomentSet>(m, "MomentSet")
        .def(py::init([](const std::string& variant, const py::kwargs& kwargs) {
                 return set_from_kwargs(variant, kwargs);
             }),
             py::arg("variant"))
        .def_static("box", &MomentSet::box, py::arg("lower"), py::arg("upper"))
        .def_static("ball", &MomentSet::ball, py::arg("center"), py::arg("radius"))
        .def_static("singleton", &MomentSet::singleton, py::arg("point"))
        .def("project", &MomentSet::project, py::arg("x"))
        .def("support", &MomentSet::support, py::arg("z"))
        .def("distance", &MomentSet::distance, py::arg("x"))
        .def("contains", &MomentSet::contains, py::arg("x"), py::arg("tol") = 1e-12);

    py::class_<SmoothingSchedule>(m, "SmoothingSchedule")
        .def_readonly("C", &SmoothingSchedule::C)
        .def_readonly("D", &SmoothingSchedule::D)
        .def_readonly("delta", &SmoothingSchedule::delta)
        .def_readonly("eta1", &SmoothingSchedule::eta1)
        .def_readonly("eta2", &SmoothingSchedule::eta2)
        .def_readonly("L_eta", &SmoothingSchedule::L_eta)
        .def_readonly("iterations", &SmoothingSchedule::iterations);

    py::class_<IProjectionSolution>(m, "IProjectionSolution")
        .def_readonly("projection", &IProjectionSolution::projection)
        .def_readonly("dual", &IProjectionSolution::dual)
        .def_readonly("entropy_value", &IProjectionSolution::entropy_value)
        .def_readonly("feasibility_gap", &IProjectionSolution::feasibility_gap)
        .def_readonly("certified_optimality_bound", &IProjectionSolution::certified_optimality_bound)
        .def_readonly("certified_feasibility_bound",
                      &IProjectionSolution::certified_feasibility_bound)
        .def_readonly("iterations_run", &IProjectionSolution::iterations_run);

    m.def(
        "iproject",
        [](const DiscreteDistribution& base, const FeatureMap& psi, const MomentSet& set,
           double eps, std::optional<Vec> slater) {
            IProjectionProblem problem{base, psi, set, std::move(slater), eps};
            return solve(problem);
        },
        py::arg("base"), py::arg("psi"), py::arg("set"), py::arg("eps") = 1e-3,
        py::arg("slater") = std::nullopt);
    m.def("tilting_oracle", &tilting_oracle, py::arg("base"), py::arg("psi"), py::arg("target"));

    py::class_<LossModel>(m, "LossModel")
        .def_static("logistic", &LossModel::logistic, py::arg("theta_lower"), py::arg("theta_upper"))
        .def_static("linear", &LossModel::linear)
        .def_static("newsvendor", &LossModel::newsvendor, py::arg("cost_produce"),
                    py::arg("cost_unmet"), py::arg("theta_lower"), py::arg("theta_upper"))
        .def("value",
             [](const LossModel& l, const Vec& theta, const Vec& atom) {
                 return l.value(theta, atom);
             });

    m.def("risk", &risk, py::arg("theta"), py::arg("dist"), py::arg("loss"));

    py::class_<WorstCaseRisk>(m, "WorstCaseRisk")
        .def_readonly("value", &WorstCaseRisk::value)
        .def_readonly("alpha", &WorstCaseRisk::alpha)
        .def_readonly("z", &WorstCaseRisk::z)
        .def_readonly("converged", &WorstCaseRisk::converged);

    m.def(
        "worst_case_risk",
        [](const Vec& theta, const DiscreteDistribution& nominal, const FeatureMap& psi,
           const MomentSet& set, double radius) {
            DroConfig cfg;
            cfg.radius = radius;
            return worst_case_risk(theta, nominal, psi, set,
                                   ScenarioSet::from_support(nominal, psi), cfg, LossModel::linear());
        },
        py::arg("theta"), py::arg("nominal"), py::arg("psi"), py::arg("set"), py::arg("radius"),
        "Worst-case expectation of the linear loss over the KL ball");
    m.def(
        "worst_case_risk_loss",
        [](const Vec& theta, const DiscreteDistribution& nominal, const FeatureMap& psi,
           const MomentSet& set, double radius, const LossModel& loss) {
            DroConfig cfg;
            cfg.radius = radius;
            return worst_case_risk(theta, nominal, psi, set,
                                   ScenarioSet::from_support(nominal, psi), cfg, loss);
        },
        py::arg("theta"), py::arg("nominal"), py::arg("psi"), py::arg("set"), py::arg("radius"),
        py::arg("loss"));

    py::class_<DroTrainResult>(m, "DroTrainResult")
        .def_readonly("theta", &DroTrainResult::theta)
        .def_readonly("value", &DroTrainResult::value)
        .def_readonly("alpha", &DroTrainResult::alpha)
        .def_readonly("z", &DroTrainResult::z)
        .def_readonly("converged", &DroTrainResult::converged);

    py::class_<PipelineResult>(m, "PipelineResult")
        .def_readonly("projection", &PipelineResult::projection)
        .def_readonly("train", &PipelineResult::train);

    m.def(
        "mdi_dro_pipeline",
        [](const std::vector<Vec>& samples, const FeatureMap& psi, const MomentSet& set,
           const LossModel& loss, double radius, double eps) {
            DroConfig cfg;
            cfg.radius = radius;
            if (eps <= 0.0) eps = default_projection_tolerance(radius);
            return mdi_dro_pipeline(samples, psi, set, loss, cfg, eps);
        },
        py::arg("samples"), py::arg("psi"), py::arg("set"), py::arg("loss"), py::arg("radius"),
        py::arg("eps") = 0.0);

    py::class_<BoundReport>(m, "BoundReport")
        .def_readonly("log_probability_bound", &BoundReport::log_probability_bound)
        .def_readonly("probability_bound", &BoundReport::probability_bound);
    m.def("finite_sample_bound", &finite_sample_bound, py::arg("r"), py::arg("N"), py::arg("card"));
    m.def("ope_bound", &ope_bound, py::arg("r"), py::arg("N"), py::arg("n_states"),
          py::arg("n_actions"));
    m.def("hoeffding_ips_bound", &hoeffding_ips_bound, py::arg("epsilon"), py::arg("N"),
          py::arg("b"));
    m.def("radius_for_confidence", &radius_for_confidence, py::arg("N"), py::arg("card"),
          py::arg("target"));

    py::class_<TabularMdp>(m, "TabularMdp")
        .def_readonly("n_states", &TabularMdp::n_states)
        .def_readonly("n_actions", &TabularMdp::n_actions)
        .def_readonly("kernel", &TabularMdp::kernel)
        .def_readonly("cost", &TabularMdp::cost);
    py::class_<StationaryPolicy>(m, "StationaryPolicy").def_readonly("prob", &StationaryPolicy::prob);
    py::class_<OccupationMeasure>(m, "OccupationMeasure")
        .def_readonly("mu", &OccupationMeasure::mu)
        .def_readonly("mean_cost", &OccupationMeasure::mean_cost);
    py::class_<SaSample>(m, "SaSample")
        .def_readonly("s", &SaSample::s)
        .def_readonly("a", &SaSample::a)
        .def_readonly("cost", &SaSample::cost);
    py::class_<MdiOpeResult>(m, "MdiOpeResult")
        .def_readonly("value", &MdiOpeResult::value)
        .def_readonly("kl_target", &MdiOpeResult::kl_target);

    m.def(
        "inventory_instance",
        [](double lambda, long capacity, double price, double holding, double sales) {
            InventoryParams p;
            p.lambda = lambda;
            p.capacity = capacity;
            p.price = price;
            p.holding = holding;
            p.sales = sales;
            return inventory_instance(p);
        },
        py::arg("lambda_") = 0.2, py::arg("capacity") = 5, py::arg("price") = 0.6,
        py::arg("holding") = 0.3, py::arg("sales") = 1.0);
    m.def("random_policy", &random_policy, py::arg("n_states"), py::arg("n_actions"),
          py::arg("seed"));
    m.def("occupation_measure", &occupation_measure, py::arg("mdp"), py::arg("policy"));
    m.def("long_run_cost", &long_run_cost, py::arg("mdp"), py::arg("policy"));
    m.def("sample_behavioral", &sample_behavioral, py::arg("mdp"), py::arg("policy"), py::arg("N"),
          py::arg("seed"));
    m.def("ips_estimate", &ips_estimate, py::arg("samples"), py::arg("mu_e"), py::arg("mu_b"));
    m.def("capped_ips_estimate", &capped_ips_estimate, py::arg("samples"), py::arg("mu_e"),
          py::arg("mu_b"), py::arg("beta"));
    m.def(
        "mdi_ope_estimate",
        [](const std::vector<SaSample>& samples, const OccupationMeasure& mu_e,
           const OccupationMeasure& mu_b, double radius, double eps, double tau) {
            MdiOpeOptions opts;
            opts.radius = radius;
            opts.projection_tolerance = eps;
            opts.tau = tau;
            return mdi_ope_estimate(samples, mu_e, mu_b, opts);
        },
        py::arg("samples"), py::arg("mu_e"), py::arg("mu_b"), py::arg("radius") = 0.1,
        py::arg("eps") = 0.0, py::arg("tau") = 0.0);

    py::class_<LabeledSample>(m, "LabeledSample")
        .def_readonly("x", &LabeledSample::x)
        .def_readonly("y", &LabeledSample::y)
        .def("atom", &LabeledSample::atom);
    m.def("synth_train", &synth_train, py::arg("m"), py::arg("N"), py::arg("seed"));
    m.def("synth_test", &synth_test, py::arg("m"), py::arg("N"), py::arg("seed"));
    m.def("synth_test_feature_mean", &synth_test_feature_mean, py::arg("m"));
    m.def("covshift_density_ratio", &covshift_density_ratio, py::arg("x"), py::arg("m"));
    m.def(
        "covshift_moment_set",
        [](std::size_t m_dim, double slack, long budget, std::uint64_t seed) {
            const CovshiftMomentSet cov = covshift_moment_set(m_dim, slack, budget, seed);
            return py::make_tuple(cov.set, cov.y_mean, cov.y_std_error);
        },
        py::arg("m"), py::arg("slack"), py::arg("mc_budget"), py::arg("seed"));
    m.def("atoms_of", &atoms_of, py::arg("samples"));
}
