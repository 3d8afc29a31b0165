#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "halmarket/figures.hpp"
#include "halmarket/market_sim.hpp"
#include "halmarket/model_core.hpp"
#include "halmarket/scenario.hpp"
#include "halmarket/solver.hpp"
#include "halmarket/sweep.hpp"

namespace py = pybind11;
using namespace halmarket;

PYBIND11_MODULE(_core, m) {
    m.doc() = "relational-contract market model for AI answer services under hallucination risk";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);
    py::register_exception<SingularInputError>(m, "SingularInputError", PyExc_ValueError);
    py::register_exception<InfeasibleEnforcementError>(m, "InfeasibleEnforcementError",
                                                       PyExc_ValueError);

    py::class_<UserType>(m, "UserType")
        .def(py::init<double, double>(), py::arg("value"), py::arg("aversion"))
        .def_readwrite("value", &UserType::value)
        .def_readwrite("aversion", &UserType::aversion);

    py::class_<UserPopulation>(m, "UserPopulation")
        .def(py::init<UserType, UserType, double>(), py::arg("high"), py::arg("low"),
             py::arg("mu"))
        .def_readwrite("high", &UserPopulation::high)
        .def_readwrite("low", &UserPopulation::low)
        .def_readwrite("mu", &UserPopulation::mu)
        .def("value_avg", &UserPopulation::value_avg)
        .def("aversion_avg", &UserPopulation::aversion_avg)
        .def("sensitivity_ratio", &UserPopulation::sensitivity_ratio);

    py::class_<UpstreamModel>(m, "UpstreamModel")
        .def(py::init<std::string, double, double>(), py::arg("id"), py::arg("wholesale_fee"),
             py::arg("baseline_hallucination"))
        .def_readwrite("id", &UpstreamModel::id)
        .def_readwrite("wholesale_fee", &UpstreamModel::wholesale_fee)
        .def_readwrite("baseline_hallucination", &UpstreamModel::baseline_hallucination);

    py::class_<ModelCatalog>(m, "ModelCatalog")
        .def(py::init([](std::vector<UpstreamModel> models) {
                 ModelCatalog c;
                 c.models = std::move(models);
                 return c;
             }),
             py::arg("models"))
        .def_readwrite("models", &ModelCatalog::models);

    py::class_<CostFunction>(m, "CostFunction")
        .def(py::init<double, double>(), py::arg("coefficient") = 0.125,
             py::arg("exponent") = 2.0)
        .def_readwrite("coefficient", &CostFunction::coefficient)
        .def_readwrite("exponent", &CostFunction::exponent)
        .def("__call__", &CostFunction::operator());

    py::class_<MarketParams>(m, "MarketParams")
        .def(py::init<double, double>(), py::arg("delta"), py::arg("beta"))
        .def_readwrite("delta", &MarketParams::delta)
        .def_readwrite("beta", &MarketParams::beta);

    py::class_<Contract>(m, "Contract")
        .def(py::init<UpstreamModel, double, double>(), py::arg("model"), py::arg("price"),
             py::arg("effort"))
        .def_readwrite("model", &Contract::model)
        .def_readwrite("price", &Contract::price)
        .def_readwrite("effort", &Contract::effort);

    py::enum_<BindingType>(m, "BindingType")
        .value("High", BindingType::High)
        .value("Low", BindingType::Low)
        .value("Both", BindingType::Both);

    py::class_<EquilibriumResult>(m, "EquilibriumResult")
        .def_readonly("active", &EquilibriumResult::active)
        .def_readonly("contract", &EquilibriumResult::contract)
        .def_readonly("hallucination_rate", &EquilibriumResult::hallucination_rate)
        .def_readonly("welfare", &EquilibriumResult::welfare)
        .def_readonly("value_high", &EquilibriumResult::value_high)
        .def_readonly("value_low", &EquilibriumResult::value_low)
        .def_readonly("agent_value", &EquilibriumResult::agent_value)
        .def_readonly("rent_factor", &EquilibriumResult::rent_factor)
        .def_readonly("delta_lower", &EquilibriumResult::delta_lower)
        .def_readonly("binding_type", &EquilibriumResult::binding_type)
        .def_readonly("kappa", &EquilibriumResult::kappa)
        .def_readonly("zero_effort_fallback", &EquilibriumResult::zero_effort_fallback)
        .def_readonly("participation_constrained",
                      &EquilibriumResult::participation_constrained);

    py::class_<SolverConfig> solver_config(m, "SolverConfig");
    py::enum_<SolverConfig::TieBreak>(solver_config, "TieBreak")
        .value("LowerFee", SolverConfig::TieBreak::LowerFee)
        .value("FirstInCatalog", SolverConfig::TieBreak::FirstInCatalog);
    solver_config.def(py::init<>())
        .def_readwrite("effort_grid_points", &SolverConfig::effort_grid_points)
        .def_readwrite("refine_tolerance", &SolverConfig::refine_tolerance)
        .def_readwrite("h_floor", &SolverConfig::h_floor)
        .def_readwrite("fd_step", &SolverConfig::fd_step)
        .def_readwrite("model_tiebreak", &SolverConfig::model_tiebreak)
        .def("effort_cap", &SolverConfig::effort_cap, py::arg("model"), py::arg("beta"));

    py::class_<FocReport>(m, "FocReport")
        .def_readonly("effort", &FocReport::effort)
        .def_readonly("lhs_derivative", &FocReport::lhs_derivative)
        .def_readonly("rhs_derivative", &FocReport::rhs_derivative)
        .def_readonly("residual", &FocReport::residual)
        .def_readonly("second_order_ok", &FocReport::second_order_ok)
        .def_readonly("corner", &FocReport::corner);

    py::class_<EffortSolution>(m, "EffortSolution")
        .def_readonly("effort", &EffortSolution::effort)
        .def_readonly("foc", &EffortSolution::foc);

    py::class_<MuScheduleRow>(m, "MuScheduleRow")
        .def_readonly("mu", &MuScheduleRow::mu)
        .def_readonly("result", &MuScheduleRow::result);

    py::class_<IcCheck>(m, "IcCheck")
        .def_readonly("holds", &IcCheck::holds)
        .def_readonly("slack", &IcCheck::slack);

    py::class_<DeltaLower>(m, "DeltaLower")
        .def_readonly("feasible", &DeltaLower::feasible)
        .def_readonly("value", &DeltaLower::value);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("cohort_size", &SimConfig::cohort_size)
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("horizon", &SimConfig::horizon)
        .def_readwrite("deviation_period", &SimConfig::deviation_period)
        .def_readwrite("threads", &SimConfig::threads)
        .def("resolve_horizon", &SimConfig::resolve_horizon, py::arg("delta"));

    py::class_<Estimate>(m, "Estimate")
        .def_readonly("mean", &Estimate::mean)
        .def_readonly("se", &Estimate::se);

    py::class_<SimResult>(m, "SimResult")
        .def_readonly("value_high", &SimResult::value_high)
        .def_readonly("value_low", &SimResult::value_low)
        .def_readonly("agent_value", &SimResult::agent_value)
        .def_readonly("halluc_rate", &SimResult::halluc_rate)
        .def_readonly("mean_relationship_length", &SimResult::mean_relationship_length)
        .def_readonly("relationship_length_se", &SimResult::relationship_length_se)
        .def_readonly("deviation_gain", &SimResult::deviation_gain)
        .def_readonly("cohort_size", &SimResult::cohort_size)
        .def_readonly("horizon", &SimResult::horizon);

    py::class_<DeviationVerdict>(m, "DeviationVerdict")
        .def_readonly("gain", &DeviationVerdict::gain)
        .def_readonly("no_profitable_deviation", &DeviationVerdict::no_profitable_deviation);

    py::class_<StationaryReport>(m, "StationaryReport")
        .def_readonly("mass_constant", &StationaryReport::mass_constant)
        .def_readonly("population", &StationaryReport::population)
        .def_readonly("periods", &StationaryReport::periods)
        .def_readonly("mean_replacement_flow", &StationaryReport::mean_replacement_flow)
        .def_readonly("replacement_flow_se", &StationaryReport::replacement_flow_se);

    py::class_<Scenario>(m, "Scenario")
        .def_readwrite("high", &Scenario::high)
        .def_readwrite("low", &Scenario::low)
        .def_readwrite("mu", &Scenario::mu)
        .def_readwrite("mu_grid", &Scenario::mu_grid)
        .def_readwrite("catalog", &Scenario::catalog)
        .def_readwrite("delta", &Scenario::delta)
        .def_readwrite("delta_list", &Scenario::delta_list)
        .def_readwrite("beta", &Scenario::beta)
        .def_readwrite("beta_list", &Scenario::beta_list)
        .def_readwrite("cost", &Scenario::cost)
        .def_readwrite("solver", &Scenario::solver)
        .def_readwrite("sim", &Scenario::sim)
        .def("population", py::overload_cast<>(&Scenario::population, py::const_))
        .def("population", py::overload_cast<double>(&Scenario::population, py::const_),
             py::arg("mu"))
        .def("market_params", &Scenario::market_params);

    // closed-form layer
    m.def("hallucination_prob", &hallucination_prob, py::arg("model"), py::arg("effort"),
          py::arg("beta"));
    m.def("effort_cost", &effort_cost, py::arg("cost"), py::arg("effort"));
    m.def("per_period_utility", &per_period_utility, py::arg("user"), py::arg("hallucination"),
          py::arg("price"));
    m.def("lifetime_value", &lifetime_value, py::arg("user"), py::arg("hallucination"),
          py::arg("price"), py::arg("delta"));
    m.def("rent_factor", &rent_factor, py::arg("model"), py::arg("effort"), py::arg("params"));
    m.def("enforcement_price", &enforcement_price, py::arg("model"), py::arg("effort"),
          py::arg("cost"), py::arg("params"));
    m.def("continuation_value", &continuation_value, py::arg("contract"), py::arg("cost"),
          py::arg("params"));
    m.def("ic_holds", &ic_holds, py::arg("contract"), py::arg("cost"), py::arg("params"));
    m.def("welfare", &welfare, py::arg("model"), py::arg("effort"), py::arg("pop"),
          py::arg("cost"), py::arg("params"));
    m.def("delta_lower", &delta_lower, py::arg("model"), py::arg("effort"), py::arg("low"),
          py::arg("cost"), py::arg("beta"));
    m.def("binding_threshold", &binding_threshold, py::arg("pop"));
    m.def("binding_type", &binding_type, py::arg("pop"), py::arg("hallucination"));

    // solver layer
    m.def("spot_equilibrium", &spot_equilibrium, py::arg("catalog"), py::arg("pop"));
    m.def("optimal_effort", &optimal_effort, py::arg("model"), py::arg("pop"), py::arg("cost"),
          py::arg("params"), py::arg("cfg") = SolverConfig{});
    m.def("solve_equilibrium", &solve_equilibrium, py::arg("catalog"), py::arg("pop"),
          py::arg("cost"), py::arg("params"), py::arg("cfg") = SolverConfig{});
    m.def("foc_residual", &foc_residual, py::arg("model"), py::arg("effort"), py::arg("pop"),
          py::arg("cost"), py::arg("params"), py::arg("fd_step") = 1e-6);
    m.def("cross_partial", &cross_partial, py::arg("model"), py::arg("effort"), py::arg("pop"),
          py::arg("params"));
    m.def(
        "comparative_static_mu",
        [](const ModelCatalog& catalog, const UserPopulation& pop, const CostFunction& cost,
           const MarketParams& params, const std::vector<double>& mu_grid, const SolverConfig& cfg,
           int threads) {
            return comparative_static_mu(catalog, pop, cost, params, mu_grid, cfg, threads);
        },
        py::arg("catalog"), py::arg("pop"), py::arg("cost"), py::arg("params"),
        py::arg("mu_grid"), py::arg("cfg") = SolverConfig{}, py::arg("threads") = 1);

    // monte carlo layer
    m.def("simulate_relationships", &simulate_relationships, py::arg("contract"), py::arg("pop"),
          py::arg("cost"), py::arg("params"), py::arg("cfg"),
          py::call_guard<py::gil_scoped_release>());
    m.def("deviation_experiment", &deviation_experiment, py::arg("contract"), py::arg("pop"),
          py::arg("cost"), py::arg("params"), py::arg("cfg"),
          py::call_guard<py::gil_scoped_release>());
    m.def("stationary_population_check", &stationary_population_check, py::arg("contract"),
          py::arg("pop"), py::arg("params"), py::arg("cfg"),
          py::call_guard<py::gil_scoped_release>());

    // scenario + sweep io
    m.def("load_scenario", &load_scenario, py::arg("path"));
    m.def("parse_scenario", &parse_scenario, py::arg("text"),
          py::arg("source_name") = "<scenario>");
    m.def("emit_scenario", &emit_scenario, py::arg("scenario"));
    m.def("parse_grid", &parse_grid, py::arg("text"));

#ifdef VERSION_INFO
#define HALMARKET_STR(x) #x
#define HALMARKET_XSTR(x) HALMARKET_STR(x)
    m.attr("__version__") = HALMARKET_XSTR(VERSION_INFO);
#else
    m.attr("__version__") = "dev";
#endif
}
