#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lfgs/plant.hpp"
#include "lfgs/schedule.hpp"
#include "lfgs/sim.hpp"

namespace py = pybind11;
using namespace lfgs;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gain-scheduled leader-follower tracking toolkit";

  py::register_exception<ParseError>(m, "ParseError");
  py::register_exception<ValidationError>(m, "ValidationError");
  py::register_exception<ShapeMismatch>(m, "ShapeMismatch");
  py::register_exception<UnknownNode>(m, "UnknownNode");
  py::register_exception<SingularSystem>(m, "SingularSystem");
  py::register_exception<MissingMultiplier>(m, "MissingMultiplier");
  py::register_exception<KeyMismatch>(m, "KeyMismatch");
  py::register_exception<OutOfRange>(m, "OutOfRange");
  py::register_exception<RateViolated>(m, "RateViolated");
  py::register_exception<NumericalBreakdown>(m, "NumericalBreakdown");
  py::register_exception<NonConvergence>(m, "NonConvergence");
  py::register_exception<NoOverlap>(m, "NoOverlap");

  py::class_<NetworkTopology>(m, "NetworkTopology")
      .def(py::init<>())
      .def_readwrite("num_followers", &NetworkTopology::num_followers)
      .def_readwrite("coupling_edges", &NetworkTopology::coupling_edges)
      .def_readwrite("comm_edges", &NetworkTopology::comm_edges)
      .def_readwrite("pinned", &NetworkTopology::pinned)
      .def("is_pinned", &NetworkTopology::is_pinned)
      .def("leader_to", &NetworkTopology::leader_to)
      .def("to_leader", &NetworkTopology::to_leader)
      .def("coupling_in", &NetworkTopology::coupling_in)
      .def("coupling_out", &NetworkTopology::coupling_out)
      .def("comm_in", &NetworkTopology::comm_in)
      .def("to_leader_nodes", &NetworkTopology::to_leader_nodes);

  py::class_<ValidationReport>(m, "ValidationReport")
      .def_readonly("ok", &ValidationReport::pass)
      .def_readonly("has_spanning_tree", &ValidationReport::has_spanning_tree)
      .def_readonly("issues", &ValidationReport::issues);

  py::class_<ConsensusConstants>(m, "ConsensusConstants")
      .def_readonly("theta", &ConsensusConstants::theta)
      .def_readonly("sigma", &ConsensusConstants::sigma)
      .def_readonly("lambda_hat", &ConsensusConstants::lambda_hat)
      .def_readonly("Q_bar", &ConsensusConstants::Q_bar);

  m.def("validate_topology", &validate_topology);
  m.def("comm_laplacian_plus_pinning", &comm_laplacian_plus_pinning);
  m.def("consensus_constants", &consensus_constants);

  py::class_<LpvPlant>(m, "LpvPlant")
      .def(py::init<>())
      .def_readwrite("n", &LpvPlant::n)
      .def_readwrite("p", &LpvPlant::p)
      .def_readwrite("m", &LpvPlant::m)
      .def_readwrite("A_coeffs", &LpvPlant::A_coeffs)
      .def_readwrite("B1", &LpvPlant::B1)
      .def_readwrite("B2", &LpvPlant::B2)
      .def_readwrite("gamma_lo", &LpvPlant::gamma_lo)
      .def_readwrite("gamma_hi", &LpvPlant::gamma_hi);

  m.def("eval_A", &eval_A);

  py::class_<CouplingShape>(m, "CouplingShape")
      .def(py::init<>())
      .def_readwrite("from_node", &CouplingShape::from)
      .def_readwrite("to_node", &CouplingShape::to)
      .def_readwrite("C", &CouplingShape::C);

  py::class_<RhoProfile> profile(m, "RhoProfile");
  py::enum_<RhoProfile::Kind>(profile, "Kind")
      .value("Constant", RhoProfile::Kind::Constant)
      .value("Cosine", RhoProfile::Kind::Cosine);
  profile.def(py::init<>())
      .def_readwrite("kind", &RhoProfile::kind)
      .def_readwrite("value", &RhoProfile::value)
      .def_readwrite("amplitude", &RhoProfile::amplitude)
      .def_readwrite("frequency", &RhoProfile::frequency)
      .def_readwrite("offset", &RhoProfile::offset)
      .def("eval", &RhoProfile::eval)
      .def("sup_rate", &RhoProfile::sup_rate);

  py::class_<SimParams>(m, "SimParams")
      .def(py::init<>())
      .def_readwrite("T", &SimParams::T)
      .def_readwrite("dt", &SimParams::dt);

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("plant", &Scenario::plant)
      .def_readwrite("topology", &Scenario::topology)
      .def_readwrite("couplings", &Scenario::couplings)
      .def_readwrite("Q", &Scenario::Q)
      .def_readwrite("R", &Scenario::R)
      .def_readwrite("rho_profile", &Scenario::rho_profile)
      .def_readwrite("init", &Scenario::init)
      .def_readwrite("sim", &Scenario::sim);

  m.def("load_scenario", &load_scenario);
  m.def("parse_scenario", &parse_scenario);
  m.def("save_scenario", &save_scenario);
  m.def("scenario_to_json", &scenario_to_json);
  m.def("build_mass_spring_example", &build_mass_spring_example);

  py::class_<DeltaSignal> delta(m, "DeltaSignal");
  py::enum_<DeltaSignal::Kind>(delta, "Kind")
      .value("Zero", DeltaSignal::Kind::Zero)
      .value("Constant", DeltaSignal::Kind::Constant)
      .value("Sinusoid", DeltaSignal::Kind::Sinusoid);
  delta.def(py::init<>())
      .def_readwrite("kind", &DeltaSignal::kind)
      .def_readwrite("M", &DeltaSignal::M)
      .def_readwrite("amplitude", &DeltaSignal::amplitude)
      .def_readwrite("frequency", &DeltaSignal::frequency)
      .def_readwrite("phase", &DeltaSignal::phase)
      .def("eval", &DeltaSignal::eval)
      .def("norm_bound", &DeltaSignal::norm_bound);

  py::class_<UncertaintyRealization>(m, "UncertaintyRealization")
      .def(py::init<>())
      .def_readwrite("name", &UncertaintyRealization::name)
      .def_readwrite("delta", &UncertaintyRealization::delta)
      .def("check", &UncertaintyRealization::check)
      .def("eval", &UncertaintyRealization::eval);

  py::class_<DesignGrid>(m, "DesignGrid")
      .def_readonly("points", &DesignGrid::points)
      .def_readonly("betas", &DesignGrid::betas)
      .def_readonly("coverage", &DesignGrid::coverage)
      .def_readonly("corners", &DesignGrid::corners);

  py::class_<MultiplierSet>(m, "MultiplierSet")
      .def_readonly("nu", &MultiplierSet::nu)
      .def_readonly("mu", &MultiplierSet::mu)
      .def_readonly("pi", &MultiplierSet::pi)
      .def_readonly("nu_from_leader", &MultiplierSet::nu_from_leader)
      .def_readonly("mu_to_leader", &MultiplierSet::mu_to_leader);

  py::class_<LmiSolution>(m, "LmiSolution")
      .def_readonly("rho", &LmiSolution::rho)
      .def_readonly("beta", &LmiSolution::beta)
      .def_readonly("margin", &LmiSolution::margin)
      .def_readonly("iterations", &LmiSolution::iterations)
      .def_readonly("Y", &LmiSolution::Y)
      .def_readonly("mult", &LmiSolution::mult);

  py::enum_<ScheduleMode>(m, "ScheduleMode")
      .value("Interpolated", ScheduleMode::Interpolated)
      .value("Switching", ScheduleMode::Switching);

  py::class_<RateReport>(m, "RateReport")
      .def_readonly("eta", &RateReport::eta)
      .def_readonly("varrho", &RateReport::varrho)
      .def_readonly("q", &RateReport::q);

  py::class_<GainSchedule>(m, "GainSchedule")
      .def_readwrite("mode", &GainSchedule::mode)
      .def_readonly("n", &GainSchedule::n)
      .def_readonly("p", &GainSchedule::p)
      .def_readonly("gamma_lo", &GainSchedule::gamma_lo)
      .def_readonly("gamma_hi", &GainSchedule::gamma_hi)
      .def_readonly("constants", &GainSchedule::constants)
      .def_readonly("R", &GainSchedule::R)
      .def_readonly("B1", &GainSchedule::B1)
      .def_readonly("grid", &GainSchedule::grid)
      .def_readonly("solutions", &GainSchedule::solutions)
      .def("solution_at", &GainSchedule::solution_at)
      .def("Y_of_rho", &GainSchedule::Y_of_rho)
      .def("gain", &GainSchedule::gain);

  py::class_<SolverOptions>(m, "SolverOptions")
      .def(py::init<>())
      .def_readwrite("max_iterations", &SolverOptions::max_iterations)
      .def_readwrite("tol", &SolverOptions::tol)
      .def_readwrite("work_margin_factor", &SolverOptions::work_margin_factor)
      .def_readwrite("use_barrier_fallback", &SolverOptions::use_barrier_fallback);

  m.def("beta_for_point", &beta_for_point);
  m.def("coverage_radius", &coverage_radius);
  m.def("auto_grid", &auto_grid);
  m.def("auto_betas", &auto_betas);
  m.def("interpolate_solution", &interpolate_solution);
  m.def("rate_condition", &rate_condition);
  m.def("synthesize", &synthesize, py::arg("scenario"), py::arg("points"),
        py::arg("betas"), py::arg("mode") = ScheduleMode::Interpolated,
        py::arg("solver_options") = SolverOptions{});
  m.def("schedule_to_json", &schedule_to_json);
  m.def("parse_schedule", &parse_schedule);
  m.def("save_schedule", &save_schedule);
  m.def("load_schedule", &load_schedule);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("n", &Trajectory::n)
      .def_readonly("p", &Trajectory::p)
      .def_readonly("num_followers", &Trajectory::num_followers)
      .def_readonly("t", &Trajectory::t)
      .def_readonly("rho", &Trajectory::rho)
      .def_readonly("states", &Trajectory::states)
      .def_readonly("controls", &Trajectory::controls)
      .def_readonly("cost_running", &Trajectory::cost_running);

  m.def("simulate",
        py::overload_cast<const Scenario&, const GainSchedule&,
                          const UncertaintyRealization&>(&simulate));
  m.def("simulate",
        py::overload_cast<const Scenario&, const GainFn&,
                          const UncertaintyRealization&>(&simulate));
  m.def("tracking_errors", &tracking_errors);
  m.def("state_derivatives",
        py::overload_cast<const Scenario&, const GainSchedule&,
                          const UncertaintyRealization&, const Trajectory&>(
            &state_derivatives));
  m.def("evaluate_cost", &evaluate_cost);
  m.def("running_cost", &running_cost);

  py::class_<CostReport>(m, "CostReport")
      .def_readonly("J", &CostReport::J)
      .def_readonly("bound_scheduled", &CostReport::bound_scheduled)
      .def_readonly("bound_fixed", &CostReport::bound_fixed)
      .def_readonly("rate", &CostReport::rate)
      .def_readonly("rho_dot_sup", &CostReport::rho_dot_sup)
      .def_readonly("horizon", &CostReport::horizon)
      .def_readonly("tail_estimate", &CostReport::tail_estimate);

  m.def("performance_report", &performance_report);

  py::class_<SweepEntry>(m, "SweepEntry")
      .def_readonly("name", &SweepEntry::name)
      .def_readonly("J", &SweepEntry::J);

  m.def("uncertainty_sweep", &uncertainty_sweep);
  m.def("standard_realizations", &standard_realizations, py::arg("scenario"),
        py::arg("spec"), py::arg("seed") = 0);
  m.def("write_trajectory_csv", &write_trajectory_csv);
  m.def("write_cost_report", &write_cost_report);
  m.def("cost_report_to_json", &cost_report_to_json);
}
