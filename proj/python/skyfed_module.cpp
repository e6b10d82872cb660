#include "skyfed/bound.hpp"
#include "skyfed/channel.hpp"
#include "skyfed/cli.hpp"
#include "skyfed/error.hpp"
#include "skyfed/experiments.hpp"
#include "skyfed/placement.hpp"
#include "skyfed/scenario.hpp"
#include "skyfed/trajectory.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace skyfed;

namespace {

Trajectory make_trajectory(const std::vector<Vec2>& waypoints, int dwell, bool closed) {
    Trajectory t;
    t.waypoints = waypoints;
    t.dwell = dwell;
    t.closed = closed;
    return t;
}

}  // namespace

PYBIND11_MODULE(_skyfed, m) {
    m.doc() = "Drone trajectory planning and federated-learning simulation";

    py::register_exception<Error>(m, "SkyfedError");
    py::register_exception<ValidationError>(m, "ValidationError", m.attr("SkyfedError"));
    py::register_exception<ParseError>(m, "ParseError", m.attr("SkyfedError"));
    py::register_exception<InfeasibleError>(m, "InfeasibleError", m.attr("SkyfedError"));
    py::register_exception<IoError>(m, "IoError", m.attr("SkyfedError"));

    py::class_<Scenario>(m, "Scenario")
        .def_readwrite("horizon", &Scenario::horizon)
        .def_readwrite("dwell", &Scenario::dwell)
        .def_readwrite("v_max", &Scenario::v_max)
        .def_readwrite("seed", &Scenario::seed)
        .def_property_readonly("num_devices", [](const Scenario& s) { return s.devices.size(); })
        .def("device_positions", &Scenario::device_positions, py::arg("round"))
        .def("set_per_override", [](Scenario& s, std::size_t i, double e) { s.devices.at(i).per_override = e; })
        .def("set_noise_var", [](Scenario& s, std::size_t i, double v) { s.devices.at(i).noise_var = v; })
        .def("validate", [](const Scenario& s) { validate(s); })
        .def("__str__", &serialize_scenario);

    m.def("parse_scenario", py::overload_cast<std::string_view, std::optional<std::uint64_t>>(&parse_scenario),
          py::arg("text"), py::arg("seed") = std::nullopt);
    m.def("load_scenario", &load_scenario, py::arg("path"), py::arg("seed") = std::nullopt);
    m.def("serialize_scenario", &serialize_scenario);

    m.def(
        "packet_error_rate",
        [](const Scenario& s, std::size_t device, const Vec2& drone, int round) {
            return effective_per(drone, s.device_positions(round).at(device), s.devices.at(device), s.radio);
        },
        py::arg("scenario"), py::arg("device"), py::arg("drone"), py::arg("round") = 1);

    m.def(
        "round_terms",
        [](const Scenario& s, const std::vector<double>& per) {
            const auto t = round_terms(per, s.devices, s.constants);
            return py::dict(py::arg("phi") = t.phi, py::arg("j") = t.j, py::arg("k") = t.k,
                            py::arg("contraction_ok") = t.contraction_ok);
        },
        py::arg("scenario"), py::arg("per"));

    m.def(
        "optimize_placement",
        [](const Scenario& s, int round) {
            const auto r = optimize_placement(PlacementProblem::from(s, round), PlacementOptions::from(s.solver));
            return py::dict(py::arg("position") = r.position, py::arg("objective") = r.objective,
                            py::arg("iterations") = r.iterations, py::arg("converged") = r.converged,
                            py::arg("trace") = r.trace);
        },
        py::arg("scenario"), py::arg("round") = 1);

    m.def(
        "plan_trajectory",
        [](const Scenario& s, const std::string& solver) {
            const auto p = plan_trajectory(s, parse_solver(solver));
            return py::dict(py::arg("waypoints") = p.trajectory.waypoints, py::arg("dwell") = p.trajectory.dwell,
                            py::arg("closed") = p.trajectory.closed, py::arg("atl") = p.atl,
                            py::arg("contraction_ok") = p.contraction_ok);
        },
        py::arg("scenario"), py::arg("solver") = "horizon");

    m.def(
        "atl",
        [](const Scenario& s, const std::vector<Vec2>& waypoints, int dwell) {
            return atl(make_trajectory(waypoints, dwell, false), s).value;
        },
        py::arg("scenario"), py::arg("waypoints"), py::arg("dwell"));

    m.def(
        "train",
        [](const Scenario& s, const std::vector<Vec2>& waypoints, int dwell, std::uint64_t replicate) {
            const auto r = train(s, make_trajectory(waypoints, dwell, false), replicate);
            std::vector<double> loss, gap;
            for (const auto& rec : r.sim.rounds) {
                loss.push_back(rec.loss);
                gap.push_back(rec.gap);
            }
            return py::dict(py::arg("loss") = loss, py::arg("gap") = gap, py::arg("initial_loss") = r.sim.initial_loss,
                            py::arg("target") = r.target, py::arg("rounds_to_target") = r.rounds_to_target);
        },
        py::arg("scenario"), py::arg("waypoints"), py::arg("dwell"), py::arg("replicate") = 0);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            std::vector<std::string> argv{"skyfed"};
            argv.insert(argv.end(), args.begin(), args.end());
            const int code = run_cli(argv, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
