#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hamchain/bc_baseline.hpp"
#include "hamchain/bounds.hpp"
#include "hamchain/chain_policy.hpp"
#include "hamchain/dynamics.hpp"
#include "hamchain/errors.hpp"
#include "hamchain/expert.hpp"
#include "hamchain/harness.hpp"
#include "hamchain/json_io.hpp"

namespace py = pybind11;
using namespace hamchain;

PYBIND11_MODULE(_hamchain, m) {
  m.doc() = "chain policies for lossless Hamiltonian systems";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ExpertFailure>(m, "ExpertFailure");

  py::class_<SystemModel>(m, "SystemModel")
      .def_readonly("id", &SystemModel::id)
      .def_readonly("state_dim", &SystemModel::state_dim)
      .def_readonly("input_dim", &SystemModel::input_dim)
      .def_readonly("state_lo", &SystemModel::state_lo)
      .def_readonly("state_hi", &SystemModel::state_hi)
      .def_readonly("input_lo", &SystemModel::input_lo)
      .def_readonly("input_hi", &SystemModel::input_hi)
      .def_readonly("lipschitz_h", &SystemModel::lipschitz_h)
      .def_readonly("lipschitz_f", &SystemModel::lipschitz_f)
      .def_readonly("bound_f", &SystemModel::bound_f)
      .def("hamiltonian", [](const SystemModel& s, const Eigen::VectorXd& x) {
        return s.hamiltonian(x);
      });

  py::class_<TargetSpec>(m, "TargetSpec")
      .def_readonly("center", &TargetSpec::center)
      .def_readonly("radius", &TargetSpec::radius)
      .def_readonly("h_min", &TargetSpec::h_min)
      .def_readonly("h_max", &TargetSpec::h_max)
      .def_readonly("eps_margin", &TargetSpec::eps_margin);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("times", &Trajectory::times)
      .def_readonly("states", &Trajectory::states)
      .def_readonly("controls", &Trajectory::controls)
      .def("duration", &Trajectory::duration);

  py::class_<Demonstration>(m, "Demonstration")
      .def_readonly("x0", &Demonstration::x0)
      .def_readonly("controls", &Demonstration::controls)
      .def_readonly("duration", &Demonstration::duration)
      .def_readonly("trajectory", &Demonstration::trajectory)
      .def_readonly("terminal_dh", &Demonstration::terminal_dh);

  py::class_<AssignmentSet>(m, "AssignmentSet")
      .def_readonly("v0", &AssignmentSet::v0)
      .def_readonly("system_id", &AssignmentSet::system_id)
      .def("n_triples", [](const AssignmentSet& s) { return s.triples.size(); })
      .def("default_duration", &AssignmentSet::default_duration)
      .def("max_radius", &AssignmentSet::max_radius)
      .def("min_radius", &AssignmentSet::min_radius);

  py::class_<RolloutRecord>(m, "RolloutRecord")
      .def_readonly("reached", &RolloutRecord::reached)
      .def_readonly("failed", &RolloutRecord::failed)
      .def_readonly("reach_time", &RolloutRecord::reach_time)
      .def_readonly("horizon", &RolloutRecord::horizon);

  m.def("builtin_spring_mass",
        [](double mass, double stiffness, double u_abs) {
          return builtin_spring_mass(mass, stiffness, u_abs);
        },
        py::arg("mass") = 1.0, py::arg("stiffness") = 1.0, py::arg("u_abs") = 20.0);
  m.def("builtin_pendulum",
        [](double mass, double length, double gravity, double u_abs) {
          return builtin_pendulum(mass, length, gravity, u_abs);
        },
        py::arg("mass") = 1.0, py::arg("length") = 2.0, py::arg("gravity") = 9.81,
        py::arg("u_abs") = 20.0);

  m.def("make_target", &make_target, py::arg("model"), py::arg("center"), py::arg("radius"),
        py::arg("eps_margin"));
  m.def("make_target_frac", &make_target_frac, py::arg("model"), py::arg("center"),
        py::arg("radius"), py::arg("eps_frac") = 0.2);
  m.def("delta_h",
        [](const SystemModel& model, const TargetSpec& t, const Eigen::VectorXd& x) {
          return delta_h(model, t, x);
        });
  m.def("energy_band_of_ball",
        [](const SystemModel& model, const Eigen::VectorXd& center, double radius) {
          return energy_band_of_ball(model, center, radius);
        });
  m.def("simulate", &simulate, py::arg("model"), py::arg("x0"), py::arg("controls"),
        py::arg("dt"));

  m.def("generate_demonstration",
        [](const SystemModel& model, const TargetSpec& target, const Eigen::VectorXd& x0,
           uint64_t seed, double dt, double max_episode) {
          ExpertConfig cfg;
          cfg.seed = seed;
          cfg.max_episode = max_episode;
          Rng rng(seed_stream(seed, 0xe8be27ull));
          return generate_demonstration(model, target, x0, cfg, rng, dt);
        },
        py::arg("model"), py::arg("target"), py::arg("x0"), py::arg("seed") = 0,
        py::arg("dt") = 1e-3, py::arg("max_episode") = 20.0);

  m.def("certified_radius", &certified_radius, py::arg("dh_start"), py::arg("dh_end"),
        py::arg("t"), py::arg("v0"), py::arg("l_h"), py::arg("lip_l"));

  m.def("build_assignment_set",
        [](const SystemModel& model, const TargetSpec& target,
           const std::vector<Trajectory>& demos, double v0, double dt, double fallback_tau) {
          BuildConfig cfg;
          if (v0 > 0) cfg.v0 = v0;
          cfg.dt = dt;
          cfg.fallback_tau = fallback_tau;
          return build_assignment_set(model, target, demos, cfg);
        },
        py::arg("model"), py::arg("target"), py::arg("demos"), py::arg("v0") = 1e-4,
        py::arg("dt") = 1e-3, py::arg("fallback_tau") = 1e-3);

  m.def("rho", &rho, py::arg("set"), py::arg("x"));
  m.def("select_index", &select_index, py::arg("set"), py::arg("x"));

  m.def("rollout_chain",
        [](const SystemModel& model, const TargetSpec& target, const AssignmentSet& set,
           const Eigen::VectorXd& x0, double horizon, double dt) {
          RolloutConfig cfg;
          cfg.horizon = horizon;
          cfg.dt = dt;
          return rollout_chain(model, target, set, x0, cfg);
        },
        py::arg("model"), py::arg("target"), py::arg("set"), py::arg("x0"),
        py::arg("horizon") = 20.0, py::arg("dt") = 1e-3);

  m.def("save_assignment_set", &save_assignment_set, py::arg("set"), py::arg("path"));
  m.def("load_assignment_set", &load_assignment_set, py::arg("path"));

  m.def("lemma1_bounds", &lemma1_bounds, py::arg("l_h"), py::arg("c_f"), py::arg("eps"));
  m.def("theorem2_radius", &theorem2_radius, py::arg("v_eps_x"), py::arg("v0"),
        py::arg("t_star"), py::arg("l_h"), py::arg("lip_l"));
}
