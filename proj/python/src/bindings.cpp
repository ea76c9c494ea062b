#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "povmscope/calibration.hpp"
#include "povmscope/metrics.hpp"
#include "povmscope/qdsc.hpp"
#include "povmscope/qdt.hpp"

namespace py = pybind11;
using namespace povmscope;

namespace {

using Elements = std::vector<Matrix2c>;

Elements to_elements(const Povm& p) {
  Elements out;
  for (const auto& e : p.elements) out.push_back(e.matrix);
  return out;
}

QtRep qt_of(const RealMatrix& q, const RealVector& t, int rank = 0) { return QtRep{q, t, rank}; }

py::tuple qt_tuple(const QtRep& qt) { return py::make_tuple(qt.q, qt.t); }

// states: m x 3 Bloch vectors
ProbeSet probes_of(const RealMatrix& states) {
  if (states.cols() != 3) throw Error(ErrorKind::kInvalidInput, "states must have shape (m, 3)");
  ProbeSet s;
  for (Eigen::Index j = 0; j < states.rows(); ++j) {
    s.states.emplace_back(Vector3(states.row(j).transpose()));
    s.labels.push_back("s" + std::to_string(j));
  }
  return s;
}

RealMatrix states_of(const ProbeSet& s) {
  RealMatrix out(static_cast<Eigen::Index>(s.size()), 3);
  for (std::size_t j = 0; j < s.size(); ++j) out.row(static_cast<Eigen::Index>(j)) = s.states[j].vector().transpose();
  return out;
}

ProbMatrix prob_of(const RealMatrix& p) { return ProbMatrix{p}; }

py::dict diagnostics_dict(const FitDiagnostics& d) {
  py::dict out;
  out["restarts_run"] = d.restarts_run;
  out["best_restart_index"] = d.best_restart_index;
  out["final_cost"] = d.final_cost;
  out["boundary_size"] = d.boundary_size;
  out["converged"] = d.converged;
  out["constraint_violation"] = d.constraint_violation;
  out["detected_rank"] = d.detected_rank;
  return out;
}

OptimizerConfig optimizer_of(int restarts, std::uint64_t seed) {
  OptimizerConfig c;
  c.restarts = restarts;
  c.seed = seed;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Qubit detector self-characterization and tomography";

  static py::exception<Error> error(m, "PovmscopeError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error;
      py::object inst = exc(e.what());
      inst.attr("kind") = std::string(to_string(e.kind()));
      inst.attr("stage") = e.stage();
      PyErr_SetObject(exc.ptr(), inst.ptr());
    }
  });

  m.def("build_standard", [](const std::string& name) { return to_elements(build_standard(parse_standard_povm(name))); },
        py::arg("name"), "Elements of mub6, sic4 or real_mub4 as 2x2 complex arrays.");

  m.def("qt_from_povm", [](const Elements& e) { return qt_tuple(qt_from_povm(Povm::from_matrices(e))); },
        py::arg("elements"), "(Q, t) of a POVM.");

  m.def("probe_grid", [](bool dedup) { return states_of(probe_grid(dedup)); }, py::arg("deduplicate") = false);
  m.def("icosahedron_states", [] { return states_of(icosahedron_states()); });
  m.def("random_pure_states", [](std::size_t n, std::uint64_t seed) { return states_of(random_pure_states(n, seed)); },
        py::arg("m"), py::arg("seed"));

  m.def("born_matrix",
        [](const Elements& e, const RealMatrix& states) {
          return born_matrix(Povm::from_matrices(e), probes_of(states)).values;
        },
        py::arg("elements"), py::arg("states"), "Outcome probabilities, shape (n, m).");

  m.def("sample_counts",
        [](const RealMatrix& p, std::int64_t shots, std::uint64_t seed) {
          return sample_counts(prob_of(p), shots, seed).counts;
        },
        py::arg("probabilities"), py::arg("shots"), py::arg("seed"));

  m.def("qdsc",
        [](const RealMatrix& p, int restarts, std::uint64_t seed, double rank_threshold, bool automatic_rank) {
          QdscConfig c;
          c.optimizer = optimizer_of(restarts, seed);
          c.rank_rule.rel_threshold = rank_threshold;
          c.rank_rule.automatic = automatic_rank;
          const QdscResult r = qdsc_run(prob_of(p), c);
          py::dict out;
          out["Q"] = r.qt.q;
          out["t"] = r.qt.t;
          out["rank"] = r.qt.rank;
          out["singular_values"] = r.reduced.singular_values;
          out["boundary"] = r.boundary_set;
          out["diagnostics"] = diagnostics_dict(r.diagnostics);
          return out;
        },
        py::arg("probabilities"), py::arg("restarts") = 16, py::arg("seed") = 0, py::arg("rank_threshold") = 0.05,
        py::arg("automatic_rank") = false, "Self-characterize (Q, t) from frequencies of shape (n, m).");

  m.def("qdt",
        [](const RealMatrix& p, const RealMatrix& states, int restarts, std::uint64_t seed) {
          const QdtResult r = qdt_fit({prob_of(p), probes_of(states), 0.0}, optimizer_of(restarts, seed));
          py::dict out;
          out["elements"] = to_elements(r.povm);
          out["unique"] = r.unique;
          out["diagnostics"] = diagnostics_dict(r.diagnostics);
          return out;
        },
        py::arg("probabilities"), py::arg("states"), py::arg("restarts") = 16, py::arg("seed") = 0,
        "Detector tomography with known probe states.");

  m.def("fidelity_q", [](const RealMatrix& qa, const RealMatrix& qb) {
    const RealVector dummy = RealVector::Zero(qa.rows());
    return fidelity_q(qt_of(qa, dummy), qt_of(qb, RealVector::Zero(qb.rows())));
  }, py::arg("q_a"), py::arg("q_b"));
  m.def("fidelity_t", [](const RealVector& ta, const RealVector& tb) {
    return fidelity_t(qt_of(RealMatrix::Zero(ta.size(), ta.size()), ta),
                      qt_of(RealMatrix::Zero(tb.size(), tb.size()), tb));
  }, py::arg("t_a"), py::arg("t_b"));
  m.def("l_value", [](const RealVector& p, const RealMatrix& q, const RealVector& t) { return l_value(p, qt_of(q, t)); },
        py::arg("p"), py::arg("Q"), py::arg("t"));
  m.def("affine_residual",
        [](const RealVector& p, const RealMatrix& q, const RealVector& t) { return affine_residual(p, qt_of(q, t)); },
        py::arg("p"), py::arg("Q"), py::arg("t"));

  m.def("align_frame",
        [](const RealMatrix& q, const RealVector& t, int z_anchor, int xz_anchor, int x_sign, int y_sign) {
          return to_elements(align_frame(qt_of(q, t), FrameConvention{z_anchor, xz_anchor, x_sign, y_sign}));
        },
        py::arg("Q"), py::arg("t"), py::arg("z_anchor") = 0, py::arg("xz_anchor") = 1, py::arg("x_sign") = -1,
        py::arg("y_sign") = -1, "Concrete POVM elements in a fixed frame.");
  m.def("element_fidelity",
        [](const Matrix2c& a, const Matrix2c& b) {
          return povm_element_fidelity(PovmElement::from_matrix(a), PovmElement::from_matrix(b));
        },
        py::arg("a"), py::arg("b"));
  m.def("state_tomography",
        [](const Elements& e, const RealVector& freq) {
          const StateEstimate s = state_tomography(Povm::from_matrices(e), freq);
          return py::make_tuple(Matrix2c(s.rho.matrix()), s.unique);
        },
        py::arg("elements"), py::arg("frequencies"), "Least-squares density matrix and uniqueness flag.");
}
