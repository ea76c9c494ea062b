#pragma once

#include "povmscope/optimize.hpp"
#include "povmscope/qubit.hpp"
#include "povmscope/sim.hpp"

namespace povmscope {

struct TomographyProblem {
  ProbMatrix data;
  ProbeSet states;
  double regularization = 0.0;  // ridge weight on sum_k ||pi_k||_F^2
};

struct QdtResult {
  Povm povm;
  FitDiagnostics diagnostics;
  // False when the probe states do not span the qubit operator space; the
  // returned POVM is then the least-norm member of the solution family.
  bool unique = true;
};

// Constrained least squares over POVMs: minimize
// sum_{j,k} [p_k^(j) - Tr(rho_j pi_k)]^2 with pi_k >= 0 and sum_k pi_k = I.
// Each element is parameterized as B_k B_k^dagger with B_k triangular.
QdtResult qdt_fit(const TomographyProblem& problem, const OptimizerConfig& config);

QtRep qdt_to_qt(const Povm& p);

}  // namespace povmscope
