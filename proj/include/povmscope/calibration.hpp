#pragma once

#include <cstdint>
#include <vector>

#include "povmscope/optimize.hpp"
#include "povmscope/qubit.hpp"
#include "povmscope/sim.hpp"

namespace povmscope {

// Fixes the unitary/anti-unitary gauge of a (Q, t) estimate:
//   m[z_anchor]  points along +z;
//   m[xz_anchor] lies in the x-z plane with x component of sign x_sign;
//   the first outcome with a nonzero y component gets sign y_sign.
struct FrameConvention {
  int z_anchor = 0;
  int xz_anchor = 1;
  int x_sign = -1;
  int y_sign = -1;
};

// Conventions matching the operator tables of the standard devices.
FrameConvention default_frame(StandardPovm which);

Povm align_frame(const QtRep& qt, const FrameConvention& fc = {});

// [Tr sqrt(sqrt(a) b sqrt(a))]^2 / (Tr a Tr b).
double povm_element_fidelity(const PovmElement& a, const PovmElement& b);

struct StateEstimate {
  DensityMatrix rho;
  bool unique = true;
  FitDiagnostics diagnostics;
};

// Least squares state tomography: minimize sum_k [f_k - Tr(rho pi_k)]^2 over
// density matrices. For incomplete measurements the minimum-norm Bloch vector
// is returned and the estimate is flagged non-unique.
StateEstimate state_tomography(const Povm& p, const RealVector& freq,
                               const OptimizerConfig& config = {});

struct TomographyStudy {
  // states x runs
  RealMatrix calibrated_vs_reference;
  RealMatrix ideal_vs_reference;
  RealMatrix calibrated_overlap;  // F(rho_j, rho_0) with the calibrated POVM
  RealMatrix reference_overlap;   // F(rho_j, rho_0) with the reference POVM
  RealMatrix ideal_overlap;
};

// For each run, sample counts of every state on `device`, then reconstruct
// each state with the calibrated, reference and ideal POVM hypotheses. The
// hypotheses must already share one reference frame.
TomographyStudy tomography_study(const Povm& device, const Povm& calibrated, const Povm& reference,
                                 const Povm& ideal, const ProbeSet& states, std::int64_t shots,
                                 int runs, std::uint64_t seed);

}  // namespace povmscope
