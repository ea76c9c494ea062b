#pragma once

#include <cstddef>
#include <vector>

#include "povmscope/optimize.hpp"
#include "povmscope/qubit.hpp"
#include "povmscope/sim.hpp"

namespace povmscope {

struct CenteredData {
  RealMatrix a;        // n x m, p^(j) - mean_p
  RealVector mean_p;
};

CenteredData center_data(const ProbMatrix& pm);

struct RankRule {
  double rel_threshold = 0.05;
  // Pick the rank at the largest ratio s_r / s_{r+1} instead of thresholding.
  bool automatic = false;
};

// Principal-component reduction of the centered data onto its leading
// r <= 3 left singular vectors.
struct ReducedData {
  RealMatrix basis;            // U_r, n x r
  RealVector singular_values;  // all singular values of A, descending
  RealMatrix reduced;          // U_r^T A, r x m
  RealVector mean_p;
  int rank = 0;
};

ReducedData reduce(const CenteredData& centered, const RankRule& rule = {});

// Indices of the reduced points on the boundary of their convex hull.
std::vector<std::size_t> boundary(const ReducedData& rd);

// Ellipsoid {x : (x - c)^T (L L^T)^{-1} (x - c) <= 1} in reduced coordinates.
struct EllipsoidFit {
  RealVector center;
  RealMatrix shape;  // lower triangular, positive diagonal
  double cost = 0.0;
  FitDiagnostics diagnostics;
};

// Number of free parameters of an r-dimensional ellipsoid.
int ellipsoid_parameter_count(int rank);

// Least squares between the fitted boundary and the boundary points, under
// the lifted positivity constraints t_k^2 - Q_kk >= 0.
EllipsoidFit fit_ellipsoid(const ReducedData& rd, const std::vector<std::size_t>& boundary_set,
                           const OptimizerConfig& config);

// t = mean_p + U_r c, M = U_r L, Q = M M^T.
QtRep lift_to_qt(const EllipsoidFit& fit, const ReducedData& rd);

struct QdscConfig {
  OptimizerConfig optimizer;
  RankRule rank_rule;
};

struct QdscResult {
  QtRep qt;
  FitDiagnostics diagnostics;
  ReducedData reduced;
  std::vector<std::size_t> boundary_set;
  EllipsoidFit fit;
};

// center_data -> reduce -> boundary -> fit_ellipsoid -> lift_to_qt. Errors are
// rethrown with the failing stage attached.
QdscResult qdsc_run(const ProbMatrix& pm, const QdscConfig& config = {});

}  // namespace povmscope
