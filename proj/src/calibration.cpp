#include "povmscope/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "povmscope/error.hpp"

namespace povmscope {

FrameConvention default_frame(StandardPovm which) {
  switch (which) {
    case StandardPovm::kMub6: return {4, 0, +1, +1};
    case StandardPovm::kSic4:
    case StandardPovm::kRealMub4: return {0, 1, -1, -1};
  }
  return {};
}

Povm align_frame(const QtRep& qt, const FrameConvention& fc) {
  const auto n = static_cast<int>(qt.t.size());
  if (fc.z_anchor < 0 || fc.z_anchor >= n || fc.xz_anchor < 0 || fc.xz_anchor >= n ||
      fc.z_anchor == fc.xz_anchor) {
    throw Error(ErrorKind::kInvalidAnchor, "align_frame: anchors must be distinct outcome indices");
  }
  if (std::abs(fc.x_sign) != 1 || std::abs(fc.y_sign) != 1) {
    throw Error(ErrorKind::kInvalidInput, "align_frame: signs must be +1 or -1");
  }
  if (numerical_rank(qt.q, 1e-8) < 3) {
    throw Error(ErrorKind::kFrameUnderdetermined,
                "align_frame: Q has rank below 3; the frame cannot be fixed");
  }
  const RealMatrix m = m_factor(qt);
  const double scale = std::sqrt(qt.q.diagonal().cwiseAbs().maxCoeff());
  const double tol = 1e-9 * std::max(scale, 1e-300);

  const Vector3 mz = m.row(fc.z_anchor).transpose();
  if (mz.norm() <= tol) {
    throw Error(ErrorKind::kInvalidAnchor, "align_frame: z anchor has zero Bloch vector");
  }
  const Vector3 ez = mz.normalized();
  const Vector3 mx = m.row(fc.xz_anchor).transpose();
  const Vector3 perp = mx - mx.dot(ez) * ez;
  if (perp.norm() <= 1e-6 * std::max(mx.norm(), tol)) {
    throw Error(ErrorKind::kInvalidAnchor, "align_frame: anchor Bloch vectors are parallel");
  }
  const Vector3 ex = static_cast<double>(fc.x_sign) * perp.normalized();
  Vector3 ey = ez.cross(ex);

  Eigen::Matrix3d frame;
  frame.row(0) = ex.transpose();
  frame.row(1) = ey.transpose();
  frame.row(2) = ez.transpose();
  RealMatrix aligned = m * frame.transpose();  // rows m_k in the new axes
  // A y component counts as nonzero once it exceeds 5% of |m_k|, so shot
  // noise on a nominally planar element cannot decide the reflection.
  for (int k = 0; k < n; ++k) {
    if (std::abs(aligned(k, 1)) > 0.05 * aligned.row(k).norm() && aligned.row(k).norm() > tol) {
      if ((aligned(k, 1) > 0.0 ? 1 : -1) != fc.y_sign) aligned.col(1) *= -1.0;
      break;
    }
  }
  // Pin the anchor conditions exactly.
  aligned(fc.z_anchor, 0) = 0.0;
  aligned(fc.z_anchor, 1) = 0.0;
  aligned(fc.xz_anchor, 1) = 0.0;
  return povm_from_bloch(qt.t, aligned);
}

double povm_element_fidelity(const PovmElement& a, const PovmElement& b) {
  const double ta = a.matrix.trace().real();
  const double tb = b.matrix.trace().real();
  if (!(ta > 0.0) || !(tb > 0.0)) {
    throw Error(ErrorKind::kUndefinedFidelity, "povm_element_fidelity: element has zero trace");
  }
  return std::clamp(uhlmann_trace_squared(a.matrix, b.matrix) / (ta * tb), 0.0, 1.0);
}

StateEstimate state_tomography(const Povm& p, const RealVector& freq, const OptimizerConfig& config) {
  const auto n = static_cast<Eigen::Index>(p.size());
  if (freq.size() != n) {
    throw Error(ErrorKind::kInvalidInput, "state_tomography: frequency vector length mismatch");
  }
  RealMatrix m(n, 3);
  RealVector t(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    m.row(k) = p.elements[static_cast<std::size_t>(k)].m.transpose();
    t(k) = p.elements[static_cast<std::size_t>(k)].t;
  }
  const Svd d = svd(m);
  StateEstimate est;
  est.unique = d.singular_values.size() == 3 && d.singular_values(2) > 1e-8 * d.singular_values(0);
  const RealVector rhs = freq - t;

  // Unconstrained least squares (minimum norm when M is rank deficient). The
  // problem is convex, so a feasible LS solution is the constrained optimum.
  Vector3 r = pinv(m, 1e-8) * rhs;
  if (r.norm() <= 1.0) {
    est.rho = bloch_to_density(BlochVector(r));
    est.diagnostics.converged = true;
    est.diagnostics.final_cost = (m * r - rhs).squaredNorm();
    est.diagnostics.restarts_run = 0;
    return est;
  }

  // Outside the Bloch ball: minimize on the ball, starting from the radial
  // projection of the LS solution.
  ConstrainedProblem problem;
  problem.cost = [&](std::span<const double> x) {
    return (m * Eigen::Map<const Vector3>(x.data()) - rhs).squaredNorm();
  };
  problem.cost_gradient = [&](std::span<const double> x, std::span<double> g) {
    Eigen::Map<Vector3>(g.data()) = 2.0 * m.transpose() * (m * Eigen::Map<const Vector3>(x.data()) - rhs);
  };
  problem.inequality.push_back([](std::span<const double> x) {
    return 1.0 - Eigen::Map<const Vector3>(x.data()).squaredNorm();
  });
  problem.inequality_gradients.push_back([](std::span<const double> x, std::span<double> g) {
    Eigen::Map<Vector3>(g.data()) = -2.0 * Eigen::Map<const Vector3>(x.data());
  });
  if (!est.unique) {
    // Small ridge towards the origin selects the minimum-norm solution.
    const double ridge = 1e-10;
    const auto base = problem.cost;
    const auto base_grad = problem.cost_gradient;
    problem.cost = [=](std::span<const double> x) {
      return base(x) + ridge * Eigen::Map<const Vector3>(x.data()).squaredNorm();
    };
    problem.cost_gradient = [=](std::span<const double> x, std::span<double> g) {
      base_grad(x, g);
      Eigen::Map<Vector3>(g.data()) += 2.0 * ridge * Eigen::Map<const Vector3>(x.data());
    };
  }
  const Vector3 start = 0.99 * r.normalized();
  OptimizerConfig cfg = config;
  cfg.start_spread = 0.05;
  MinimizeResult res = minimize_constrained(
      problem, std::span<const double>(start.data(), 3), cfg);
  if (!res.diagnostics.converged) {
    throw FitError(ErrorKind::kFit, "state_tomography: optimizer did not converge", res.diagnostics);
  }
  Vector3 sol(res.solution[0], res.solution[1], res.solution[2]);
  if (sol.norm() > 1.0) sol.normalize();
  est.rho = bloch_to_density(BlochVector(sol));
  est.diagnostics = res.diagnostics;
  return est;
}

TomographyStudy tomography_study(const Povm& device, const Povm& calibrated, const Povm& reference,
                                 const Povm& ideal, const ProbeSet& states, std::int64_t shots,
                                 int runs, std::uint64_t seed) {
  if (runs < 1) throw Error(ErrorKind::kInvalidInput, "tomography_study: runs must be >= 1");
  if (states.size() == 0) throw Error(ErrorKind::kInvalidInput, "tomography_study: no states");
  const auto m = static_cast<Eigen::Index>(states.size());
  TomographyStudy out{RealMatrix(m, runs), RealMatrix(m, runs), RealMatrix(m, runs),
                      RealMatrix(m, runs), RealMatrix(m, runs)};
  OptimizerConfig cfg;
  cfg.restarts = 2;
  const ProbMatrix exact = born_matrix(device, states);
  for (int run = 0; run < runs; ++run) {
    // shots == 0 reconstructs from the exact probabilities.
    const ProbMatrix freq =
        shots > 0 ? sample_counts(exact, shots,
                                  seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(run + 1)))
                        .frequencies()
                  : exact;
    std::vector<DensityMatrix> cal, ref, ide;
    for (Eigen::Index j = 0; j < m; ++j) {
      const RealVector f = freq.values.col(j);
      cal.push_back(state_tomography(calibrated, f, cfg).rho);
      ref.push_back(state_tomography(reference, f, cfg).rho);
      ide.push_back(state_tomography(ideal, f, cfg).rho);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto i = static_cast<std::size_t>(j);
      out.calibrated_vs_reference(j, run) = state_fidelity(cal[i], ref[i]);
      out.ideal_vs_reference(j, run) = state_fidelity(ide[i], ref[i]);
      out.calibrated_overlap(j, run) = state_fidelity(cal[i], cal[0]);
      out.reference_overlap(j, run) = state_fidelity(ref[i], ref[0]);
      out.ideal_overlap(j, run) = state_fidelity(ide[i], ide[0]);
    }
  }
  return out;
}

}  // namespace povmscope
