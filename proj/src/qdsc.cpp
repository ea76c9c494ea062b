#include "povmscope/qdsc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "povmscope/error.hpp"
#include "povmscope/hull.hpp"

namespace povmscope {
namespace {

// Parameter layout: [c (r) | log diag L (r) | strictly lower L, row major].
struct EllipsoidParams {
  int r;

  int size() const { return ellipsoid_parameter_count(r); }

  RealVector center(std::span<const double> x) const {
    return Eigen::Map<const RealVector>(x.data(), r);
  }

  RealMatrix shape(std::span<const double> x) const {
    RealMatrix l = RealMatrix::Zero(r, r);
    for (int i = 0; i < r; ++i) l(i, i) = std::exp(x[static_cast<std::size_t>(r + i)]);
    std::size_t k = static_cast<std::size_t>(2 * r);
    for (int i = 1; i < r; ++i) {
      for (int j = 0; j < i; ++j) l(i, j) = x[k++];
    }
    return l;
  }

  std::vector<double> pack(const RealVector& c, const RealMatrix& l) const {
    std::vector<double> x(static_cast<std::size_t>(size()));
    for (int i = 0; i < r; ++i) {
      x[static_cast<std::size_t>(i)] = c(i);
      x[static_cast<std::size_t>(r + i)] = std::log(l(i, i));
    }
    std::size_t k = static_cast<std::size_t>(2 * r);
    for (int i = 1; i < r; ++i) {
      for (int j = 0; j < i; ++j) x[k++] = l(i, j);
    }
    return x;
  }
};

// Lower-triangular factor with positive diagonal of an SPD matrix, or empty
// when the matrix is not positive definite.
RealMatrix cholesky_factor(const RealMatrix& spd) {
  Eigen::LLT<RealMatrix> llt(0.5 * (spd + spd.transpose()));
  if (llt.info() != Eigen::Success) return {};
  RealMatrix l = llt.matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) return {};
  }
  return l;
}

struct StartShape {
  RealVector center;
  RealMatrix shape;
};

// Algebraic quadric fit x^T A x + b^T x = 1 through the boundary points,
// solved by linear least squares. The origin (the data mean) is interior, so
// the constant term can be normalised away.
std::optional<StartShape> algebraic_start(const RealMatrix& pts) {
  const auto r = static_cast<int>(pts.rows());
  const int quad = r * (r + 1) / 2;
  RealMatrix design(pts.cols(), quad + r);
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    int col = 0;
    for (int a = 0; a < r; ++a) {
      for (int b = a; b < r; ++b) {
        design(j, col++) = (a == b ? 1.0 : 2.0) * pts(a, j) * pts(b, j);
      }
    }
    for (int a = 0; a < r; ++a) design(j, col++) = pts(a, j);
  }
  const RealVector theta =
      design.completeOrthogonalDecomposition().solve(RealVector::Ones(pts.cols()));
  if (!theta.allFinite()) return std::nullopt;
  RealMatrix a(r, r);
  int col = 0;
  for (int i = 0; i < r; ++i) {
    for (int j = i; j < r; ++j) a(i, j) = a(j, i) = theta(col++);
  }
  const RealVector b = theta.tail(r);
  Eigen::LDLT<RealMatrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  const RealVector c = -0.5 * ldlt.solve(b);
  const double scale = 1.0 + c.dot(a * c);
  if (!(scale > 0.0)) return std::nullopt;
  // (x - c)^T (A / scale) (x - c) = 1, so L L^T = scale * A^{-1}.
  const RealMatrix inv = ldlt.solve(RealMatrix::Identity(r, r));
  RealMatrix l = cholesky_factor(scale * inv);
  if (l.size() == 0 || !c.allFinite()) return std::nullopt;
  return StartShape{c, l};
}

// Centroid and r times the covariance: exact for points spread uniformly
// over a sphere.
std::optional<StartShape> moment_start(const RealMatrix& pts) {
  const RealVector c = pts.rowwise().mean();
  const RealMatrix centered = pts.colwise() - c;
  const RealMatrix cov = centered * centered.transpose() / static_cast<double>(pts.cols());
  RealMatrix l = cholesky_factor(static_cast<double>(pts.rows()) * cov);
  if (l.size() == 0) return std::nullopt;
  return StartShape{c, l};
}

}  // namespace

CenteredData center_data(const ProbMatrix& pm) {
  require_finite(pm.values, "center_data");
  if (pm.values.cols() < 2) {
    throw Error(ErrorKind::kInvalidInput, "center_data: need at least two probe states");
  }
  CenteredData out;
  out.mean_p = pm.values.rowwise().mean();
  out.a = pm.values.colwise() - out.mean_p;
  return out;
}

ReducedData reduce(const CenteredData& centered, const RankRule& rule) {
  const Svd d = svd(centered.a);
  ReducedData rd;
  rd.singular_values = d.singular_values;
  rd.mean_p = centered.mean_p;
  // columns of A sum to zero, so at most n - 1 singular values can be nonzero
  const auto available = static_cast<int>(
      std::min<Eigen::Index>(d.singular_values.size(), centered.a.rows() - 1));
  const double s1 = available > 0 ? d.singular_values(0) : 0.0;
  if (!(s1 > 1e-14)) {
    throw Error(ErrorKind::kDegenerateData,
                "reduce: all probe columns coincide; the data carry no range information");
  }
  int rank = 0;
  if (rule.automatic) {
    double best_gap = -1.0;
    const int limit = std::min(3, available);
    for (int r = 1; r <= limit; ++r) {
      // past the last usable singular value the threshold stands in for the noise floor
      const double next = r < available ? d.singular_values(r) : rule.rel_threshold * s1;
      const double gap = d.singular_values(r - 1) / std::max(next, 1e-300);
      if (gap > best_gap) best_gap = gap, rank = r;
    }
  } else {
    for (int i = 0; i < available; ++i) {
      if (d.singular_values(i) > rule.rel_threshold * s1) ++rank;
    }
    rank = std::min(rank, 3);
  }
  if (rank == 0) {
    throw Error(ErrorKind::kDegenerateData, "reduce: no singular value above threshold");
  }
  rd.rank = rank;
  rd.basis = d.u.leftCols(rank);
  rd.reduced = rd.basis.transpose() * centered.a;
  return rd;
}

std::vector<std::size_t> boundary(const ReducedData& rd) {
  return convex_hull(rd.reduced).vertex_indices;
}

int ellipsoid_parameter_count(int rank) { return rank + rank * (rank + 1) / 2; }

EllipsoidFit fit_ellipsoid(const ReducedData& rd, const std::vector<std::size_t>& boundary_set,
                           const OptimizerConfig& config) {
  const int r = rd.rank;
  const EllipsoidParams layout{r};
  FitDiagnostics diag;
  diag.boundary_size = static_cast<int>(boundary_set.size());
  diag.detected_rank = r;
  if (static_cast<int>(boundary_set.size()) < layout.size()) {
    throw FitError(ErrorKind::kFit,
                   "fit_ellipsoid: " + std::to_string(boundary_set.size()) +
                       " boundary points cannot determine " + std::to_string(layout.size()) +
                       " ellipsoid parameters",
                   diag);
  }
  RealMatrix pts(r, static_cast<Eigen::Index>(boundary_set.size()));
  for (std::size_t i = 0; i < boundary_set.size(); ++i) {
    pts.col(static_cast<Eigen::Index>(i)) = rd.reduced.col(static_cast<Eigen::Index>(boundary_set[i]));
  }

  ConstrainedProblem problem;
  problem.cost = [&](std::span<const double> x) {
    const RealVector c = layout.center(x);
    const RealMatrix l = layout.shape(x);
    const RealMatrix y = l.triangularView<Eigen::Lower>().solve(pts.colwise() - c);
    return (1.0 - y.colwise().squaredNorm().array()).square().sum();
  };
  // Positivity of every lifted element: t_k^2 - Q_kk >= 0.
  for (Eigen::Index k = 0; k < rd.basis.rows(); ++k) {
    problem.inequality.push_back([&, k](std::span<const double> x) {
      const double t = rd.mean_p(k) + rd.basis.row(k).dot(layout.center(x));
      const double qkk = (rd.basis.row(k) * layout.shape(x)).squaredNorm();
      return t * t - qkk;
    });
  }

  const std::optional<StartShape> moment = moment_start(pts);
  const std::optional<StartShape> algebraic = algebraic_start(pts);
  if (!moment && !algebraic) {
    throw FitError(ErrorKind::kFit, "fit_ellipsoid: boundary points admit no starting ellipsoid",
                   diag);
  }
  const StartShape base = moment ? *moment : *algebraic;
  const RealVector spread = (pts.colwise() - pts.rowwise().mean()).rowwise().norm() /
                            std::sqrt(static_cast<double>(pts.cols()));
  StartGenerator starts = [&](int index, std::mt19937_64& rng) {
    if (index == 0 && algebraic) return layout.pack(algebraic->center, algebraic->shape);
    if (index <= (algebraic ? 1 : 0)) return layout.pack(base.center, base.shape);
    std::uniform_real_distribution<double> log_factor(std::log(0.5), std::log(2.0));
    std::uniform_real_distribution<double> shift(-0.1, 0.1);
    RealVector c = base.center;
    RealMatrix l = base.shape;
    for (int i = 0; i < r; ++i) c(i) += shift(rng) * spread(i);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j <= i; ++j) l(i, j) *= std::exp(log_factor(rng));
    }
    return layout.pack(c, l);
  };

  MinimizeResult res;
  try {
    res = minimize_constrained(problem, starts, config);
  } catch (const FitError& e) {
    FitDiagnostics d = e.diagnostics();
    d.boundary_size = diag.boundary_size;
    d.detected_rank = r;
    throw FitError(e.kind(), e.what(), d);
  }
  res.diagnostics.boundary_size = diag.boundary_size;
  res.diagnostics.detected_rank = r;
  if (!res.diagnostics.converged) {
    throw FitError(ErrorKind::kFit, "fit_ellipsoid: optimizer did not converge", res.diagnostics);
  }
  EllipsoidFit fit;
  fit.center = layout.center(res.solution);
  fit.shape = layout.shape(res.solution);
  fit.cost = res.diagnostics.final_cost;
  fit.diagnostics = res.diagnostics;
  return fit;
}

QtRep lift_to_qt(const EllipsoidFit& fit, const ReducedData& rd) {
  if (fit.center.size() != rd.rank || fit.shape.rows() != rd.rank || fit.shape.cols() != rd.rank) {
    throw Error(ErrorKind::kInvalidInput, "lift_to_qt: fit does not match the reduced rank");
  }
  QtRep qt;
  qt.t = rd.mean_p + rd.basis * fit.center;
  const RealMatrix m = rd.basis * fit.shape;
  qt.q = m * m.transpose();
  qt.q = 0.5 * (qt.q + qt.q.transpose());
  qt.rank = rd.rank;
  for (Eigen::Index k = 0; k < qt.t.size(); ++k) {
    const double margin = qt.t(k) * qt.t(k) - qt.q(k, k);
    if (margin < -1e-6 || qt.t(k) < -1e-6) {
      throw Error(ErrorKind::kLift, "lift_to_qt: element " + std::to_string(k) +
                                        " violates positivity (t_k^2 - Q_kk = " +
                                        std::to_string(margin) + ")");
    }
  }
  return qt;
}

QdscResult qdsc_run(const ProbMatrix& pm, const QdscConfig& config) {
  QdscResult out;
  std::string stage = "center";
  try {
    const CenteredData centered = center_data(pm);
    stage = "reduce";
    out.reduced = reduce(centered, config.rank_rule);
    stage = "boundary";
    out.boundary_set = boundary(out.reduced);
    stage = "fit";
    out.fit = fit_ellipsoid(out.reduced, out.boundary_set, config.optimizer);
    stage = "lift";
    out.qt = lift_to_qt(out.fit, out.reduced);
  } catch (Error& e) {
    e.set_stage(stage);
    throw;
  }
  out.diagnostics = out.fit.diagnostics;
  return out;
}

}  // namespace povmscope
