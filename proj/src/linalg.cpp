#include "povmscope/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "povmscope/error.hpp"

namespace povmscope {

void require_finite(const RealMatrix& a, std::string_view what) {
  if (a.size() == 0) {
    throw Error(ErrorKind::kInvalidInput, std::string(what) + ": empty matrix");
  }
  if (!a.allFinite()) {
    throw Error(ErrorKind::kInvalidInput, std::string(what) + ": non-finite entry");
  }
}

Svd svd(const RealMatrix& a) {
  require_finite(a, "svd");
  Eigen::JacobiSVD<RealMatrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  // JacobiSVD already orders singular values in decreasing order.
  return Svd{solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

RealMatrix pinv(const RealMatrix& a, double rank_tolerance) {
  require_finite(a, "pinv");
  const Svd d = svd(a);
  const double s_max = d.singular_values.size() > 0 ? d.singular_values(0) : 0.0;
  RealVector inv_s = RealVector::Zero(d.singular_values.size());
  for (Eigen::Index i = 0; i < d.singular_values.size(); ++i) {
    const double s = d.singular_values(i);
    if (s_max > 0.0 && s > rank_tolerance * s_max) inv_s(i) = 1.0 / s;
  }
  return d.v * inv_s.asDiagonal() * d.u.transpose();
}

SymmetricEigen symmetric_eigen(const RealMatrix& a) {
  require_finite(a, "symmetric_eigen");
  if (a.rows() != a.cols()) {
    throw Error(ErrorKind::kInvalidInput, "symmetric_eigen: matrix is not square");
  }
  const RealMatrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(sym);
  // Reverse to descending order.
  const Eigen::Index n = sym.rows();
  SymmetricEigen out{RealVector(n), RealMatrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = solver.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return out;
}

RealMatrix psd_sqrt(const RealMatrix& q) {
  require_finite(q, "psd_sqrt");
  if (q.rows() != q.cols()) {
    throw Error(ErrorKind::kInvalidInput, "psd_sqrt: matrix is not square");
  }
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw Error(ErrorKind::kInvalidInput, "psd_sqrt: matrix is not symmetric");
  }
  const SymmetricEigen e = symmetric_eigen(q);
  RealVector root(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    const double lambda = e.values(i);
    if (lambda < -1e-6) {
      throw Error(ErrorKind::kNotPsd,
                  "psd_sqrt: eigenvalue " + std::to_string(lambda) + " is negative");
    }
    root(i) = std::sqrt(std::max(lambda, 0.0));
  }
  RealMatrix s = e.vectors * root.asDiagonal() * e.vectors.transpose();
  return 0.5 * (s + s.transpose());
}

int numerical_rank(const RealMatrix& symmetric, double rel_tol) {
  const SymmetricEigen e = symmetric_eigen(symmetric);
  const double scale = e.values.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    if (e.values(i) > rel_tol * scale) ++rank;
  }
  return rank;
}

}  // namespace povmscope
