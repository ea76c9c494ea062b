#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace povmscope {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Thin singular value decomposition A = U * diag(s) * V^T with s descending.
struct Svd {
  RealMatrix u;
  RealVector singular_values;
  RealMatrix v;
};

Svd svd(const RealMatrix& a);

// Moore-Penrose pseudoinverse. Singular values below rank_tolerance * s_max
// are treated as zero.
RealMatrix pinv(const RealMatrix& a, double rank_tolerance = 1e-12);

// Eigen-decomposition of a real symmetric matrix, eigenvalues descending.
struct SymmetricEigen {
  RealVector values;
  RealMatrix vectors;
};

SymmetricEigen symmetric_eigen(const RealMatrix& a);

// Principal square root of a symmetric PSD matrix. Eigenvalues in
// [-1e-6, 0) are clipped to zero; anything more negative is rejected.
RealMatrix psd_sqrt(const RealMatrix& q);

// Number of eigenvalues above rel_tol * max(|lambda|).
int numerical_rank(const RealMatrix& symmetric, double rel_tol = 1e-9);

void require_finite(const RealMatrix& a, std::string_view what);

}  // namespace povmscope
