#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string_view>
#include <vector>

#include "povmscope/linalg.hpp"

namespace povmscope {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Vector3 = Eigen::Vector3d;

const Matrix2c& pauli_x();
const Matrix2c& pauli_y();
const Matrix2c& pauli_z();

// Real 3-vector r with |r| <= 1 (tolerance 1e-9).
class BlochVector {
 public:
  BlochVector() = default;
  explicit BlochVector(const Vector3& r);
  BlochVector(double x, double y, double z) : BlochVector(Vector3(x, y, z)) {}

  const Vector3& vector() const noexcept { return r_; }
  double x() const noexcept { return r_.x(); }
  double y() const noexcept { return r_.y(); }
  double z() const noexcept { return r_.z(); }
  double norm() const noexcept { return r_.norm(); }

 private:
  Vector3 r_ = Vector3::Zero();
};

// Hermitian, unit-trace, PSD 2x2 matrix.
class DensityMatrix {
 public:
  DensityMatrix() : rho_(Matrix2c::Identity() * 0.5) {}
  explicit DensityMatrix(const Matrix2c& rho);

  const Matrix2c& matrix() const noexcept { return rho_; }

 private:
  Matrix2c rho_;
};

DensityMatrix bloch_to_density(const BlochVector& r);
BlochVector density_to_bloch(const DensityMatrix& rho);

// Principal square root of a Hermitian PSD 2x2 matrix (negative rounding
// eigenvalues are clipped).
Matrix2c hermitian_sqrt(const Matrix2c& a);

// [Tr sqrt(sqrt(a) b sqrt(a))]^2 for Hermitian PSD 2x2 a, b, evaluated as
// Tr(ab) + 2 sqrt(det a det b); negative determinants from rounding count as 0.
double uhlmann_trace_squared(const Matrix2c& a, const Matrix2c& b);

// Uhlmann fidelity [Tr sqrt(sqrt(a) b sqrt(a))]^2.
double state_fidelity(const DensityMatrix& a, const DensityMatrix& b);

// One POVM element pi = t I + m . sigma.
struct PovmElement {
  Matrix2c matrix;
  double t = 0.0;
  Vector3 m = Vector3::Zero();

  static PovmElement from_matrix(const Matrix2c& matrix);
  static PovmElement from_bloch(double t, const Vector3& m);
};

struct Povm {
  std::vector<PovmElement> elements;

  std::size_t size() const noexcept { return elements.size(); }
  static Povm from_matrices(const std::vector<Matrix2c>& matrices);
};

enum class StandardPovm { kMub6, kSic4, kRealMub4 };

StandardPovm parse_standard_povm(std::string_view name);
std::string_view to_string(StandardPovm which);

Povm build_standard(StandardPovm which);

struct PovmDiagnostics {
  double hermiticity_residual = 0.0;  // max_k ||pi_k - pi_k^dagger||_F
  double min_eigenvalue = 0.0;        // min over elements
  double completeness_residual = 0.0; // ||sum_k pi_k - I||_F
  bool positivity_violated = false;

  bool valid(double tolerance = 1e-9) const {
    return hermiticity_residual <= tolerance && !positivity_violated &&
           completeness_residual <= tolerance;
  }
};

PovmDiagnostics validate_povm(const Povm& p, double tolerance = 1e-9);

// Gauge-invariant description of a POVM: Q (n x n, PSD, rank <= 3) and t.
struct QtRep {
  RealMatrix q;
  RealVector t;
  // Rank used when inverting Q; 0 means "take the numerical rank".
  int rank = 0;

  Eigen::Index outcomes() const noexcept { return t.size(); }
};

struct QtDiagnostics {
  double min_eigenvalue = 0.0;
  int rank = 0;
  double min_positivity_margin = 0.0;  // min_k t_k^2 - Q_kk
  double weight_sum_residual = 0.0;    // |sum_k t_k - 1|
  double row_sum_residual = 0.0;       // ||Q 1||_inf
  double symmetry_residual = 0.0;

  bool valid(double tolerance = 1e-9) const {
    return min_eigenvalue >= -tolerance && rank <= 3 && min_positivity_margin >= -tolerance &&
           weight_sum_residual <= tolerance && row_sum_residual <= tolerance &&
           symmetry_residual <= tolerance;
  }
};

QtDiagnostics check_qt(const QtRep& qt);

QtRep qt_from_povm(const Povm& p);

// n x 3 factor M with Q = M M^T, built from the top three eigenpairs of Q.
// Gauge dependent: any M O with O orthogonal is equally valid.
RealMatrix m_factor(const QtRep& qt);

// pi_k = t_k I + m_k . sigma with m_k the k-th row of M (n x 3).
Povm povm_from_bloch(const RealVector& t, const RealMatrix& m);

Povm conjugate_povm(const Povm& p, const Matrix2c& u);

}  // namespace povmscope
