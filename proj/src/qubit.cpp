#include "povmscope/qubit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "povmscope/error.hpp"

namespace povmscope {
namespace {

constexpr Complex kI(0.0, 1.0);

Matrix2c make(Complex a, Complex b, Complex c, Complex d) {
  Matrix2c m;
  m << a, b, c, d;
  return m;
}

Matrix2c projector(const Eigen::Vector2cd& ket) {
  const Eigen::Vector2cd k = ket.normalized();
  return k * k.adjoint();
}

double hermiticity_error(const Matrix2c& a) { return (a - a.adjoint()).norm(); }

}  // namespace

const Matrix2c& pauli_x() {
  static const Matrix2c m = make(0.0, 1.0, 1.0, 0.0);
  return m;
}
const Matrix2c& pauli_y() {
  static const Matrix2c m = make(0.0, -kI, kI, 0.0);
  return m;
}
const Matrix2c& pauli_z() {
  static const Matrix2c m = make(1.0, 0.0, 0.0, -1.0);
  return m;
}

BlochVector::BlochVector(const Vector3& r) : r_(r) {
  if (!r.allFinite()) {
    throw Error(ErrorKind::kInvalidInput, "bloch vector: non-finite component");
  }
  if (r.norm() > 1.0 + 1e-9) {
    throw Error(ErrorKind::kNonPhysicalState,
                "bloch vector: |r| = " + std::to_string(r.norm()) + " exceeds 1");
  }
}

DensityMatrix::DensityMatrix(const Matrix2c& rho) : rho_(rho) {
  if (!rho.allFinite()) {
    throw Error(ErrorKind::kInvalidInput, "density matrix: non-finite entry");
  }
  if (hermiticity_error(rho) > 1e-10) {
    throw Error(ErrorKind::kInvalidInput, "density matrix: not Hermitian");
  }
  if (std::abs(rho.trace() - Complex(1.0)) > 1e-10) {
    throw Error(ErrorKind::kInvalidInput, "density matrix: trace differs from 1");
  }
  Eigen::SelfAdjointEigenSolver<Matrix2c> es(rho);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw Error(ErrorKind::kNonPhysicalState, "density matrix: negative eigenvalue");
  }
  rho_ = 0.5 * (rho + rho.adjoint());
}

DensityMatrix bloch_to_density(const BlochVector& r) {
  const Matrix2c rho = 0.5 * (Matrix2c::Identity() + r.x() * pauli_x() + r.y() * pauli_y() +
                              r.z() * pauli_z());
  return DensityMatrix(rho);
}

BlochVector density_to_bloch(const DensityMatrix& rho) {
  const Matrix2c& m = rho.matrix();
  Vector3 r((m * pauli_x()).trace().real(), (m * pauli_y()).trace().real(),
            (m * pauli_z()).trace().real());
  // Rounding can push a pure state a hair past the sphere.
  if (r.norm() > 1.0) r /= r.norm();
  return BlochVector(r);
}

Matrix2c hermitian_sqrt(const Matrix2c& a) {
  Eigen::SelfAdjointEigenSolver<Matrix2c> es(0.5 * (a + a.adjoint()));
  const Eigen::Vector2d root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

double uhlmann_trace_squared(const Matrix2c& a, const Matrix2c& b) {
  // the square root of a rank-one matrix would cost half the digits
  const double dets = std::max(a.determinant().real(), 0.0) * std::max(b.determinant().real(), 0.0);
  return std::max((a * b).trace().real() + 2.0 * std::sqrt(dets), 0.0);
}

double state_fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  return std::clamp(uhlmann_trace_squared(a.matrix(), b.matrix()), 0.0, 1.0);
}

PovmElement PovmElement::from_matrix(const Matrix2c& matrix) {
  if (!matrix.allFinite()) {
    throw Error(ErrorKind::kInvalidInput, "povm element: non-finite entry");
  }
  if (hermiticity_error(matrix) > 1e-10) {
    throw Error(ErrorKind::kInvalidInput, "povm element: not Hermitian");
  }
  PovmElement e;
  e.matrix = matrix;
  e.t = 0.5 * matrix.trace().real();
  e.m = Vector3(0.5 * (matrix * pauli_x()).trace().real(),
                0.5 * (matrix * pauli_y()).trace().real(),
                0.5 * (matrix * pauli_z()).trace().real());
  return e;
}

PovmElement PovmElement::from_bloch(double t, const Vector3& m) {
  PovmElement e;
  e.t = t;
  e.m = m;
  e.matrix = t * Matrix2c::Identity() + m.x() * pauli_x() + m.y() * pauli_y() + m.z() * pauli_z();
  return e;
}

Povm Povm::from_matrices(const std::vector<Matrix2c>& matrices) {
  Povm p;
  p.elements.reserve(matrices.size());
  for (const Matrix2c& m : matrices) p.elements.push_back(PovmElement::from_matrix(m));
  return p;
}

StandardPovm parse_standard_povm(std::string_view name) {
  if (name == "mub6") return StandardPovm::kMub6;
  if (name == "sic4") return StandardPovm::kSic4;
  if (name == "real_mub4") return StandardPovm::kRealMub4;
  throw Error(ErrorKind::kInvalidInput, "unknown standard povm '" + std::string(name) + "'");
}

std::string_view to_string(StandardPovm which) {
  switch (which) {
    case StandardPovm::kMub6: return "mub6";
    case StandardPovm::kSic4: return "sic4";
    case StandardPovm::kRealMub4: return "real_mub4";
  }
  return "unknown";
}

Povm build_standard(StandardPovm which) {
  const double h = std::numbers::sqrt2 / 2.0;
  const Eigen::Vector2cd zero(1.0, 0.0), one(0.0, 1.0);
  const Eigen::Vector2cd plus(h, h), minus(h, -h);
  const Eigen::Vector2cd plus_i(h, h * kI), minus_i(h, -h * kI);
  switch (which) {
    case StandardPovm::kMub6: {
      std::vector<Matrix2c> m;
      for (const auto& ket : {zero, one, plus, minus, plus_i, minus_i}) {
        m.push_back(projector(ket) / 3.0);
      }
      return Povm::from_matrices(m);
    }
    case StandardPovm::kRealMub4: {
      std::vector<Matrix2c> m;
      for (const auto& ket : {zero, one, plus, minus}) m.push_back(projector(ket) / 2.0);
      return Povm::from_matrices(m);
    }
    case StandardPovm::kSic4: {
      // Tetrahedral SIC in the |0>,|1> basis; off-diagonal modulus sqrt(2)/6
      // makes each element (1/2) times a rank-one projector.
      const double c = std::numbers::sqrt2 / 6.0;
      const Complex w = std::polar(1.0, std::numbers::pi / 3.0);
      return Povm::from_matrices({
          make(0.5, 0.0, 0.0, 0.0),
          make(1.0 / 6.0, -c, -c, 1.0 / 3.0),
          make(1.0 / 6.0, c * w, c * std::conj(w), 1.0 / 3.0),
          make(1.0 / 6.0, c * std::conj(w), c * w, 1.0 / 3.0),
      });
    }
  }
  throw Error(ErrorKind::kInvalidInput, "unknown standard povm");
}

PovmDiagnostics validate_povm(const Povm& p, double tolerance) {
  PovmDiagnostics d;
  d.min_eigenvalue = std::numeric_limits<double>::infinity();
  Matrix2c sum = Matrix2c::Zero();
  for (const PovmElement& e : p.elements) {
    d.hermiticity_residual = std::max(d.hermiticity_residual, hermiticity_error(e.matrix));
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(0.5 * (e.matrix + e.matrix.adjoint()));
    d.min_eigenvalue = std::min(d.min_eigenvalue, es.eigenvalues().minCoeff());
    sum += e.matrix;
  }
  if (p.elements.empty()) d.min_eigenvalue = 0.0;
  d.completeness_residual = (sum - Matrix2c::Identity()).norm();
  d.positivity_violated = d.min_eigenvalue < -tolerance;
  return d;
}

QtDiagnostics check_qt(const QtRep& qt) {
  QtDiagnostics d;
  const Eigen::Index n = qt.t.size();
  d.symmetry_residual = (qt.q - qt.q.transpose()).cwiseAbs().maxCoeff();
  const SymmetricEigen e = symmetric_eigen(qt.q);
  d.min_eigenvalue = e.values.minCoeff();
  d.rank = numerical_rank(qt.q, 1e-8);
  d.min_positivity_margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    d.min_positivity_margin = std::min(d.min_positivity_margin, qt.t(k) * qt.t(k) - qt.q(k, k));
  }
  d.weight_sum_residual = std::abs(qt.t.sum() - 1.0);
  d.row_sum_residual = qt.q.rowwise().sum().cwiseAbs().maxCoeff();
  return d;
}

QtRep qt_from_povm(const Povm& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  QtRep qt{RealMatrix(n, n), RealVector(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Matrix2c& a = p.elements[static_cast<std::size_t>(k)].matrix;
    qt.t(k) = 0.5 * a.trace().real();
    for (Eigen::Index l = 0; l <= k; ++l) {
      const Matrix2c& b = p.elements[static_cast<std::size_t>(l)].matrix;
      const double v =
          0.5 * (a * b).trace().real() - 0.25 * a.trace().real() * b.trace().real();
      qt.q(k, l) = v;
      qt.q(l, k) = v;
    }
  }
  return qt;
}

RealMatrix m_factor(const QtRep& qt) {
  const SymmetricEigen e = symmetric_eigen(qt.q);
  const Eigen::Index n = qt.q.rows();
  RealMatrix m = RealMatrix::Zero(n, 3);
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(3, n); ++i) {
    m.col(i) = e.vectors.col(i) * std::sqrt(std::max(e.values(i), 0.0));
  }
  return m;
}

Povm povm_from_bloch(const RealVector& t, const RealMatrix& m) {
  if (m.rows() != t.size() || m.cols() != 3) {
    throw Error(ErrorKind::kInvalidInput, "povm_from_bloch: M must be n x 3");
  }
  Povm p;
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    p.elements.push_back(PovmElement::from_bloch(t(k), m.row(k).transpose()));
  }
  return p;
}

Povm conjugate_povm(const Povm& p, const Matrix2c& u) {
  if (!u.allFinite() || (u * u.adjoint() - Matrix2c::Identity()).norm() > 1e-10) {
    throw Error(ErrorKind::kInvalidInput, "conjugate_povm: matrix is not unitary");
  }
  Povm out;
  for (const PovmElement& e : p.elements) {
    Matrix2c c = u * e.matrix * u.adjoint();
    out.elements.push_back(PovmElement::from_matrix(0.5 * (c + c.adjoint())));
  }
  return out;
}

}  // namespace povmscope
