#pragma once
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "povmscope/error.hpp"
#include "povmscope/qubit.hpp"
#include "povmscope/sim.hpp"

namespace testing_support {
using namespace povmscope;

inline RealMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  RealMatrix a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return a;
}

// n rank-one elements with random directions, renormalized so they sum to I.
inline Povm random_povm(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  for (;;) {
    std::vector<Matrix2c> raw;
    Matrix2c s = Matrix2c::Zero();
    for (int k = 0; k < n; ++k) {
      Eigen::Vector2cd v(Complex(g(rng), g(rng)), Complex(g(rng), g(rng)));
      raw.push_back(v * v.adjoint());
      s += raw.back();
    }
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(s);
    if (es.eigenvalues().minCoeff() < 1e-3 * es.eigenvalues().maxCoeff()) continue;
    const Matrix2c w = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                       es.eigenvectors().adjoint();
    std::vector<Matrix2c> mats;
    for (const auto& r : raw) {
      Matrix2c m = w * r * w;
      mats.push_back(0.5 * (m + m.adjoint()));
    }
    return Povm::from_matrices(mats);
  }
}

inline Eigen::Vector2cd ket_from_bloch(const Vector3& r) {
  const double theta = std::acos(std::clamp(r.z(), -1.0, 1.0));
  const double phi = std::atan2(r.y(), r.x());
  return {Complex(std::cos(theta / 2), 0.0), std::polar(std::sin(theta / 2), phi)};
}

inline Vector3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector3 v(g(rng), g(rng), g(rng));
  return v.normalized();
}

inline double max_abs_diff(const RealMatrix& a, const RealMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace testing_support
