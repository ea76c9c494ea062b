#include "povmscope/sim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "povmscope/error.hpp"

namespace povmscope {
namespace {

constexpr double kPi = std::numbers::pi;

double deg_to_rad(double deg) { return deg * kPi / 180.0; }

Vector3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector3 v;
  do {
    v = Vector3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-12);
  return v.normalized();
}

Vector3 random_perpendicular(const Vector3& r, std::mt19937_64& rng) {
  const Vector3 v = random_unit(rng);
  if (r.norm() < 1e-12) return v;
  const Vector3 dir = r.normalized();
  Vector3 w = v - v.dot(dir) * dir;
  if (w.norm() < 1e-9) w = dir.unitOrthogonal();
  return w.normalized();
}

BlochVector clamp_to_ball(const Vector3& v) {
  return BlochVector(v.norm() > 1.0 ? Vector3(v / v.norm()) : v);
}

}  // namespace

ProbeSet ProbeSet::subset(const std::vector<std::size_t>& indices) const {
  ProbeSet out;
  for (std::size_t i : indices) {
    out.states.push_back(states.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

ProbeSet probe_grid(bool deduplicate) {
  ProbeSet s;
  s.states.emplace_back(0.0, 0.0, 1.0);
  s.labels.emplace_back("pole+z");
  s.states.emplace_back(0.0, 0.0, -1.0);
  s.labels.emplace_back("pole-z");
  for (int k = 1; k <= 6; ++k) {
    for (int l = 1; l <= 8; ++l) {
      if (deduplicate && (l == 4 || l == 8)) continue;
      const double polar = l * kPi / 4.0;
      const double azimuth = k * kPi / 8.0;
      Vector3 r(std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth),
                std::cos(polar));
      r.normalize();
      s.states.emplace_back(r);
      s.labels.push_back("k" + std::to_string(k) + "l" + std::to_string(l));
    }
  }
  return s;
}

ProbeSet icosahedron_states() {
  ProbeSet s;
  const double z = 1.0 / std::sqrt(5.0);
  const double rho = 2.0 / std::sqrt(5.0);
  s.states.emplace_back(0.0, 0.0, 1.0);
  for (int i = 0; i < 5; ++i) {
    const double phi = 2.0 * kPi * i / 5.0;
    s.states.emplace_back(Vector3(rho * std::cos(phi), rho * std::sin(phi), z).normalized());
  }
  for (int i = 0; i < 5; ++i) {
    const double phi = 2.0 * kPi * i / 5.0 + kPi / 5.0;
    s.states.emplace_back(Vector3(rho * std::cos(phi), rho * std::sin(phi), -z).normalized());
  }
  s.states.emplace_back(0.0, 0.0, -1.0);
  for (std::size_t i = 0; i < s.states.size(); ++i) s.labels.push_back("ico" + std::to_string(i));
  return s;
}

ProbeSet random_pure_states(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ProbeSet s;
  for (std::size_t i = 0; i < m; ++i) {
    s.states.emplace_back(random_unit(rng));
    s.labels.push_back("rand" + std::to_string(i));
  }
  return s;
}

void check_prob_matrix(const ProbMatrix& pm, double tolerance) {
  require_finite(pm.values, "probability matrix");
  for (Eigen::Index j = 0; j < pm.values.cols(); ++j) {
    const double sum = pm.values.col(j).sum();
    if (std::abs(sum - 1.0) > tolerance) {
      throw Error(ErrorKind::kInvalidInput,
                  "probability matrix: column " + std::to_string(j) + " sums to " +
                      std::to_string(sum));
    }
    if (pm.values.col(j).minCoeff() < -tolerance || pm.values.col(j).maxCoeff() > 1.0 + tolerance) {
      throw Error(ErrorKind::kInvalidInput,
                  "probability matrix: column " + std::to_string(j) + " leaves [0, 1]");
    }
  }
}

ProbMatrix CountsMatrix::frequencies() const {
  if (shots_per_state <= 0) {
    throw Error(ErrorKind::kInvalidInput, "counts matrix: shots_per_state must be positive");
  }
  ProbMatrix pm{RealMatrix(counts.rows(), counts.cols())};
  for (Eigen::Index j = 0; j < counts.cols(); ++j) {
    const auto total = static_cast<double>(counts.col(j).sum());
    if (total <= 0.0) {
      throw Error(ErrorKind::kInvalidInput, "counts matrix: empty column " + std::to_string(j));
    }
    pm.values.col(j) = counts.col(j).cast<double>() / total;
  }
  return pm;
}

RealVector born_probabilities(const Povm& p, const DensityMatrix& rho) {
  RealVector out(static_cast<Eigen::Index>(p.size()));
  for (std::size_t k = 0; k < p.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = (rho.matrix() * p.elements[k].matrix).trace().real();
  }
  return out;
}

ProbMatrix born_matrix(const Povm& p, const ProbeSet& states) {
  ProbMatrix pm{RealMatrix(static_cast<Eigen::Index>(p.size()),
                           static_cast<Eigen::Index>(states.size()))};
  for (std::size_t j = 0; j < states.size(); ++j) {
    pm.values.col(static_cast<Eigen::Index>(j)) =
        born_probabilities(p, bloch_to_density(states.states[j]));
  }
  return pm;
}

CountsMatrix sample_counts(const ProbMatrix& pm, std::int64_t shots, std::uint64_t seed) {
  if (shots < 1) throw Error(ErrorKind::kInvalidInput, "sample_counts: shots must be >= 1");
  const Eigen::Index n = pm.values.rows();
  CountsMatrix out{CountMatrix::Zero(n, pm.values.cols()), shots};
  for (Eigen::Index j = 0; j < pm.values.cols(); ++j) {
    std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(j));
    // Conditional binomial chain: n_k ~ Bin(remaining, p_k / remaining mass).
    std::int64_t remaining = shots;
    double mass = 1.0;
    for (Eigen::Index k = 0; k < n && remaining > 0; ++k) {
      const double pk = std::max(0.0, pm.values(k, j));
      std::int64_t draw = remaining;
      if (k + 1 < n) {
        const double q = mass > 0.0 ? std::clamp(pk / mass, 0.0, 1.0) : 1.0;
        std::binomial_distribution<std::int64_t> bin(remaining, q);
        draw = bin(rng);
      }
      out.counts(k, j) = draw;
      remaining -= draw;
      mass -= pk;
    }
  }
  return out;
}

Vector3 rotate(const Vector3& v, const Vector3& axis, double angle) {
  const Vector3 k = axis.normalized();
  return v * std::cos(angle) + k.cross(v) * std::sin(angle) + k * k.dot(v) * (1.0 - std::cos(angle));
}

ProbeSet inject_preparation_error(const ProbeSet& states, const ErrorModel& model) {
  if (model.misalignment_deg < 0.0 || model.retardation_frac < 0.0 ||
      model.rotation_jitter_deg < 0.0) {
    throw Error(ErrorKind::kInvalidInput, "error model: magnitudes must be non-negative");
  }
  if (model.is_zero()) return states;
  std::mt19937_64 rng(model.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ProbeSet out = states;
  for (std::size_t j = 0; j < states.size(); ++j) {
    Vector3 r = states.states[j].vector();
    if (model.misalignment_deg > 0.0) {
      const Vector3 axis = random_perpendicular(r, rng);
      r = rotate(r, axis, deg_to_rad(model.misalignment_deg) * normal(rng));
    }
    if (model.retardation_frac > 0.0) {
      const double azimuth = std::atan2(r.y(), r.x());
      const Vector3 axis(std::cos(azimuth), std::sin(azimuth), 0.0);
      r = rotate(r, axis, 2.0 * kPi * model.retardation_frac * normal(rng));
    }
    if (model.rotation_jitter_deg > 0.0) {
      r = rotate(r, Vector3::UnitZ(), 2.0 * deg_to_rad(model.rotation_jitter_deg) * normal(rng));
    }
    out.states[j] = clamp_to_ball(r);
  }
  return out;
}

Matrix2c rotation_unitary(const Vector3& axis, double angle) {
  const Vector3 n = axis.normalized();
  const Matrix2c ns = n.x() * pauli_x() + n.y() * pauli_y() + n.z() * pauli_z();
  return std::cos(angle / 2.0) * Matrix2c::Identity() -
         Complex(0.0, std::sin(angle / 2.0)) * ns;
}

Matrix2c random_unitary(std::mt19937_64& rng) {
  // Haar measure on SU(2): a uniformly random unit quaternion.
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  Matrix2c u;
  u << Complex(q(0), q(1)), Complex(q(2), q(3)), Complex(-q(2), q(3)), Complex(q(0), -q(1));
  return u;
}

}  // namespace povmscope
