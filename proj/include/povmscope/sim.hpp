#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "povmscope/qubit.hpp"

namespace povmscope {

struct ProbeSet {
  std::vector<BlochVector> states;
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return states.size(); }
  ProbeSet subset(const std::vector<std::size_t>& indices) const;
};

// The 50-state ensemble: both poles, then for k = 1..6 and l = 1..8
// r = (sin(l pi/4) cos(k pi/8), sin(l pi/4) sin(k pi/8), cos(l pi/4)).
// The grid repeats the poles at l = 4 and l = 8; deduplicate drops the repeats.
ProbeSet probe_grid(bool deduplicate = false);

// Twelve icosahedron vertices with two of them on the +z and -z axes.
ProbeSet icosahedron_states();

// m Haar-random pure states.
ProbeSet random_pure_states(std::size_t m, std::uint64_t seed);

// Outcome statistics: n outcomes x m preparations, one distribution per column.
struct ProbMatrix {
  RealMatrix values;

  Eigen::Index outcomes() const noexcept { return values.rows(); }
  Eigen::Index states() const noexcept { return values.cols(); }
};

// Throws kInvalidInput unless every column is a probability vector within tol.
void check_prob_matrix(const ProbMatrix& pm, double tolerance = 1e-9);

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct CountsMatrix {
  CountMatrix counts;
  std::int64_t shots_per_state = 0;

  ProbMatrix frequencies() const;
};

RealVector born_probabilities(const Povm& p, const DensityMatrix& rho);
ProbMatrix born_matrix(const Povm& p, const ProbeSet& states);

// Multinomial draw per column. Column j uses its own engine seeded from
// seed ^ j, so the result does not depend on evaluation order.
CountsMatrix sample_counts(const ProbMatrix& pm, std::int64_t shots, std::uint64_t seed);

struct ErrorModel {
  double misalignment_deg = 0.0;
  double retardation_frac = 0.0;
  double rotation_jitter_deg = 0.0;
  std::uint64_t seed = 0;

  bool is_zero() const noexcept {
    return misalignment_deg == 0.0 && retardation_frac == 0.0 && rotation_jitter_deg == 0.0;
  }
};

// Rotates every Bloch vector by three small random rotations:
//   misalignment: about a random axis perpendicular to r, angle ~ N(0, misalignment_deg);
//   retardation:  about the equatorial axis at the state's azimuth,
//                 angle ~ N(0, 2 pi retardation_frac);
//   jitter:       about z, angle ~ N(0, 2 rotation_jitter_deg) (a plate turned by
//                 theta turns the Bloch vector by 2 theta).
ProbeSet inject_preparation_error(const ProbeSet& states, const ErrorModel& model);

// exp(-i angle/2 axis . sigma)
Matrix2c rotation_unitary(const Vector3& axis, double angle);
Matrix2c random_unitary(std::mt19937_64& rng);

// Rotation of a Bloch vector about a unit axis (Rodrigues).
Vector3 rotate(const Vector3& v, const Vector3& axis, double angle);

}  // namespace povmscope
