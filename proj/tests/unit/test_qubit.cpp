#include <doctest.h>

#include <cmath>
#include <numbers>

#include "povmscope/qubit.hpp"
#include "support.hpp"

using namespace povmscope;
using testing_support::random_povm;

namespace {
bool close(const Matrix2c& a, const Matrix2c& b, double tol) { return (a - b).cwiseAbs().maxCoeff() < tol; }

Matrix2c diag(double a, double b) {
  Matrix2c m = Matrix2c::Zero();
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

void check_qt_invariants(const QtRep& qt, double tol) {
  const auto d = check_qt(qt);
  CHECK(d.min_eigenvalue >= -tol);
  CHECK(d.rank <= 3);
  CHECK(d.min_positivity_margin >= -tol);
  CHECK(d.weight_sum_residual <= tol);
  CHECK(d.row_sum_residual <= tol);
  CHECK(d.symmetry_residual <= tol);
}
}  // namespace

TEST_CASE("bloch_to_density examples") {
  CHECK(close(bloch_to_density(BlochVector(0, 0, 1)).matrix(), diag(1, 0), 1e-15));
  CHECK(close(bloch_to_density(BlochVector(0, 0, 0)).matrix(), diag(0.5, 0.5), 1e-15));
  Matrix2c plus;
  plus << 0.5, 0.5, 0.5, 0.5;
  CHECK(close(bloch_to_density(BlochVector(1, 0, 0)).matrix(), plus, 1e-15));
}

TEST_CASE("density_to_bloch inverts bloch_to_density") {
  for (const Vector3& r : {Vector3(0, 0, 1), Vector3(0, 0, 0), Vector3(1, 0, 0), Vector3(0.3, -0.4, 0.5)}) {
    CHECK((density_to_bloch(bloch_to_density(BlochVector(r))).vector() - r).norm() < 1e-15);
  }
}

TEST_CASE("nonphysical Bloch vectors are rejected") {
  try {
    BlochVector(0, 0, 1.01);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNonPhysicalState);
  }
  CHECK_NOTHROW(BlochVector(0, 0, 1 + 1e-10));
}

TEST_CASE("state_fidelity examples") {
  const auto zero = bloch_to_density(BlochVector(0, 0, 1));
  const auto one = bloch_to_density(BlochVector(0, 0, -1));
  const auto mixed = bloch_to_density(BlochVector(0, 0, 0));
  CHECK(state_fidelity(zero, zero) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(state_fidelity(zero, one) < 1e-12);
  CHECK(state_fidelity(zero, mixed) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("property: pure-state fidelity is the squared overlap and symmetric") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 50; ++i) {
    const Vector3 a = testing_support::random_unit(rng), b = testing_support::random_unit(rng);
    const auto ka = testing_support::ket_from_bloch(a), kb = testing_support::ket_from_bloch(b);
    const double overlap = std::norm(ka.dot(kb));
    const auto ra = bloch_to_density(BlochVector(a)), rb = bloch_to_density(BlochVector(b));
    CHECK(state_fidelity(ra, rb) == doctest::Approx(overlap).epsilon(1e-9));
    const auto mixed_a = bloch_to_density(BlochVector(0.6 * a));
    CHECK(std::abs(state_fidelity(mixed_a, rb) - state_fidelity(rb, mixed_a)) < 1e-9);
  }
}

TEST_CASE("build_standard examples") {
  const Povm sic = build_standard(StandardPovm::kSic4);
  CHECK(close(sic.elements[0].matrix, diag(0.5, 0), 1e-15));
  const Povm mub = build_standard(StandardPovm::kMub6);
  REQUIRE(mub.size() == 6);
  for (const auto& e : mub.elements) CHECK(e.t == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(validate_povm(build_standard(StandardPovm::kRealMub4)).valid());
  CHECK(build_standard(StandardPovm::kRealMub4).size() == 4);
  CHECK(parse_standard_povm("sic4") == StandardPovm::kSic4);
  CHECK(to_string(StandardPovm::kRealMub4) == "real_mub4");
  CHECK_THROWS_AS(parse_standard_povm("mub7"), Error);
}

TEST_CASE("sic4 pairwise overlaps equal 1/12") {
  const Povm sic = build_standard(StandardPovm::kSic4);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t l = k + 1; l < 4; ++l)
      CHECK((sic.elements[k].matrix * sic.elements[l].matrix).trace().real() == doctest::Approx(1.0 / 12).epsilon(1e-14));
}

TEST_CASE("validate_povm examples") {
  const auto ideal = validate_povm(build_standard(StandardPovm::kSic4));
  CHECK(ideal.hermiticity_residual < 1e-12);
  CHECK(ideal.completeness_residual < 1e-12);
  CHECK(ideal.min_eigenvalue > -1e-12);
  CHECK(ideal.valid());

  Povm scaled = build_standard(StandardPovm::kSic4);
  const Matrix2c pi0 = scaled.elements[0].matrix;
  scaled.elements[0] = PovmElement::from_matrix(1.1 * pi0);
  CHECK(validate_povm(scaled).completeness_residual == doctest::Approx(0.1 * pi0.norm()).epsilon(1e-12));

  Povm negative = build_standard(StandardPovm::kSic4);
  negative.elements[0] = PovmElement::from_matrix(diag(0.5, -0.01));
  const auto d = validate_povm(negative);
  CHECK(d.positivity_violated);
  CHECK(d.min_eigenvalue == doctest::Approx(-0.01).epsilon(1e-12));
  CHECK_FALSE(d.valid());
}

TEST_CASE("qt_from_povm oracles") {
  const QtRep sic = qt_from_povm(build_standard(StandardPovm::kSic4));
  for (int k = 0; k < 4; ++k) {
    CHECK(sic.t(k) == doctest::Approx(0.25).epsilon(1e-14));
    for (int l = 0; l < 4; ++l) CHECK(std::abs(sic.q(k, l) - (k == l ? 1.0 / 16 : -1.0 / 48)) < 1e-12);
  }
  const QtRep mub = qt_from_povm(build_standard(StandardPovm::kMub6));
  for (int k = 0; k < 6; ++k) {
    CHECK(std::abs(mub.t(k) - 1.0 / 6) < 1e-12);
    for (int l = 0; l < 6; ++l) {
      const double expected = k == l ? 1.0 / 36 : (k / 2 == l / 2 ? -1.0 / 36 : 0.0);
      CHECK(std::abs(mub.q(k, l) - expected) < 1e-12);
    }
  }
  const QtRep proj = qt_from_povm(Povm::from_matrices({diag(1, 0), diag(0, 1)}));
  CHECK(std::abs(proj.t(0) - 0.5) < 1e-15);
  CHECK(std::abs(proj.q(0, 0) - 0.25) < 1e-15);
  CHECK(std::abs(proj.q(0, 1) + 0.25) < 1e-15);
}

TEST_CASE("conjugate_povm examples") {
  const Povm sic = build_standard(StandardPovm::kSic4);
  const Povm same = conjugate_povm(sic, Matrix2c::Identity());
  for (std::size_t k = 0; k < 4; ++k) CHECK(close(same.elements[k].matrix, sic.elements[k].matrix, 1e-15));

  const QtRep base = qt_from_povm(sic);
  const QtRep flipped = qt_from_povm(conjugate_povm(sic, pauli_x()));
  CHECK(testing_support::max_abs_diff(base.q, flipped.q) < 1e-12);
  CHECK(testing_support::max_abs_diff(base.t, flipped.t) < 1e-12);

  const Povm mub = build_standard(StandardPovm::kMub6);
  const Matrix2c u = rotation_unitary(Vector3::UnitY(), std::numbers::pi / 4);  // exp(-i pi sigma_y / 8)
  const QtRep a = qt_from_povm(mub), b = qt_from_povm(conjugate_povm(mub, u));
  CHECK(testing_support::max_abs_diff(a.q, b.q) < 1e-12);
  CHECK(testing_support::max_abs_diff(a.t, b.t) < 1e-12);

  try {
    conjugate_povm(sic, 2.0 * Matrix2c::Identity());
    FAIL("expected invalid input");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidInput);
  }
}

TEST_CASE("property: gauge invariance of (Q, t) on random POVMs") {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 30; ++rep) {
    const Povm p = random_povm(2 + rep % 5, rng);
    const Matrix2c u = random_unitary(rng);
    const QtRep a = qt_from_povm(p), b = qt_from_povm(conjugate_povm(p, u));
    CHECK(testing_support::max_abs_diff(a.q, b.q) < 1e-12);
    CHECK(testing_support::max_abs_diff(a.t, b.t) < 1e-12);
  }
}

TEST_CASE("property: (Q, t) invariants for valid POVMs") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    const Povm p = random_povm(2 + rep % 6, rng);
    REQUIRE(validate_povm(p).valid(1e-9));
    const QtRep qt = qt_from_povm(p);
    check_qt_invariants(qt, 1e-9);
    CHECK(numerical_rank(qt.q) <= 3);
    for (Eigen::Index k = 0; k < qt.outcomes(); ++k) CHECK(qt.t(k) * qt.t(k) - qt.q(k, k) >= -1e-12);
  }
  for (auto which : {StandardPovm::kMub6, StandardPovm::kSic4, StandardPovm::kRealMub4})
    check_qt_invariants(qt_from_povm(build_standard(which)), 1e-12);
}

TEST_CASE("PovmElement Bloch pair matches the matrix") {
  std::mt19937_64 rng(5);
  for (const auto& e : random_povm(5, rng).elements) {
    const Matrix2c rebuilt = e.t * Matrix2c::Identity() + e.m.x() * pauli_x() + e.m.y() * pauli_y() + e.m.z() * pauli_z();
    CHECK(close(rebuilt, e.matrix, 1e-12));
    CHECK(e.t >= e.m.norm() - 1e-9);
  }
}

TEST_CASE("m_factor rebuilds a POVM with the same (Q, t)") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    const QtRep qt = qt_from_povm(random_povm(4 + rep % 3, rng));
    const RealMatrix m = m_factor(qt);
    CHECK(testing_support::max_abs_diff(m * m.transpose(), qt.q) < 1e-12);
    const QtRep back = qt_from_povm(povm_from_bloch(qt.t, m));
    CHECK(testing_support::max_abs_diff(back.q, qt.q) < 1e-12);
  }
}
