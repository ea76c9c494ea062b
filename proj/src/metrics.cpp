#include "povmscope/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "povmscope/error.hpp"

namespace povmscope {
namespace {

void require_shapes(const RealVector& p, const QtRep& qt) {
  if (p.size() != qt.t.size() || qt.q.rows() != qt.t.size() || qt.q.cols() != qt.t.size()) {
    throw Error(ErrorKind::kInvalidInput, "metrics: dimension mismatch between p and (Q, t)");
  }
}

RealMatrix psd_factor(const RealMatrix& q) {
  const RealMatrix sym = 0.5 * (q + q.transpose());
  psd_sqrt(sym);  // shape, finiteness and sign checks
  const SymmetricEigen e = symmetric_eigen(sym);
  const double floor = 1e-13 * std::max(e.values.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::Index keep = 0;
  while (keep < e.values.size() && e.values(keep) > floor) ++keep;
  RealMatrix f = e.vectors.leftCols(keep);
  for (Eigen::Index i = 0; i < keep; ++i) f.col(i) *= std::sqrt(e.values(i));
  return f;
}

}  // namespace

RealMatrix qt_pseudoinverse(const QtRep& qt) {
  const SymmetricEigen e = symmetric_eigen(qt.q);
  const int rank = qt.rank > 0 ? qt.rank : numerical_rank(qt.q, 1e-9);
  const Eigen::Index n = qt.q.rows();
  RealMatrix out = RealMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(rank, n); ++i) {
    if (e.values(i) <= 0.0) break;
    out += e.vectors.col(i) * e.vectors.col(i).transpose() / e.values(i);
  }
  return out;
}

double l_value(const RealVector& p, const QtRep& qt) {
  require_shapes(p, qt);
  const RealVector d = p - qt.t;
  return std::max(0.0, d.dot(qt_pseudoinverse(qt) * d));
}

double affine_residual(const RealVector& p, const QtRep& qt) {
  require_shapes(p, qt);
  const RealVector d = p - qt.t;
  return (d - qt.q * (qt_pseudoinverse(qt) * d)).norm();
}

double fidelity_q(const QtRep& a, const QtRep& b) {
  if (a.q.rows() != b.q.rows()) {
    throw Error(ErrorKind::kInvalidInput, "fidelity_q: dimension mismatch");
  }
  const double ta = a.q.trace();
  const double tb = b.q.trace();
  if (!(ta > 0.0) || !(tb > 0.0)) {
    throw Error(ErrorKind::kUndefinedFidelity, "fidelity_q: Q has zero trace");
  }
  // Tr sqrt(sqrt(A) B sqrt(A)) is the nuclear norm of Fa^T Fb for A = Fa Fa^T,
  // B = Fb Fb^T; dropping rounding-level eigenvalues keeps full precision
  // for the rank-deficient matrices met here.
  const RealMatrix fa = psd_factor(a.q), fb = psd_factor(b.q);
  const double tr = svd(fa.transpose() * fb).singular_values.sum();
  return std::clamp(tr * tr / (ta * tb), 0.0, 1.0);
}

double fidelity_t(const QtRep& a, const QtRep& b) {
  if (a.t.size() != b.t.size()) {
    throw Error(ErrorKind::kInvalidInput, "fidelity_t: dimension mismatch");
  }
  double overlap = 0.0;
  for (Eigen::Index k = 0; k < a.t.size(); ++k) {
    if (a.t(k) < -1e-12 || b.t(k) < -1e-12) {
      throw Error(ErrorKind::kInvalidInput, "fidelity_t: negative weight");
    }
    overlap += std::sqrt(std::max(a.t(k), 0.0) * std::max(b.t(k), 0.0));
  }
  return std::clamp(overlap * overlap, 0.0, 1.0);
}

ViolationStats violation_stats(const RealMatrix& samples, int bootstrap_resamples,
                               std::uint64_t seed) {
  if (samples.size() == 0) {
    throw Error(ErrorKind::kInvalidInput, "violation_stats: no samples");
  }
  const Eigen::Index states = samples.rows();
  const Eigen::Index runs = samples.cols();
  ViolationStats s;
  s.state_mean = samples.rowwise().mean();
  s.state_std = RealVector::Zero(states);
  s.state_sigma_hat = RealVector::Zero(states);
  s.mean = samples.mean();
  const double total = static_cast<double>(samples.size());
  s.std = total > 1 ? std::sqrt((samples.array() - s.mean).square().sum() / (total - 1)) : 0.0;
  s.mean_excess = (samples.array() - 1.0).max(0.0).mean();
  s.fraction_exceeding_one = static_cast<double>((samples.array() > 1.0).count()) / total;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, runs - 1);
  Eigen::Index over_band = 0;
  for (Eigen::Index j = 0; j < states; ++j) {
    if (runs > 1) {
      const auto row = samples.row(j).array();
      s.state_std(j) = std::sqrt((row - s.state_mean(j)).square().sum() / double(runs - 1));
      double sum = 0.0, sum_sq = 0.0;
      for (int b = 0; b < bootstrap_resamples; ++b) {
        double m = 0.0;
        for (Eigen::Index r = 0; r < runs; ++r) m += samples(j, pick(rng));
        m /= double(runs);
        sum += m;
        sum_sq += m * m;
      }
      const double mean_b = sum / bootstrap_resamples;
      s.state_sigma_hat(j) = std::sqrt(std::max(0.0, sum_sq / bootstrap_resamples - mean_b * mean_b));
    }
    if (s.state_mean(j) > 1.0 + 3.0 * s.state_sigma_hat(j)) ++over_band;
  }
  s.fraction_exceeding_band = static_cast<double>(over_band) / double(states);
  return s;
}

}  // namespace povmscope
