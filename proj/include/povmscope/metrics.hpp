#pragma once

#include <cstdint>
#include <vector>

#include "povmscope/qubit.hpp"

namespace povmscope {

// Q^+ restricted to the rank recorded in qt (or, when qt.rank is 0, the
// numerical rank of Q).
RealMatrix qt_pseudoinverse(const QtRep& qt);

// (p - t)^T Q^+ (p - t); at most 1 for every attainable distribution.
double l_value(const RealVector& p, const QtRep& qt);

// ||(I - Q Q^+)(p - t)||: distance of p from the affine hull of the range.
double affine_residual(const RealVector& p, const QtRep& qt);

// [Tr sqrt(sqrt(A) B sqrt(A))]^2 / (Tr A Tr B) on the Q matrices.
double fidelity_q(const QtRep& a, const QtRep& b);

// (sum_k sqrt(a_k b_k))^2 on the weight vectors.
double fidelity_t(const QtRep& a, const QtRep& b);

struct ViolationStats {
  RealVector state_mean;        // mean L per state over runs
  RealVector state_std;         // sample std per state over runs
  RealVector state_sigma_hat;   // bootstrap standard error of state_mean
  double mean = 0.0;
  double std = 0.0;
  double mean_excess = 0.0;     // mean of max(L - 1, 0) over all samples
  double fraction_exceeding_one = 0.0;
  double fraction_exceeding_band = 0.0;  // states with mean > 1 + 3 sigma_hat
};

// samples: states x runs.
ViolationStats violation_stats(const RealMatrix& samples, int bootstrap_resamples = 1000,
                               std::uint64_t seed = 0);

}  // namespace povmscope
