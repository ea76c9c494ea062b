#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "povmscope/error.hpp"

namespace povmscope {

struct OptimizerConfig {
  int restarts = 16;
  int max_iterations = 2000;  // per inner quasi-Newton solve
  double cost_tolerance = 1e-15;
  // Initial weight of the augmented-Lagrangian penalty; grown while the
  // constraint violation stalls.
  double constraint_penalty_weight = 10.0;
  std::uint64_t seed = 0;
  // Half-width of the uniform box used by the default restart generator.
  double start_spread = 1.0;
};

void validate(const OptimizerConfig& config);

struct FitDiagnostics {
  int restarts_run = 0;
  int best_restart_index = -1;
  double final_cost = 0.0;
  int boundary_size = 0;
  bool converged = false;
  double constraint_violation = 0.0;
  int detected_rank = 0;
};

class FitError : public Error {
 public:
  FitError(ErrorKind kind, const std::string& message, FitDiagnostics diagnostics)
      : Error(kind, message), diagnostics_(diagnostics) {}
  const FitDiagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  FitDiagnostics diagnostics_;
};

using ScalarFunction = std::function<double(std::span<const double>)>;
// Writes the gradient of a ScalarFunction at x into the second argument.
using GradientFunction = std::function<void(std::span<const double>, std::span<double>)>;

// Minimize cost(x) subject to g_i(x) >= 0 and h_i(x) = 0.
//
// Gradients are optional. When the cost and every constraint carry one, the
// solver uses them; otherwise it falls back to central differences.
struct ConstrainedProblem {
  ScalarFunction cost;
  std::vector<ScalarFunction> inequality;
  std::vector<ScalarFunction> equality;

  GradientFunction cost_gradient;
  std::vector<GradientFunction> inequality_gradients;
  std::vector<GradientFunction> equality_gradients;

  bool has_gradients() const;
};

// Produces the start point for restart `index`. Restart generators draw from
// the supplied engine only, which keeps the whole schedule a function of the
// seed.
using StartGenerator = std::function<std::vector<double>(int index, std::mt19937_64& rng)>;

// Restart 0 starts at x0; restart i > 0 at x0 + U(-spread, spread) per coordinate.
StartGenerator uniform_restarts(std::vector<double> x0, double spread);

struct MinimizeResult {
  std::vector<double> solution;
  FitDiagnostics diagnostics;
};

// Multistart augmented-Lagrangian BFGS.
// Returns the lowest-cost feasible local minimum (ties broken by restart
// index). Throws FitError(kInfeasible) when no restart reaches a constraint
// violation below 1e-8.
MinimizeResult minimize_constrained(const ConstrainedProblem& problem,
                                    const StartGenerator& starts,
                                    const OptimizerConfig& config);

// Convenience overload using uniform_restarts(x0, config.start_spread).
MinimizeResult minimize_constrained(const ConstrainedProblem& problem,
                                    std::span<const double> x0,
                                    const OptimizerConfig& config);

}  // namespace povmscope
