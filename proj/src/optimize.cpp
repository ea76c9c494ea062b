#include "povmscope/optimize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace povmscope {
namespace {

using Vec = Eigen::VectorXd;

constexpr double kFeasibilityTolerance = 1e-8;
constexpr double kInnerFeasibility = 1e-11;
constexpr int kMaxOuterIterations = 60;
constexpr double kMaxPenalty = 1e14;

double eval(const ScalarFunction& f, const Vec& x) {
  return f(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Vec eval_gradient(const GradientFunction& g, const Vec& x) {
  Vec out = Vec::Zero(x.size());
  g(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
    std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

double violation(const ConstrainedProblem& p, const Vec& x) {
  double v = 0.0;
  for (const auto& g : p.inequality) v = std::max(v, std::max(0.0, -eval(g, x)));
  for (const auto& h : p.equality) v = std::max(v, std::abs(eval(h, x)));
  return v;
}

// PHR augmented Lagrangian for g(x) >= 0 and h(x) = 0.
struct Lagrangian {
  const ConstrainedProblem& problem;
  std::vector<double> ineq_mult;
  std::vector<double> eq_mult;
  double penalty;

  bool analytic() const { return problem.has_gradients(); }

  double operator()(const Vec& x) const {
    double value = eval(problem.cost, x);
    for (std::size_t i = 0; i < problem.inequality.size(); ++i) {
      const double g = eval(problem.inequality[i], x);
      const double shifted = std::max(0.0, ineq_mult[i] - penalty * g);
      value += (shifted * shifted - ineq_mult[i] * ineq_mult[i]) / (2.0 * penalty);
    }
    for (std::size_t i = 0; i < problem.equality.size(); ++i) {
      const double h = eval(problem.equality[i], x);
      value += -eq_mult[i] * h + 0.5 * penalty * h * h;
    }
    return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
  }

  Vec gradient(const Vec& x) const {
    Vec grad = eval_gradient(problem.cost_gradient, x);
    for (std::size_t i = 0; i < problem.inequality.size(); ++i) {
      const double g = eval(problem.inequality[i], x);
      const double shifted = std::max(0.0, ineq_mult[i] - penalty * g);
      if (shifted > 0.0) grad -= shifted * eval_gradient(problem.inequality_gradients[i], x);
    }
    for (std::size_t i = 0; i < problem.equality.size(); ++i) {
      const double h = eval(problem.equality[i], x);
      grad += (penalty * h - eq_mult[i]) * eval_gradient(problem.equality_gradients[i], x);
    }
    return grad;
  }

  void update_multipliers(const Vec& x) {
    for (std::size_t i = 0; i < problem.inequality.size(); ++i) {
      ineq_mult[i] = std::max(0.0, ineq_mult[i] - penalty * eval(problem.inequality[i], x));
    }
    for (std::size_t i = 0; i < problem.equality.size(); ++i) {
      eq_mult[i] -= penalty * eval(problem.equality[i], x);
    }
  }
};

template <typename F>
Vec objective_gradient(const F& f, const Vec& x) {
  if constexpr (requires { f.gradient(x); }) {
    if (f.analytic()) return f.gradient(x);
  }
  Vec grad(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

struct InnerResult {
  Vec x;
  double value;
  bool converged;
};

// BFGS with Armijo backtracking.
template <typename F>
InnerResult bfgs(const F& f, Vec x, const OptimizerConfig& config) {
  const Eigen::Index n = x.size();
  double fx = f(x);
  Vec g = objective_gradient(f, x);
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  int stalls = 0;
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, std::abs(fx))) {
      return {x, fx, true};
    }
    Vec d = -h_inv * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      h_inv.setIdentity();
      d = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    Vec x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * d;
      f_new = f(x_new);
      if (f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // The quasi-Newton model is exhausted at this precision.
      return {x, fx, true};
    }
    const Vec g_new = objective_gradient(f, x_new);
    const Vec s = x_new - x;
    const Vec y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      if (!scaled) {
        h_inv *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      h_inv = (eye - rho * s * y.transpose()) * h_inv * (eye - rho * y * s.transpose()) +
              rho * s * s.transpose();
    }
    const double decrease = fx - f_new;
    x = x_new;
    fx = f_new;
    g = g_new;
    if (decrease <= config.cost_tolerance * std::max(1.0, std::abs(fx))) {
      if (++stalls >= 3) return {x, fx, true};
    } else {
      stalls = 0;
    }
  }
  return {x, fx, false};
}

struct LocalResult {
  Vec x;
  double cost;
  double violation;
  bool converged;
};

LocalResult solve_local(const ConstrainedProblem& problem, Vec x, const OptimizerConfig& config) {
  const bool constrained = !problem.inequality.empty() || !problem.equality.empty();
  if (!constrained) {
    const Lagrangian f{problem, {}, {}, config.constraint_penalty_weight};
    InnerResult r = bfgs(f, std::move(x), config);
    return {r.x, eval(problem.cost, r.x), 0.0, r.converged};
  }
  Lagrangian lag{problem, std::vector<double>(problem.inequality.size(), 0.0),
                 std::vector<double>(problem.equality.size(), 0.0),
                 config.constraint_penalty_weight};
  double prev_violation = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int outer = 0; outer < kMaxOuterIterations; ++outer) {
    InnerResult r = bfgs(lag, x, config);
    const double step = (r.x - x).lpNorm<Eigen::Infinity>();
    x = r.x;
    const double v = violation(problem, x);
    if (v <= kInnerFeasibility && r.converged && step <= 1e-10 * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
      converged = true;
      break;
    }
    lag.update_multipliers(x);
    if (v > 0.25 * prev_violation) lag.penalty = std::min(lag.penalty * 10.0, kMaxPenalty);
    prev_violation = v;
  }
  const double v = violation(problem, x);
  return {x, eval(problem.cost, x), v, converged || v <= kFeasibilityTolerance};
}

}  // namespace

bool ConstrainedProblem::has_gradients() const {
  if (!cost_gradient) return false;
  if (inequality_gradients.size() != inequality.size()) return false;
  if (equality_gradients.size() != equality.size()) return false;
  for (const auto& g : inequality_gradients) {
    if (!g) return false;
  }
  for (const auto& g : equality_gradients) {
    if (!g) return false;
  }
  return true;
}

void validate(const OptimizerConfig& config) {
  if (config.restarts < 1) {
    throw Error(ErrorKind::kInvalidInput, "optimizer: restarts must be >= 1");
  }
  if (config.max_iterations < 1) {
    throw Error(ErrorKind::kInvalidInput, "optimizer: max_iterations must be >= 1");
  }
  if (!(config.cost_tolerance > 0.0) || !(config.constraint_penalty_weight > 0.0)) {
    throw Error(ErrorKind::kInvalidInput, "optimizer: tolerances must be positive");
  }
}

StartGenerator uniform_restarts(std::vector<double> x0, double spread) {
  return [x0 = std::move(x0), spread](int index, std::mt19937_64& rng) {
    std::vector<double> x = x0;
    if (index == 0) return x;
    std::uniform_real_distribution<double> u(-spread, spread);
    for (double& xi : x) xi += u(rng);
    return x;
  };
}

MinimizeResult minimize_constrained(const ConstrainedProblem& problem,
                                    const StartGenerator& starts,
                                    const OptimizerConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  // Draw every start first so the schedule depends on the seed alone.
  std::vector<Vec> start_points;
  start_points.reserve(static_cast<std::size_t>(config.restarts));
  for (int i = 0; i < config.restarts; ++i) {
    const std::vector<double> s = starts(i, rng);
    start_points.emplace_back(Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size())));
  }

  FitDiagnostics diag;
  diag.restarts_run = config.restarts;
  LocalResult best{Vec(), std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity(), false};
  double least_violation = std::numeric_limits<double>::infinity();
  for (int i = 0; i < config.restarts; ++i) {
    const Vec& x0 = start_points[static_cast<std::size_t>(i)];
    if (!std::isfinite(eval(problem.cost, x0))) continue;
    LocalResult r = solve_local(problem, x0, config);
    least_violation = std::min(least_violation, r.violation);
    if (r.violation >= kFeasibilityTolerance || !std::isfinite(r.cost)) continue;
    if (diag.best_restart_index < 0 || r.cost < best.cost - 1e-12 * std::max(1.0, std::abs(best.cost))) {
      best = std::move(r);
      diag.best_restart_index = i;
    }
  }
  if (diag.best_restart_index < 0) {
    diag.constraint_violation = least_violation;
    throw FitError(ErrorKind::kInfeasible,
                   "minimize_constrained: no feasible point found across " +
                       std::to_string(config.restarts) + " restarts (least violation " +
                       std::to_string(least_violation) + ")",
                   diag);
  }
  diag.final_cost = best.cost;
  diag.constraint_violation = best.violation;
  diag.converged = best.converged;
  return {std::vector<double>(best.x.data(), best.x.data() + best.x.size()), diag};
}

MinimizeResult minimize_constrained(const ConstrainedProblem& problem,
                                    std::span<const double> x0,
                                    const OptimizerConfig& config) {
  return minimize_constrained(problem,
                              uniform_restarts(std::vector<double>(x0.begin(), x0.end()),
                                               config.start_spread),
                              config);
}

}  // namespace povmscope
