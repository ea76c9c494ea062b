#include "povmscope/qdt.hpp"

#include <cmath>
#include <string>

#include "povmscope/error.hpp"

namespace povmscope {
namespace {

// pi = B B^dagger with either B = [[a, 0], [b + ic, d]] (pivot on the upper
// diagonal entry) or B = [[d, b + ic], [0, a]] (pivot on the lower one).
// Parameters per element: (a, b, c, d). The pivot is fixed from the start
// point so the factor stays well conditioned for elements close to |1><1|.
struct ElementFactor {
  bool lower_pivot;

  // Returns (t, m_x, m_y, m_z) and fills the Jacobian d(t, m)/d(a, b, c, d).
  Eigen::Vector4d bloch(const double* x, Eigen::Matrix4d* jac) const {
    const double a = x[0], b = x[1], c = x[2], d = x[3];
    const double rest = b * b + c * c + d * d;
    // Entries of pi: big = pivot diagonal (a^2), small = other diagonal.
    const double p_pivot = a * a;
    const double sign = lower_pivot ? -1.0 : 1.0;
    Eigen::Vector4d out;
    out(0) = 0.5 * (p_pivot + rest);
    out(1) = a * b;
    out(2) = sign * a * c;
    // m_z = (pi_00 - pi_11) / 2
    out(3) = lower_pivot ? 0.5 * (rest - p_pivot) : 0.5 * (p_pivot - rest);
    if (jac != nullptr) {
      Eigen::Matrix4d& j = *jac;
      j.row(0) << a, b, c, d;
      j.row(1) << b, a, 0.0, 0.0;
      j.row(2) << sign * c, 0.0, sign * a, 0.0;
      if (lower_pivot) {
        j.row(3) << -a, b, c, d;
      } else {
        j.row(3) << a, -b, -c, -d;
      }
    }
    return out;
  }
};

Eigen::Vector4d factor_from_element(const PovmElement& e, bool lower_pivot) {
  // Project onto the PSD cone first.
  Eigen::SelfAdjointEigenSolver<Matrix2c> es(0.5 * (e.matrix + e.matrix.adjoint()));
  const Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0);
  const Matrix2c psd = es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  const double pivot = lower_pivot ? psd(1, 1).real() : psd(0, 0).real();
  const double other = lower_pivot ? psd(0, 0).real() : psd(1, 1).real();
  const double a = std::sqrt(std::max(pivot, 0.0));
  double b = 0.0, c = 0.0;
  if (a > 1e-12) {
    // m_x = a b, m_y = +-a c with m_x - i m_y = pi_01.
    const double mx = psd(0, 1).real();
    const double my = -psd(0, 1).imag();
    b = mx / a;
    c = (lower_pivot ? -my : my) / a;
  }
  const double d = std::sqrt(std::max(other - b * b - c * c, 0.0));
  return {a, b, c, d};
}

}  // namespace

QdtResult qdt_fit(const TomographyProblem& tp, const OptimizerConfig& config) {
  const Eigen::Index n = tp.data.values.rows();
  const Eigen::Index m = tp.data.values.cols();
  if (m != static_cast<Eigen::Index>(tp.states.size())) {
    throw Error(ErrorKind::kInvalidInput,
                "qdt_fit: " + std::to_string(m) + " data columns but " +
                    std::to_string(tp.states.size()) + " probe states");
  }
  if (n < 2) throw Error(ErrorKind::kInvalidInput, "qdt_fit: need at least two outcomes");
  if (tp.regularization < 0.0) {
    throw Error(ErrorKind::kInvalidInput, "qdt_fit: regularization must be non-negative");
  }
  require_finite(tp.data.values, "qdt_fit");

  // Design matrix rows (1, r_x, r_y, r_z): p_k^(j) = t_k + m_k . r_j.
  RealMatrix design(m, 4);
  for (Eigen::Index j = 0; j < m; ++j) {
    design(j, 0) = 1.0;
    design.block<1, 3>(j, 1) = tp.states.states[static_cast<std::size_t>(j)].vector().transpose();
  }
  const Svd ds = svd(design);
  QdtResult out;
  out.unique = ds.singular_values.size() == 4 && ds.singular_values(3) > 1e-9 * ds.singular_values(0);

  // Linear inversion start, projected to PSD and factored.
  const RealMatrix coeffs = pinv(design, 1e-9) * tp.data.values.transpose();  // 4 x n
  std::vector<ElementFactor> factors;
  std::vector<double> x0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const PovmElement lin = PovmElement::from_bloch(coeffs(0, k), coeffs.block<3, 1>(1, k));
    const bool lower = lin.matrix(1, 1).real() > lin.matrix(0, 0).real();
    factors.push_back({lower});
    const Eigen::Vector4d f = factor_from_element(lin, lower);
    x0.insert(x0.end(), f.data(), f.data() + 4);
  }

  const RealMatrix data_t = tp.data.values.transpose();  // m x n
  const double reg = tp.regularization;
  auto bloch_all = [&](std::span<const double> x, std::vector<Eigen::Matrix4d>* jacs) {
    RealMatrix tm(4, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::Matrix4d* jac = jacs ? &(*jacs)[static_cast<std::size_t>(k)] : nullptr;
      tm.col(k) = factors[static_cast<std::size_t>(k)].bloch(x.data() + 4 * k, jac);
    }
    return tm;
  };

  ConstrainedProblem problem;
  problem.cost = [&](std::span<const double> x) {
    const RealMatrix tm = bloch_all(x, nullptr);
    double cost = (design * tm - data_t).squaredNorm();
    if (reg > 0.0) {
      // ||pi||_F^2 = 2 (t^2 + |m|^2)
      cost += reg * 2.0 * tm.squaredNorm();
    }
    return cost;
  };
  problem.cost_gradient = [&](std::span<const double> x, std::span<double> g) {
    std::vector<Eigen::Matrix4d> jacs(static_cast<std::size_t>(n));
    const RealMatrix tm = bloch_all(x, &jacs);
    RealMatrix d_tm = 2.0 * design.transpose() * (design * tm - data_t);
    if (reg > 0.0) d_tm += reg * 4.0 * tm;
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Vector4d gk = jacs[static_cast<std::size_t>(k)].transpose() * d_tm.col(k);
      for (int i = 0; i < 4; ++i) g[static_cast<std::size_t>(4 * k + i)] = gk(i);
    }
  };
  // Completeness: sum_k t_k = 1 and sum_k m_k = 0.
  for (int comp = 0; comp < 4; ++comp) {
    problem.equality.push_back([&, comp](std::span<const double> x) {
      const RealMatrix tm = bloch_all(x, nullptr);
      return tm.row(comp).sum() - (comp == 0 ? 1.0 : 0.0);
    });
    problem.equality_gradients.push_back([&, comp](std::span<const double> x, std::span<double> g) {
      std::vector<Eigen::Matrix4d> jacs(static_cast<std::size_t>(n));
      bloch_all(x, &jacs);
      for (Eigen::Index k = 0; k < n; ++k) {
        for (int i = 0; i < 4; ++i) {
          g[static_cast<std::size_t>(4 * k + i)] = jacs[static_cast<std::size_t>(k)](comp, i);
        }
      }
    });
  }

  MinimizeResult res = minimize_constrained(problem, uniform_restarts(x0, 0.05 * config.start_spread), config);
  if (!res.diagnostics.converged) {
    throw FitError(ErrorKind::kFit, "qdt_fit: optimizer did not converge", res.diagnostics);
  }
  const RealMatrix tm = bloch_all(res.solution, nullptr);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.povm.elements.push_back(PovmElement::from_bloch(tm(0, k), tm.block<3, 1>(1, k)));
  }
  out.diagnostics = res.diagnostics;
  return out;
}

QtRep qdt_to_qt(const Povm& p) { return qt_from_povm(p); }

}  // namespace povmscope
