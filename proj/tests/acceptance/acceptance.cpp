// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "povmscope/experiment.hpp"

using namespace povmscope;

namespace {

int failures = 0;
std::vector<int> failed;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(int id, bool ok, const std::string& detail) {
  if (!ok) ++failures, failed.push_back(id);
  std::printf("%s AC%d %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
}

void info(int id, const std::string& detail) {
  std::printf("INFO AC%d %s\n", id, detail.c_str());
  std::fflush(stdout);
}

// Runs one criterion, turning an unexpected exception into a FAIL line.
void criterion(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

QdscConfig restarts(int n) {
  QdscConfig c;
  c.optimizer.restarts = n;
  return c;
}

void ac1() {
  Timer clock;
  const QtRep mub = qt_from_povm(build_standard(StandardPovm::kMub6));
  const QtRep sic = qt_from_povm(build_standard(StandardPovm::kSic4));
  double err_mub = 0, err_sic = 0;
  for (int k = 0; k < 6; ++k) {
    err_mub = std::max(err_mub, std::abs(mub.t(k) - 1.0 / 6));
    for (int l = 0; l < 6; ++l) {
      const double expected = k == l ? 1.0 / 36 : (k / 2 == l / 2 ? -1.0 / 36 : 0.0);
      err_mub = std::max(err_mub, std::abs(mub.q(k, l) - expected));
    }
  }
  for (int k = 0; k < 4; ++k) {
    err_sic = std::max(err_sic, std::abs(sic.t(k) - 1.0 / 4));
    for (int l = 0; l < 4; ++l)
      err_sic = std::max(err_sic, std::abs(sic.q(k, l) - (k == l ? 1.0 / 16 : -1.0 / 48)));
  }
  const double t = clock.seconds();
  report(1, err_mub < 1e-12 && err_sic < 1e-12 && t < 1.0,
         fmt("analytic (Q,t): max err mub6 %.2e sic4 %.2e (tol 1e-12), %.3f s (limit 1 s)", err_mub, err_sic, t));
}

void ac2() {
  Timer clock;
  bool ok = true;
  std::string detail;
  for (auto which : {StandardPovm::kMub6, StandardPovm::kSic4}) {
    const Povm p = build_standard(which);
    const QtRep truth = qt_from_povm(p);
    const QdscResult r = qdsc_run(born_matrix(p, probe_grid()), restarts(16));
    const double iq = 1 - fidelity_q(truth, r.qt), it = 1 - fidelity_t(truth, r.qt);
    ok = ok && iq < 1e-6 && it < 1e-8 && r.diagnostics.detected_rank == 3;
    detail += fmt("%s: 1-F_Q %.2e 1-F_t %.2e rank %d; ", std::string(to_string(which)).c_str(), iq, it,
                  r.diagnostics.detected_rank);
  }
  const double t = clock.seconds();
  report(2, ok && t < 60.0, detail + fmt("%.2f s (limit 60 s)", t));
}

// Rank-2 Q compared on its nonzero block, i.e. the span of its top two eigenvectors.
struct DegenerateCheck {
  int rank;
  double max_q_err;
  double max_t_err;
  double infidelity;
};
DegenerateCheck degenerate_run(const Povm& device) {
  const QtRep truth = qt_from_povm(device);
  const QdscResult r = qdsc_run(born_matrix(device, probe_grid()), restarts(16));
  const double q_err = (r.qt.q - truth.q).cwiseAbs().maxCoeff();
  const double t_err = (r.qt.t - truth.t).cwiseAbs().maxCoeff();
  return {r.diagnostics.detected_rank, q_err, t_err, 1 - fidelity_q(truth, r.qt)};
}

void ac3() {
  // X/Z real bases turned by 90 degrees about z: a gauge-equivalent Z/Y device
  // whose great circle the probe grid samples.
  const Povm real = build_standard(StandardPovm::kRealMub4);
  const Povm zy = conjugate_povm(real, rotation_unitary(Vector3::UnitZ(), std::acos(-1.0) / 2));
  const DegenerateCheck c = degenerate_run(zy);
  const int q_rank = numerical_rank(qt_from_povm(zy).q);
  report(3, c.rank == 2 && q_rank == 2 && c.max_q_err < 1e-6 && c.max_t_err < 1e-6,
         fmt("real_mub4 (Z/Y frame): detected rank %d, max|dQ| %.2e, max|dt| %.2e (tol 1e-6), 1-F_Q %.2e", c.rank,
             c.max_q_err, c.max_t_err, c.infidelity));
  const DegenerateCheck xz = degenerate_run(real);
  info(3, fmt("real_mub4 (X/Z frame): detected rank %d, max|dQ| %.2e, 1-F_Q %.2e; the grid has only the poles "
              "on the X-Z great circle",
              xz.rank, xz.max_q_err, xz.infidelity));
}

ExperimentConfig base_config(const std::string& device, int runs) {
  ExperimentConfig c;
  c.device = device;
  c.shots = 100000;
  c.runs = runs;
  c.seed = 20240501;
  c.optimizer.restarts = 8;
  return c;
}

std::vector<CompareRun> compare_batch(const ExperimentConfig& c) {
  const Device device = resolve_device(c);
  const ProbeSet nominal = resolve_probes(c);
  const ProbeSet prepared = prepared_states(nominal, c);
  std::vector<CompareRun> out;
  for (int run = 0; run < c.runs; ++run)
    out.push_back(compare_run(device, nominal, simulate_run(device.povm, prepared, c, run).frequencies, c));
  return out;
}

// AC4 and AC5 share the same noiseless-preparation batches.
std::vector<CompareRun> clean_mub, clean_sic;

void ac4() {
  Timer clock;
  bool ok = true;
  std::string detail;
  for (const std::string device : {"mub6", "sic4"}) {
    const ExperimentConfig c = base_config(device, 40);
    auto& batch = device == "mub6" ? clean_mub : clean_sic;
    batch = compare_batch(c);
    std::vector<double> iq;
    const Eigen::Index n = batch.front().qt_truth.t.size();
    RealMatrix t(n, c.runs);
    for (int r = 0; r < c.runs; ++r) {
      iq.push_back(1 - batch[r].fq_qdsc_truth);
      t.col(r) = batch[r].qdsc.qt.t;
    }
    double worst_z = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double mean = t.row(k).mean();
      const double sd = std::sqrt((t.row(k).array() - mean).square().sum() / (c.runs - 1));
      const double se = sd / std::sqrt(double(c.runs));
      worst_z = std::max(worst_z, std::abs(mean - batch.front().qt_truth.t(k)) / se);
    }
    const double med = median(iq);
    ok = ok && med < 1e-3 && worst_z < 4.0;
    detail += fmt("%s: median 1-F_Q %.2e (tol 1e-3), worst |t-mean - truth|/SE %.2f (tol 4); ", device.c_str(), med,
                  worst_z);
  }
  const double t = clock.seconds();
  report(4, ok && t < 600.0, detail + fmt("%.1f s (limit 600 s)", t));

  // Same runs on the grid without its repeated poles.
  ExperimentConfig c = base_config("sic4", 40);
  const Device device = resolve_device(c);
  const ProbeSet distinct = probe_grid(true);
  const QtRep truth = qt_from_povm(device.povm);
  RealMatrix ts(4, c.runs);
  for (int r = 0; r < c.runs; ++r)
    ts.col(r) = qdsc_run(simulate_run(device.povm, distinct, c, r).frequencies, qdsc_config(c)).qt.t;
  double worst_z = 0;
  for (Eigen::Index k = 0; k < 4; ++k) {
    const double mean = ts.row(k).mean();
    const double sd = std::sqrt((ts.row(k).array() - mean).square().sum() / (c.runs - 1));
    worst_z = std::max(worst_z, std::abs(mean - truth.t(k)) / (sd / std::sqrt(double(c.runs))));
  }
  info(4, fmt("sic4 on the 38 distinct grid states: worst |t-mean - truth|/SE %.2f", worst_z));
}

void ac5() {
  double worst_q = 1, worst_t = 1;
  for (const auto* batch : {&clean_mub, &clean_sic})
    for (const auto& r : *batch) {
      worst_q = std::min(worst_q, r.fq_methods);
      worst_t = std::min(worst_t, r.ft_methods);
    }
  report(5, !clean_mub.empty() && worst_q > 0.9999 && worst_t > 0.9999,
         fmt("QDSC vs QDT over 80 runs: min F_Q %.6f, min F_t %.6f (tol > 0.9999)", worst_q, worst_t));
}

void ac6() {
  bool ok = true;
  std::string detail;
  for (const std::string device : {"mub6", "sic4"}) {
    ExperimentConfig c = base_config(device, 40);
    c.error_model.misalignment_deg = 1.0;
    c.error_model.seed = 7;
    const auto batch = compare_batch(c);
    std::vector<std::optional<CompareRun>> runs(batch.begin(), batch.end());
    const CompareSummary s = summarize(runs, c.seed);
    const bool dev_ok = s.median_infidelity_q_qdsc_truth < s.median_infidelity_q_qdt_truth &&
                        s.violations_qdsc.mean_excess <= s.violations_qdt.mean_excess;
    ok = ok && dev_ok;
    detail += fmt("%s: median 1-F_Q truth QDSC %.2e < QDT %.2e, mean L excess QDSC %.2e <= QDT %.2e; ", device.c_str(),
                  s.median_infidelity_q_qdsc_truth, s.median_infidelity_q_qdt_truth, s.violations_qdsc.mean_excess,
                  s.violations_qdt.mean_excess);
  }
  report(6, ok, detail + "1 deg misalignment, 40 runs");
}

void ac7() {
  double worst_l = 0, worst_a = 0;
  for (auto which : {StandardPovm::kMub6, StandardPovm::kSic4}) {
    const Povm p = build_standard(which);
    const QtRep qt = qt_from_povm(p);
    const ProbMatrix pm = born_matrix(p, probe_grid());
    for (Eigen::Index j = 0; j < pm.states(); ++j) {
      worst_l = std::max(worst_l, std::abs(l_value(pm.values.col(j), qt) - 1));
      worst_a = std::max(worst_a, affine_residual(pm.values.col(j), qt));
    }
  }
  report(7, worst_l < 1e-9 && worst_a < 1e-10,
         fmt("50 pure states, mub6 and sic4: max|L-1| %.2e (tol 1e-9), max affine residual %.2e (tol 1e-10)", worst_l,
             worst_a));
}

void ac8() {
  double worst = 0;
  for (auto which : {StandardPovm::kMub6, StandardPovm::kSic4}) {
    const Povm p = build_standard(which);
    const QtRep base = qdsc_run(born_matrix(p, probe_grid()), restarts(16)).qt;
    std::mt19937_64 rng(which == StandardPovm::kSic4 ? 81 : 82);
    for (int i = 0; i < 20; ++i) {
      const Povm c = conjugate_povm(p, random_unitary(rng));
      const QtRep r = qdsc_run(born_matrix(c, probe_grid()), restarts(16)).qt;
      worst = std::max(worst, 1 - fidelity_q(base, r));
    }
  }
  report(8, worst < 1e-7, fmt("20 random unitaries per device: max 1-F_Q %.2e (tol 1e-7)", worst));
}

void ac9() {
  bool ok = true;
  std::string detail;
  for (auto which : {StandardPovm::kMub6, StandardPovm::kSic4}) {
    const Povm p = build_standard(which);
    const QtRep truth = qt_from_povm(p);
    const double iq = 1 - fidelity_q(truth, qdsc_run(born_matrix(p, random_pure_states(9, 2024)), restarts(16)).qt);
    ok = ok && iq < 1e-6;
    detail += fmt("%s 9 states: 1-F_Q %.2e (tol 1e-6); ", std::string(to_string(which)).c_str(), iq);
  }
  // Subsets of one noisy sic4 data set, as in the probe-count study.
  const Povm sic = build_standard(StandardPovm::kSic4);
  const ProbMatrix data = sample_counts(born_matrix(sic, probe_grid()), 100000, 99).frequencies();
  const auto rows = subsample_study(data, qt_from_povm(sic), {9, 15, 25, 35, 45}, 100, restarts(4), 5);
  bool monotone = true;
  detail += "subsample medians";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail += fmt(" m=%d:%.2e", rows[i].m, rows[i].median_infidelity);
    if (i > 0 && rows[i].median_infidelity > rows[i - 1].median_infidelity) monotone = false;
  }
  report(9, ok && monotone, detail + (monotone ? " (non-increasing)" : " (NOT non-increasing)"));
}

void ac10() {
  ExperimentConfig c = base_config("sic4", 10);
  c.optimizer.restarts = 16;
  double untwisted = 1.0;
  bool twist_ok = true;
  std::string detail;
  for (const std::string device : {"sic4", "mub6"}) {
    c.device = device;
    c.twist_deg = 0.0;
    const LoopResult u = validate_loop(resolve_device(c), resolve_probes(c), c);
    c.twist_deg = 2.0;
    const LoopResult t = validate_loop(resolve_device(c), resolve_probes(c), c);
    untwisted = std::min(untwisted, u.mean_calibrated_vs_reference);
    twist_ok = twist_ok && t.mean_calibrated_vs_reference > t.mean_ideal_vs_reference;
    detail += fmt("%s: untwisted calibrated vs QDT %.6f (tol 0.999); 2 deg twist calibrated %.6f vs ideal %.6f; ",
                  device.c_str(), u.mean_calibrated_vs_reference, t.mean_calibrated_vs_reference,
                  t.mean_ideal_vs_reference);
  }
  report(10, untwisted > 0.999 && twist_ok, detail + "N=1e5, 10 runs, 12 icosahedron states");
}

}  // namespace

// --expect-fail <id> marks a criterion whose failure is documented; it still
// prints FAIL but does not set the exit status.
int main(int argc, char** argv) {
  std::vector<int> expected;
  for (int i = 1; i + 1 < argc; i += 2)
    if (std::string(argv[i]) == "--expect-fail") expected.push_back(std::atoi(argv[i + 1]));
  Timer total;
  criterion(1, ac1);
  criterion(2, ac2);
  criterion(3, ac3);
  criterion(4, ac4);
  criterion(5, ac5);
  criterion(6, ac6);
  criterion(7, ac7);
  criterion(8, ac8);
  criterion(9, ac9);
  criterion(10, ac10);
  int unexpected = 0;
  for (int id : failed)
    if (std::find(expected.begin(), expected.end(), id) == expected.end()) ++unexpected;
  std::printf("%s %d/10 criteria passed in %.1f s", unexpected ? "FAIL" : "PASS", 10 - failures, total.seconds());
  if (failures > unexpected) std::printf(" (%d documented failure(s) tolerated)", failures - unexpected);
  std::printf("\n");
  return unexpected ? 1 : 0;
}
