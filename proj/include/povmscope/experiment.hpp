#pragma once
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "povmscope/calibration.hpp"
#include "povmscope/io.hpp"
#include "povmscope/metrics.hpp"
#include "povmscope/qdsc.hpp"
#include "povmscope/qdt.hpp"

namespace povmscope {

// One experiment bundle. Every field has a JSON key of the same name.
struct ExperimentConfig {
  // mub6 | sic4 | real_mub4, or the path of a POVM JSON file.
  std::string device = "sic4";
  // grid50 | icosahedron12 | random-<m>, or the path of a probe-set JSON file.
  std::string probe_source = "grid50";
  std::int64_t shots = 100000;  // 0 means exact Born probabilities
  int runs = 40;
  ErrorModel error_model;
  OptimizerConfig optimizer;
  double rank_threshold = 0.05;
  bool automatic_rank = false;
  std::string output_dir;
  std::uint64_t seed = 0;
  int workers = 1;
  // Relative unitary twist (degrees) applied to part of the device.
  double twist_deg = 0.0;
  std::vector<int> m_list{9, 15, 25, 35, 45};
  int subsets = 100;
  std::optional<FrameConvention> frame;
};

void validate(const ExperimentConfig& config);
ExperimentConfig config_from_json(const Json& doc, ExperimentConfig base = {});
Json to_json(const ExperimentConfig& config);

inline std::uint64_t run_seed(std::uint64_t master, int run) {
  return master ^ static_cast<std::uint64_t>(run);
}

struct Device {
  std::string name;
  Povm povm;    // the true device, twist included
  Povm ideal;   // the untwisted nominal device
  std::optional<StandardPovm> standard;
  FrameConvention frame;
};

// Conjugates the selected elements by a rotation of angle_deg about axis and
// restores completeness with S^{-1/2} pi_k S^{-1/2}, S = sum_k pi_k.
// A global conjugation would be pure gauge, so only part of the device turns.
Povm twist_povm(const Povm& p, const std::vector<int>& elements, double angle_deg,
                const Vector3& axis = Vector3::UnitZ());
// Elements twisted by default: one basis of a MUB device, element 1 otherwise.
std::vector<int> default_twist_elements(const Povm& p, std::optional<StandardPovm> which);

Device resolve_device(const ExperimentConfig& config);
ProbeSet resolve_probes(const ExperimentConfig& config);

QdscConfig qdsc_config(const ExperimentConfig& config);

// Statistics of one run. The preparation error is systematic: the same
// perturbed states are used in every run, while counts are redrawn per run.
struct RunData {
  ProbMatrix exact;
  std::optional<CountsMatrix> counts;
  ProbMatrix frequencies;
  std::uint64_t seed = 0;
};
ProbeSet prepared_states(const ProbeSet& nominal, const ExperimentConfig& config);
RunData simulate_run(const Povm& device, const ProbeSet& prepared, const ExperimentConfig& config,
                     int run);

// Runs fn(0..count-1) on up to `workers` threads. Results are stored by index
// so the merge order never depends on scheduling.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

// Error captured from a failed run.
struct RunFailure {
  std::string kind;
  std::string stage;
  std::string message;
};
Json to_json(const RunFailure& f);
RunFailure capture_failure(const std::exception& e);

// QDSC and QDT on identical data.
struct CompareRun {
  QdscResult qdsc;
  QdtResult qdt;
  QtRep qt_qdt;
  QtRep qt_truth;
  double fq_methods = 0.0;   // F_Q(qdt, qdsc)
  double ft_methods = 0.0;
  double fq_qdsc_truth = 0.0;
  double ft_qdsc_truth = 0.0;
  double fq_qdt_truth = 0.0;
  double ft_qdt_truth = 0.0;
  RealVector l_qdsc;         // per state
  RealVector l_qdt;
  RealVector affine_qdsc;
  RealVector affine_qdt;
  // Per-element fidelity between the frame-aligned estimates; empty when the
  // frame is underdetermined.
  std::vector<double> element_fidelity;
  Povm aligned_qdsc;
  Povm aligned_qdt;
};
CompareRun compare_run(const Device& device, const ProbeSet& nominal, const ProbMatrix& data,
                       const ExperimentConfig& config);
Json to_json(const CompareRun& r);

struct CompareSummary {
  int runs_ok = 0;
  int runs_failed = 0;
  double median_infidelity_q_methods = 0.0;
  double median_infidelity_t_methods = 0.0;
  double median_infidelity_q_qdsc_truth = 0.0;
  double median_infidelity_q_qdt_truth = 0.0;
  double median_infidelity_t_qdsc_truth = 0.0;
  double median_infidelity_t_qdt_truth = 0.0;
  ViolationStats violations_qdsc;
  ViolationStats violations_qdt;
  std::vector<double> mean_element_fidelity;
};
// runs: per-run results (nullopt for failed runs).
CompareSummary summarize(const std::vector<std::optional<CompareRun>>& runs, std::uint64_t seed);
Json to_json(const CompareSummary& s);

// Random-subset study of the infidelity against a reference (Q, t).
struct SubsampleRow {
  int m = 0;
  int subsets = 0;
  int failures = 0;
  double median_infidelity = 0.0;
  double mean_infidelity = 0.0;
  double std_infidelity = 0.0;
};
std::vector<SubsampleRow> subsample_study(const ProbMatrix& data, const QtRep& reference,
                                          const std::vector<int>& m_list, int subsets,
                                          const QdscConfig& config, std::uint64_t seed,
                                          int workers = 1);

// Calibrate the device with QDSC and QDT on probe-grid data, then reconstruct
// the icosahedron states with the calibrated, tomographic and ideal POVMs.
struct LoopResult {
  TomographyStudy study;
  Povm calibrated;
  Povm reference;
  Povm ideal;
  double mean_calibrated_vs_reference = 0.0;
  double mean_ideal_vs_reference = 0.0;
};
// When `data` is given it is used as the calibration statistics instead of a
// simulated run on `calibration_probes`.
LoopResult validate_loop(const Device& device, const ProbeSet& calibration_probes,
                         const ExperimentConfig& config,
                         const std::optional<ProbMatrix>& data = std::nullopt);

}  // namespace povmscope
