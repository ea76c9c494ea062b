#include "povmscope/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

#include <Eigen/Eigenvalues>

namespace povmscope {
namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

std::optional<StandardPovm> try_standard(const std::string& name) {
  try {
    return parse_standard_povm(name);
  } catch (const Error&) {
    return std::nullopt;
  }
}

Json frame_json(const FrameConvention& f) {
  return Json{{"z_anchor", f.z_anchor}, {"xz_anchor", f.xz_anchor}, {"x_sign", f.x_sign}, {"y_sign", f.y_sign}};
}

Json stats_json(const ViolationStats& v) {
  return Json{{"mean", v.mean},
              {"std", v.std},
              {"mean_excess", v.mean_excess},
              {"fraction_exceeding_one", v.fraction_exceeding_one},
              {"fraction_exceeding_band", v.fraction_exceeding_band}};
}

std::vector<double> to_std(const RealVector& v) { return {v.data(), v.data() + v.size()}; }

double safe_log10(double x) { return x > 0 ? std::log10(x) : -std::numeric_limits<double>::infinity(); }

}  // namespace

void validate(const ExperimentConfig& c) {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::kInvalidInput, m); };
  if (c.runs < 1) bad("runs must be >= 1");
  if (c.shots < 0) bad("shots must be >= 1 (or 0 for exact probabilities)");
  if (c.workers < 1) bad("workers must be >= 1");
  if (!(c.rank_threshold > 0.0 && c.rank_threshold < 1.0)) bad("rank_threshold must lie in (0, 1)");
  if (c.subsets < 1) bad("subsets must be >= 1");
  if (c.error_model.misalignment_deg < 0 || c.error_model.retardation_frac < 0 ||
      c.error_model.rotation_jitter_deg < 0)
    bad("error_model magnitudes must be >= 0");
  if (!std::isfinite(c.twist_deg)) bad("twist_deg must be finite");
  validate(c.optimizer);
}

ExperimentConfig config_from_json(const Json& doc, ExperimentConfig c) {
  if (!doc.is_object()) throw Error(ErrorKind::kInvalidInput, "config: expected a JSON object");
  try {
    c.device = doc.value("device", c.device);
    c.probe_source = doc.value("probe_source", c.probe_source);
    c.shots = doc.value("shots", c.shots);
    c.runs = doc.value("runs", c.runs);
    if (doc.contains("error_model")) c.error_model = error_model_from_json(doc["error_model"], c.error_model);
    if (doc.contains("optimizer")) c.optimizer = optimizer_from_json(doc["optimizer"], c.optimizer);
    c.rank_threshold = doc.value("rank_threshold", c.rank_threshold);
    c.automatic_rank = doc.value("automatic_rank", c.automatic_rank);
    c.output_dir = doc.value("output_dir", c.output_dir);
    c.seed = doc.value("seed", c.seed);
    c.workers = doc.value("workers", c.workers);
    c.twist_deg = doc.value("twist_deg", c.twist_deg);
    if (doc.contains("m_list")) c.m_list = doc["m_list"].get<std::vector<int>>();
    c.subsets = doc.value("subsets", c.subsets);
    if (doc.contains("frame")) {
      const Json& f = doc["frame"];
      FrameConvention fc = c.frame.value_or(FrameConvention{});
      fc.z_anchor = f.value("z_anchor", fc.z_anchor);
      fc.xz_anchor = f.value("xz_anchor", fc.xz_anchor);
      fc.x_sign = f.value("x_sign", fc.x_sign);
      fc.y_sign = f.value("y_sign", fc.y_sign);
      c.frame = fc;
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json doc{{"schema", kSchema},
           {"device", c.device},
           {"probe_source", c.probe_source},
           {"shots", c.shots},
           {"runs", c.runs},
           {"error_model", to_json(c.error_model)},
           {"optimizer", to_json(c.optimizer)},
           {"rank_threshold", c.rank_threshold},
           {"automatic_rank", c.automatic_rank},
           {"output_dir", c.output_dir},
           {"seed", c.seed},
           {"workers", c.workers},
           {"twist_deg", c.twist_deg},
           {"m_list", c.m_list},
           {"subsets", c.subsets}};
  if (c.frame) doc["frame"] = frame_json(*c.frame);
  return doc;
}

Povm twist_povm(const Povm& p, const std::vector<int>& elements, double angle_deg, const Vector3& axis) {
  const Matrix2c u = rotation_unitary(axis, angle_deg * std::numbers::pi / 180.0);
  std::vector<Matrix2c> mats;
  for (const auto& e : p.elements) mats.push_back(e.matrix);
  for (int k : elements) {
    if (k < 0 || k >= static_cast<int>(mats.size()))
      throw Error(ErrorKind::kInvalidInput, "twist: element index out of range");
    mats[static_cast<std::size_t>(k)] = u * mats[static_cast<std::size_t>(k)] * u.adjoint();
  }
  Matrix2c s = Matrix2c::Zero();
  for (const auto& m : mats) s += m;
  Eigen::SelfAdjointEigenSolver<Matrix2c> es(s);
  if (es.eigenvalues().minCoeff() <= 0.0) throw Error(ErrorKind::kInvalidInput, "twist: element sum is singular");
  const Matrix2c s_inv_sqrt =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
  for (auto& m : mats) {
    m = s_inv_sqrt * m * s_inv_sqrt;
    m = 0.5 * (m + m.adjoint()).eval();
  }
  return Povm::from_matrices(mats);
}

std::vector<int> default_twist_elements(const Povm& p, std::optional<StandardPovm> which) {
  if (which == StandardPovm::kMub6 || which == StandardPovm::kRealMub4) return {2, 3};
  return {p.size() > 1 ? 1 : 0};
}

Device resolve_device(const ExperimentConfig& config) {
  Device d;
  d.name = config.device;
  d.standard = try_standard(config.device);
  if (d.standard) {
    d.ideal = build_standard(*d.standard);
  } else {
    if (!std::filesystem::exists(config.device))
      throw Error(ErrorKind::kInvalidInput,
                  "device '" + config.device + "' is neither mub6, sic4, real_mub4 nor a POVM file");
    d.ideal = povm_from_json(read_json(config.device));
    const auto diag = validate_povm(d.ideal, 1e-9);
    if (!diag.valid(1e-9)) throw Error(ErrorKind::kInvalidInput, "device file does not hold a valid POVM");
  }
  d.frame = config.frame ? *config.frame : (d.standard ? default_frame(*d.standard) : FrameConvention{});
  d.povm = config.twist_deg != 0.0
               ? twist_povm(d.ideal, default_twist_elements(d.ideal, d.standard), config.twist_deg)
               : d.ideal;
  return d;
}

ProbeSet resolve_probes(const ExperimentConfig& config) {
  const std::string& s = config.probe_source;
  if (s == "grid50") return probe_grid();
  if (s == "icosahedron12") return icosahedron_states();
  if (s.rfind("random-", 0) == 0) {
    std::size_t m = 0;
    try {
      m = std::stoul(s.substr(7));
    } catch (const std::exception&) {
      throw Error(ErrorKind::kInvalidInput, "probe_source '" + s + "': expected random-<m>");
    }
    if (m < 1) throw Error(ErrorKind::kInvalidInput, "probe_source: random-<m> needs m >= 1");
    return random_pure_states(m, config.seed);
  }
  if (std::filesystem::exists(s)) return probe_set_from_json(read_json(s));
  throw Error(ErrorKind::kInvalidInput,
              "probe_source '" + s + "' is neither grid50, icosahedron12, random-<m> nor a file");
}

QdscConfig qdsc_config(const ExperimentConfig& config) {
  QdscConfig q;
  q.optimizer = config.optimizer;
  q.rank_rule.rel_threshold = config.rank_threshold;
  q.rank_rule.automatic = config.automatic_rank;
  return q;
}

ProbeSet prepared_states(const ProbeSet& nominal, const ExperimentConfig& config) {
  return config.error_model.is_zero() ? nominal : inject_preparation_error(nominal, config.error_model);
}

RunData simulate_run(const Povm& device, const ProbeSet& prepared, const ExperimentConfig& config, int run) {
  RunData out;
  out.seed = run_seed(config.seed, run);
  out.exact = born_matrix(device, prepared);
  if (config.shots > 0) {
    out.counts = sample_counts(out.exact, config.shots, out.seed);
    out.frequencies = out.counts->frequencies();
  } else {
    out.frequencies = out.exact;
  }
  return out;
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  const int threads = std::max(1, std::min(workers, count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  auto guarded = [&](int i) {
    try {
      fn(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  if (threads == 1) {
    for (int i = 0; i < count; ++i) guarded(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < count; i = next++) guarded(i);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Json to_json(const RunFailure& f) {
  return Json{{"error", f.kind}, {"stage", f.stage}, {"message", f.message}};
}

RunFailure capture_failure(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e))
    return {std::string(to_string(err->kind())), err->stage(), err->what()};
  return {"internal", "", e.what()};
}

CompareRun compare_run(const Device& device, const ProbeSet& nominal, const ProbMatrix& data,
                       const ExperimentConfig& config) {
  CompareRun r;
  r.qdsc = qdsc_run(data, qdsc_config(config));
  try {
    r.qdt = qdt_fit(TomographyProblem{data, nominal, 0.0}, config.optimizer);
  } catch (Error& e) {
    e.set_stage("qdt");
    throw;
  }
  r.qt_qdt = qdt_to_qt(r.qdt.povm);
  r.qt_truth = qt_from_povm(device.povm);
  r.fq_methods = fidelity_q(r.qt_qdt, r.qdsc.qt);
  r.ft_methods = fidelity_t(r.qt_qdt, r.qdsc.qt);
  r.fq_qdsc_truth = fidelity_q(r.qt_truth, r.qdsc.qt);
  r.ft_qdsc_truth = fidelity_t(r.qt_truth, r.qdsc.qt);
  r.fq_qdt_truth = fidelity_q(r.qt_truth, r.qt_qdt);
  r.ft_qdt_truth = fidelity_t(r.qt_truth, r.qt_qdt);

  const auto m = data.states();
  r.l_qdsc.resize(m);
  r.l_qdt.resize(m);
  r.affine_qdsc.resize(m);
  r.affine_qdt.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const RealVector p = data.values.col(j);
    r.l_qdsc(j) = l_value(p, r.qdsc.qt);
    r.l_qdt(j) = l_value(p, r.qt_qdt);
    r.affine_qdsc(j) = affine_residual(p, r.qdsc.qt);
    r.affine_qdt(j) = affine_residual(p, r.qt_qdt);
  }

  try {
    r.aligned_qdsc = align_frame(r.qdsc.qt, device.frame);
    QtRep qt_qdt = r.qt_qdt;
    qt_qdt.rank = 3;
    r.aligned_qdt = align_frame(qt_qdt, device.frame);
    for (std::size_t k = 0; k < r.aligned_qdsc.size(); ++k) {
      double f = std::nan("");
      try {
        f = povm_element_fidelity(r.aligned_qdt.elements[k], r.aligned_qdsc.elements[k]);
      } catch (const Error&) {
      }
      r.element_fidelity.push_back(f);
    }
  } catch (const Error&) {
    // Rank-deficient devices have no unique frame.
    r.element_fidelity.clear();
    r.aligned_qdsc = {};
    r.aligned_qdt = {};
  }
  return r;
}

Json to_json(const CompareRun& r) {
  Json doc{{"schema", kSchema},
           {"type", "compare-run"},
           {"qdsc", to_json(r.qdsc.qt)},
           {"qdsc_diagnostics", to_json(r.qdsc.diagnostics)},
           {"singular_values", to_std(r.qdsc.reduced.singular_values)},
           {"boundary_indices", r.qdsc.boundary_set},
           {"qdt", to_json(r.qt_qdt)},
           {"qdt_povm", to_json(r.qdt.povm)},
           {"qdt_diagnostics", to_json(r.qdt.diagnostics)},
           {"F_Q", r.fq_methods},
           {"F_t", r.ft_methods},
           {"F_Q_qdsc_truth", r.fq_qdsc_truth},
           {"F_t_qdsc_truth", r.ft_qdsc_truth},
           {"F_Q_qdt_truth", r.fq_qdt_truth},
           {"F_t_qdt_truth", r.ft_qdt_truth},
           {"L_qdsc", to_std(r.l_qdsc)},
           {"L_qdt", to_std(r.l_qdt)},
           {"affine_qdsc", to_std(r.affine_qdsc)},
           {"affine_qdt", to_std(r.affine_qdt)},
           {"element_fidelity", r.element_fidelity}};
  if (r.aligned_qdsc.size()) {
    doc["aligned_qdsc"] = to_json(r.aligned_qdsc);
    doc["aligned_qdt"] = to_json(r.aligned_qdt);
  }
  return doc;
}

CompareSummary summarize(const std::vector<std::optional<CompareRun>>& runs, std::uint64_t seed) {
  CompareSummary s;
  std::vector<double> iq, it, iqs, iqt, its, itt;
  std::vector<const CompareRun*> ok;
  for (const auto& r : runs) {
    if (!r) {
      ++s.runs_failed;
      continue;
    }
    ++s.runs_ok;
    ok.push_back(&*r);
    iq.push_back(1.0 - r->fq_methods);
    it.push_back(1.0 - r->ft_methods);
    iqs.push_back(1.0 - r->fq_qdsc_truth);
    iqt.push_back(1.0 - r->fq_qdt_truth);
    its.push_back(1.0 - r->ft_qdsc_truth);
    itt.push_back(1.0 - r->ft_qdt_truth);
  }
  s.median_infidelity_q_methods = median(iq);
  s.median_infidelity_t_methods = median(it);
  s.median_infidelity_q_qdsc_truth = median(iqs);
  s.median_infidelity_q_qdt_truth = median(iqt);
  s.median_infidelity_t_qdsc_truth = median(its);
  s.median_infidelity_t_qdt_truth = median(itt);
  if (ok.empty()) return s;

  const auto m = ok.front()->l_qdsc.size();
  RealMatrix lq(m, static_cast<Eigen::Index>(ok.size())), lt(m, static_cast<Eigen::Index>(ok.size()));
  for (std::size_t i = 0; i < ok.size(); ++i) {
    lq.col(static_cast<Eigen::Index>(i)) = ok[i]->l_qdsc;
    lt.col(static_cast<Eigen::Index>(i)) = ok[i]->l_qdt;
  }
  s.violations_qdsc = violation_stats(lq, 1000, seed);
  s.violations_qdt = violation_stats(lt, 1000, seed);

  const std::size_t n = ok.front()->element_fidelity.size();
  if (n > 0) {
    s.mean_element_fidelity.assign(n, 0.0);
    int used = 0;
    for (const auto* r : ok) {
      if (r->element_fidelity.size() != n) continue;
      ++used;
      for (std::size_t k = 0; k < n; ++k) s.mean_element_fidelity[k] += r->element_fidelity[k];
    }
    for (auto& f : s.mean_element_fidelity) f /= std::max(used, 1);
  }
  return s;
}

Json to_json(const CompareSummary& s) {
  return Json{
      {"schema", kSchema},
      {"type", "compare-summary"},
      {"runs_ok", s.runs_ok},
      {"runs_failed", s.runs_failed},
      // Infidelities between QDT and QDSC, log10(1 - F), median over runs.
      {"table_s1",
       {{"log10_infidelity_Q", safe_log10(s.median_infidelity_q_methods)},
        {"log10_infidelity_t", safe_log10(s.median_infidelity_t_methods)}}},
      // Per-element fidelities between aligned QDT and QDSC operators, percent.
      {"table_s2",
       [&] {
         Json a = Json::array();
         for (double f : s.mean_element_fidelity) a.push_back(100.0 * f);
         return a;
       }()},
      {"median_infidelity_Q", s.median_infidelity_q_methods},
      {"median_infidelity_t", s.median_infidelity_t_methods},
      {"truth",
       {{"qdsc", {{"median_infidelity_Q", s.median_infidelity_q_qdsc_truth},
                  {"median_infidelity_t", s.median_infidelity_t_qdsc_truth}}},
        {"qdt", {{"median_infidelity_Q", s.median_infidelity_q_qdt_truth},
                 {"median_infidelity_t", s.median_infidelity_t_qdt_truth}}}}},
      {"violations", {{"qdsc", stats_json(s.violations_qdsc)}, {"qdt", stats_json(s.violations_qdt)}}}};
}

std::vector<SubsampleRow> subsample_study(const ProbMatrix& data, const QtRep& reference,
                                          const std::vector<int>& m_list, int subsets,
                                          const QdscConfig& config, std::uint64_t seed, int workers) {
  const int total = static_cast<int>(data.states());
  for (int m : m_list) {
    if (m < 9) throw Error(ErrorKind::kInvalidInput, "subsample: m must be >= 9 (minimal determination)");
    if (m > total)
      throw Error(ErrorKind::kInvalidInput,
                  "subsample: m = " + std::to_string(m) + " exceeds the " + std::to_string(total) + " states");
  }
  if (subsets < 1) throw Error(ErrorKind::kInvalidInput, "subsample: subsets must be >= 1");

  std::vector<SubsampleRow> rows;
  for (int m : m_list) {
    std::vector<double> infid(static_cast<std::size_t>(subsets), std::nan(""));
    parallel_for(subsets, workers, [&](int s) {
      std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(m) << 32) ^ static_cast<std::uint64_t>(s));
      std::vector<int> idx(static_cast<std::size_t>(total));
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<std::size_t>(m));
      std::sort(idx.begin(), idx.end());
      ProbMatrix sub;
      sub.values = data.values(Eigen::all, idx);
      try {
        infid[static_cast<std::size_t>(s)] = 1.0 - fidelity_q(reference, qdsc_run(sub, config).qt);
      } catch (const Error&) {
      }
    });
    SubsampleRow row;
    row.m = m;
    row.subsets = subsets;
    std::vector<double> good;
    for (double v : infid)
      if (std::isnan(v)) ++row.failures;
      else good.push_back(v);
    row.median_infidelity = median(good);
    row.mean_infidelity = mean(good);
    row.std_infidelity = sample_std(good);
    rows.push_back(row);
  }
  return rows;
}

LoopResult validate_loop(const Device& device, const ProbeSet& calibration_probes,
                         const ExperimentConfig& config, const std::optional<ProbMatrix>& supplied) {
  const ProbMatrix freq =
      supplied ? *supplied
               : simulate_run(device.povm, prepared_states(calibration_probes, config), config, 0).frequencies;
  if (freq.states() != static_cast<Eigen::Index>(calibration_probes.size()))
    throw Error(ErrorKind::kInvalidInput, "validate-loop: data columns do not match the probe states");

  LoopResult out;
  const QdscResult qdsc = qdsc_run(freq, qdsc_config(config));
  out.calibrated = align_frame(qdsc.qt, device.frame);
  const QdtResult qdt = qdt_fit(TomographyProblem{freq, calibration_probes, 0.0}, config.optimizer);
  QtRep qt_ref = qdt_to_qt(qdt.povm);
  qt_ref.rank = 3;
  out.reference = align_frame(qt_ref, device.frame);
  out.ideal = align_frame(qt_from_povm(device.ideal), device.frame);

  out.study = tomography_study(device.povm, out.calibrated, out.reference, out.ideal, icosahedron_states(),
                               config.shots, config.runs, config.seed ^ 0x5851f42d4c957f2dULL);
  out.mean_calibrated_vs_reference = out.study.calibrated_vs_reference.mean();
  out.mean_ideal_vs_reference = out.study.ideal_vs_reference.mean();
  return out;
}

}  // namespace povmscope
