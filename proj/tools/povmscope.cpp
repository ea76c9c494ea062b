// Command line driver for simulation, characterization and comparison studies.
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "povmscope/experiment.hpp"

namespace fs = std::filesystem;
using namespace povmscope;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::string> device, probes, output_dir;
  std::optional<std::int64_t> shots;
  std::optional<int> runs, workers, restarts, subsets;
  std::optional<std::uint64_t> seed, error_seed;
  std::optional<double> rank_threshold, misalignment, retardation, jitter, twist;
  bool automatic_rank = false;
  std::vector<int> m_list;

  std::vector<std::string> data;  // dataset CSVs or directories
  std::string states_path;
  std::string reference_path;
  std::string input_dir;
};

ExperimentConfig build_config(const Options& o) {
  ExperimentConfig c;
  // Datasets written by `simulate` carry the config that produced them; it is
  // the base whenever no explicit config is given.
  if (o.config_path.empty()) {
    for (const auto& in : o.data) {
      const fs::path dir = fs::is_directory(in) ? fs::path(in) : fs::path(in).parent_path();
      if (fs::exists(dir / "config.json")) {
        c = config_from_json(read_json(dir / "config.json"), c);
        break;
      }
    }
  } else {
    c = config_from_json(read_json(o.config_path), c);
  }
  if (const char* env = std::getenv("POVMSCOPE_OUTPUT_DIR"); env && *env) c.output_dir = env;
  if (o.device) c.device = *o.device;
  if (o.probes) c.probe_source = *o.probes;
  if (o.shots) c.shots = *o.shots;
  if (o.runs) c.runs = *o.runs;
  if (o.workers) c.workers = *o.workers;
  if (o.restarts) c.optimizer.restarts = *o.restarts;
  if (o.subsets) c.subsets = *o.subsets;
  if (o.seed) {
    c.seed = *o.seed;
    c.optimizer.seed = *o.seed;
  }
  if (o.error_seed) c.error_model.seed = *o.error_seed;
  if (o.rank_threshold) c.rank_threshold = *o.rank_threshold;
  if (o.automatic_rank) c.automatic_rank = true;
  if (o.misalignment) c.error_model.misalignment_deg = *o.misalignment;
  if (o.retardation) c.error_model.retardation_frac = *o.retardation;
  if (o.jitter) c.error_model.rotation_jitter_deg = *o.jitter;
  if (o.twist) c.twist_deg = *o.twist;
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (!o.m_list.empty()) c.m_list = o.m_list;
  if (c.output_dir.empty()) c.output_dir = "povmscope-out";
  validate(c);
  return c;
}

std::string run_name(const std::string& prefix, int run, const std::string& ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", run);
  return prefix + "_" + buf + ext;
}

// Expands directories into their run_*.csv files, sorted by name.
std::vector<fs::path> dataset_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in))
        if (e.path().extension() == ".csv" && e.path().filename().string().rfind("run_", 0) == 0)
          found.push_back(e.path());
      std::sort(found.begin(), found.end());
      if (found.empty()) throw Error(ErrorKind::kIo, "no run_*.csv datasets in " + std::string(in));
      out.insert(out.end(), found.begin(), found.end());
    } else {
      if (!fs::exists(in)) throw Error(ErrorKind::kIo, "dataset not found: " + in);
      out.emplace_back(in);
    }
  }
  return out;
}

// Statistics for every run: from files when given, simulated otherwise.
struct Batch {
  std::vector<std::string> names;
  std::vector<ProbMatrix> data;
};

Batch load_or_simulate(const Options& o, const ExperimentConfig& c, const Device& device,
                       const ProbeSet& nominal) {
  Batch b;
  if (!o.data.empty()) {
    for (const auto& f : dataset_files(o.data)) {
      b.names.push_back(f.stem().string());
      b.data.push_back(read_dataset(f).frequencies);
    }
    return b;
  }
  const ProbeSet prepared = prepared_states(nominal, c);
  for (int run = 0; run < c.runs; ++run) {
    b.names.push_back(run_name("run", run, ""));
    b.data.push_back(simulate_run(device.povm, prepared, c, run).frequencies);
  }
  return b;
}

ProbeSet states_for(const Options& o, const ExperimentConfig& c) {
  if (!o.states_path.empty()) return probe_set_from_json(read_json(o.states_path));
  // Datasets written by `simulate` carry their nominal probes alongside.
  for (const auto& in : o.data) {
    const fs::path dir = fs::is_directory(in) ? fs::path(in) : fs::path(in).parent_path();
    if (fs::exists(dir / "probes.json")) return probe_set_from_json(read_json(dir / "probes.json"));
  }
  return resolve_probes(c);
}

Json failure_entry(const std::string& run, const std::exception& e) {
  Json j = to_json(capture_failure(e));
  j["run"] = run;
  return j;
}

void require_some_success(int ok, const Json& failures, const char* what) {
  if (ok == 0) {
    std::string msg = std::string(what) + ": every run failed";
    if (!failures.empty()) msg += " (first: " + failures.front().value("message", std::string()) + ")";
    throw Error(ErrorKind::kFit, msg, failures.empty() ? "" : failures.front().value("stage", ""));
  }
}

Json cmd_simulate(const Options& o, const ExperimentConfig& c) {
  const Device device = resolve_device(c);
  const ProbeSet nominal = resolve_probes(c);
  const ProbeSet prepared = prepared_states(nominal, c);
  const fs::path out = c.output_dir;
  write_json(out / "config.json", to_json(c));
  write_json(out / "device.json", to_json(device.povm));
  write_json(out / "qt_truth.json", to_json(qt_from_povm(device.povm)));
  write_json(out / "probes.json", to_json(nominal));
  write_json(out / "prepared.json", to_json(prepared));
  std::vector<std::string> files(static_cast<std::size_t>(c.runs));
  parallel_for(c.runs, c.workers, [&](int run) {
    const RunData rd = simulate_run(device.povm, prepared, c, run);
    DatasetMeta meta;
    meta.seed = rd.seed;
    meta.run = run;
    meta.device = c.device;
    meta.labels = nominal.labels;
    const fs::path csv = out / run_name("run", run, ".csv");
    if (rd.counts) write_counts(csv, *rd.counts, meta);
    else write_probabilities(csv, rd.frequencies, meta);
    files[static_cast<std::size_t>(run)] = csv.string();
  });
  (void)o;
  return Json{{"status", "ok"}, {"command", "simulate"}, {"output_dir", out.string()}, {"files", files}};
}

Json cmd_qdsc(const Options& o, const ExperimentConfig& c) {
  const Device device = resolve_device(c);
  const Batch b = load_or_simulate(o, c, device, resolve_probes(c));
  const int n = static_cast<int>(b.data.size());
  std::vector<std::optional<QdscResult>> results(static_cast<std::size_t>(n));
  std::vector<Json> errors(static_cast<std::size_t>(n));
  const QdscConfig qc = qdsc_config(c);
  parallel_for(n, c.workers, [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      results[k] = qdsc_run(b.data[k], qc);
      Json doc = to_json(results[k]->qt);
      doc["diagnostics"] = to_json(results[k]->diagnostics);
      doc["singular_values"] = std::vector<double>(results[k]->reduced.singular_values.data(),
                                                   results[k]->reduced.singular_values.data() +
                                                       results[k]->reduced.singular_values.size());
      doc["boundary_indices"] = results[k]->boundary_set;
      write_json(fs::path(c.output_dir) / ("qdsc_" + b.names[k] + ".json"), doc);
    } catch (const std::exception& e) {
      errors[k] = failure_entry(b.names[k], e);
    }
  });

  Json failures = Json::array();
  std::vector<const QdscResult*> ok;
  std::vector<int> ranks;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (results[k]) {
      ok.push_back(&*results[k]);
      ranks.push_back(results[k]->diagnostics.detected_rank);
    } else {
      failures.push_back(errors[k]);
    }
  }
  require_some_success(static_cast<int>(ok.size()), failures, "qdsc");

  const auto dim = ok.front()->qt.outcomes();
  RealMatrix q_mean = RealMatrix::Zero(dim, dim), q_sq = RealMatrix::Zero(dim, dim);
  RealVector t_mean = RealVector::Zero(dim), t_sq = RealVector::Zero(dim);
  for (const auto* r : ok) {
    q_mean += r->qt.q;
    q_sq += r->qt.q.cwiseProduct(r->qt.q);
    t_mean += r->qt.t;
    t_sq += r->qt.t.cwiseProduct(r->qt.t);
  }
  const double cnt = static_cast<double>(ok.size());
  q_mean /= cnt;
  t_mean /= cnt;
  const double bessel = cnt > 1 ? cnt / (cnt - 1) : 0.0;
  RealMatrix q_std = ((q_sq / cnt - q_mean.cwiseProduct(q_mean)) * bessel).cwiseMax(0.0).cwiseSqrt();
  RealVector t_std = ((t_sq / cnt - t_mean.cwiseProduct(t_mean)) * bessel).cwiseMax(0.0).cwiseSqrt();
  QtRep mean_qt{q_mean, t_mean, ok.front()->qt.rank};
  const QtRep truth = qt_from_povm(device.povm);

  std::vector<double> infid;
  for (const auto* r : ok) infid.push_back(1.0 - fidelity_q(truth, r->qt));
  std::sort(infid.begin(), infid.end());

  Json summary{{"schema", kSchema},
               {"type", "qdsc-summary"},
               {"runs_ok", ok.size()},
               {"runs_failed", failures.size()},
               {"failures", failures},
               {"detected_ranks", ranks},
               {"mean", to_json(mean_qt)},
               {"std", {{"Q", to_json(QtRep{q_std, t_std, 0})["Q"]}, {"t", to_json(QtRep{q_std, t_std, 0})["t"]}}},
               {"median_infidelity_Q_vs_device", infid[infid.size() / 2]}};
  write_json(fs::path(c.output_dir) / "qdsc_summary.json", summary);
  summary["status"] = "ok";
  summary["command"] = "qdsc";
  return summary;
}

Json cmd_qdt(const Options& o, const ExperimentConfig& c) {
  const Device device = resolve_device(c);
  const ProbeSet nominal = states_for(o, c);
  const Batch b = load_or_simulate(o, c, device, nominal);
  const int n = static_cast<int>(b.data.size());
  std::vector<Json> outcome(static_cast<std::size_t>(n));
  std::vector<bool> good(static_cast<std::size_t>(n), false);
  parallel_for(n, c.workers, [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      const QdtResult r = qdt_fit(TomographyProblem{b.data[k], nominal, 0.0}, c.optimizer);
      Json doc = to_json(r.povm);
      doc["qt"] = to_json(qdt_to_qt(r.povm));
      doc["diagnostics"] = to_json(r.diagnostics);
      doc["unique"] = r.unique;
      write_json(fs::path(c.output_dir) / ("qdt_" + b.names[k] + ".json"), doc);
      good[k] = true;
    } catch (const std::exception& e) {
      outcome[k] = failure_entry(b.names[k], e);
    }
  });
  Json failures = Json::array();
  int ok = 0;
  for (int i = 0; i < n; ++i) {
    if (good[static_cast<std::size_t>(i)]) ++ok;
    else failures.push_back(outcome[static_cast<std::size_t>(i)]);
  }
  require_some_success(ok, failures, "qdt");
  return Json{{"status", "ok"}, {"command", "qdt"}, {"runs_ok", ok}, {"failures", failures},
              {"output_dir", c.output_dir}};
}

void write_l_table(const fs::path& path, const std::vector<std::optional<CompareRun>>& runs) {
  std::vector<const CompareRun*> ok;
  for (const auto& r : runs)
    if (r) ok.push_back(&*r);
  if (ok.empty()) return;
  const auto m = ok.front()->l_qdsc.size();
  std::string text = "state,L_qdsc,L_qdt,std_qdsc,std_qdt\n";
  for (Eigen::Index j = 0; j < m; ++j) {
    double sq = 0, st = 0, sq2 = 0, st2 = 0;
    for (const auto* r : ok) {
      sq += r->l_qdsc(j);
      st += r->l_qdt(j);
      sq2 += r->l_qdsc(j) * r->l_qdsc(j);
      st2 += r->l_qdt(j) * r->l_qdt(j);
    }
    const double k = static_cast<double>(ok.size());
    const double b = k > 1 ? k / (k - 1) : 0.0;
    const double mq = sq / k, mt = st / k;
    text += std::to_string(j) + "," + std::to_string(mq) + "," + std::to_string(mt) + "," +
            std::to_string(std::sqrt(std::max(0.0, (sq2 / k - mq * mq) * b))) + "," +
            std::to_string(std::sqrt(std::max(0.0, (st2 / k - mt * mt) * b))) + "\n";
  }
  write_text_atomic(path, text);
}

Json cmd_compare(const Options& o, const ExperimentConfig& c) {
  const Device device = resolve_device(c);
  const ProbeSet nominal = states_for(o, c);
  const Batch b = load_or_simulate(o, c, device, nominal);
  const int n = static_cast<int>(b.data.size());
  std::vector<std::optional<CompareRun>> runs(static_cast<std::size_t>(n));
  std::vector<Json> errors(static_cast<std::size_t>(n));
  parallel_for(n, c.workers, [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      runs[k] = compare_run(device, nominal, b.data[k], c);
      write_json(fs::path(c.output_dir) / ("compare_" + b.names[k] + ".json"), to_json(*runs[k]));
    } catch (const std::exception& e) {
      errors[k] = failure_entry(b.names[k], e);
    }
  });
  Json failures = Json::array();
  for (int i = 0; i < n; ++i)
    if (!runs[static_cast<std::size_t>(i)]) failures.push_back(errors[static_cast<std::size_t>(i)]);
  const CompareSummary s = summarize(runs, c.seed);
  require_some_success(s.runs_ok, failures, "compare");
  write_l_table(fs::path(c.output_dir) / "l_table.csv", runs);
  Json doc = to_json(s);
  doc["failures"] = failures;
  write_json(fs::path(c.output_dir) / "compare_summary.json", doc);
  doc["status"] = "ok";
  doc["command"] = "compare";
  return doc;
}

Json cmd_subsample(const Options& o, const ExperimentConfig& c) {
  const Device device = resolve_device(c);
  ProbMatrix data;
  if (!o.data.empty()) {
    data = read_dataset(dataset_files(o.data).front()).frequencies;
  } else {
    const ProbeSet nominal = resolve_probes(c);
    data = simulate_run(device.povm, prepared_states(nominal, c), c, 0).frequencies;
  }
  const QtRep reference =
      o.reference_path.empty() ? qt_from_povm(device.povm) : qt_from_json(read_json(o.reference_path));
  const auto rows = subsample_study(data, reference, c.m_list, c.subsets, qdsc_config(c), c.seed, c.workers);
  std::string text = "m,median_infidelity,mean_infidelity,std_infidelity,subsets,failures\n";
  Json table = Json::array();
  for (const auto& r : rows) {
    char line[256];
    std::snprintf(line, sizeof line, "%d,%.10e,%.10e,%.10e,%d,%d\n", r.m, r.median_infidelity, r.mean_infidelity,
                  r.std_infidelity, r.subsets, r.failures);
    text += line;
    table.push_back({{"m", r.m},
                     {"median_infidelity", r.median_infidelity},
                     {"mean_infidelity", r.mean_infidelity},
                     {"std_infidelity", r.std_infidelity},
                     {"failures", r.failures}});
  }
  write_text_atomic(fs::path(c.output_dir) / "subsample.csv", text);
  return Json{{"status", "ok"}, {"command", "subsample"}, {"rows", table}};
}

Json cmd_validate_loop(const Options& o, const ExperimentConfig& c) {
  const Device device = resolve_device(c);
  const ProbeSet probes = states_for(o, c);
  std::optional<ProbMatrix> data;
  if (!o.data.empty()) data = read_dataset(dataset_files(o.data).front()).frequencies;
  const LoopResult r = validate_loop(device, probes, c, data);
  const fs::path out = c.output_dir;

  // Long table: one row per state and run.
  std::string rows = "state,run,calibrated_vs_reference,ideal_vs_reference,calibrated_overlap,"
                     "reference_overlap,ideal_overlap\n";
  const auto& s = r.study;
  for (Eigen::Index j = 0; j < s.calibrated_vs_reference.rows(); ++j)
    for (Eigen::Index k = 0; k < s.calibrated_vs_reference.cols(); ++k) {
      char line[256];
      std::snprintf(line, sizeof line, "%ld,%ld,%.12f,%.12f,%.12f,%.12f,%.12f\n", static_cast<long>(j),
                    static_cast<long>(k), s.calibrated_vs_reference(j, k), s.ideal_vs_reference(j, k),
                    s.calibrated_overlap(j, k), s.reference_overlap(j, k), s.ideal_overlap(j, k));
      rows += line;
    }
  write_text_atomic(out / "loop_runs.csv", rows);

  // Per-state mean and spread over runs.
  auto table = [](const RealMatrix& f) {
    std::string text = "state,fidelity,std\n";
    for (Eigen::Index j = 0; j < f.rows(); ++j) {
      const double mu = f.row(j).mean();
      const double var =
          f.cols() > 1 ? (f.row(j).array() - mu).square().sum() / static_cast<double>(f.cols() - 1) : 0.0;
      char line[128];
      std::snprintf(line, sizeof line, "%ld,%.12f,%.12f\n", static_cast<long>(j), mu, std::sqrt(var));
      text += line;
    }
    return text;
  };
  write_text_atomic(out / "loop_calibrated_vs_reference.csv", table(s.calibrated_vs_reference));
  write_text_atomic(out / "loop_ideal_vs_reference.csv", table(s.ideal_vs_reference));
  write_text_atomic(out / "loop_calibrated_overlap.csv", table(s.calibrated_overlap));
  write_text_atomic(out / "loop_reference_overlap.csv", table(s.reference_overlap));
  write_text_atomic(out / "loop_ideal_overlap.csv", table(s.ideal_overlap));
  write_json(out / "loop_calibrated_povm.json", to_json(r.calibrated));
  write_json(out / "loop_reference_povm.json", to_json(r.reference));
  Json doc{{"schema", kSchema},
           {"type", "loop-summary"},
           {"mean_calibrated_vs_reference", r.mean_calibrated_vs_reference},
           {"mean_ideal_vs_reference", r.mean_ideal_vs_reference},
           {"rows", s.calibrated_vs_reference.size()}};
  write_json(out / "loop_summary.json", doc);
  doc["status"] = "ok";
  doc["command"] = "validate-loop";
  return doc;
}

// Rebuilds the summary from compare_*.json files.
Json cmd_report(const Options& o, const ExperimentConfig& c) {
  const fs::path in = o.input_dir.empty() ? fs::path(c.output_dir) : fs::path(o.input_dir);
  if (!fs::is_directory(in)) throw Error(ErrorKind::kIo, "report: no such directory " + in.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("compare_run", 0) == 0 && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::kIo, "report: no compare_run*.json files in " + in.string());

  auto vec = [](const Json& a) {
    const auto v = a.get<std::vector<double>>();
    return RealVector(Eigen::Map<const RealVector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  std::vector<std::optional<CompareRun>> runs;
  for (const auto& f : files) {
    const Json d = read_json(f);
    CompareRun r;
    try {
      r.fq_methods = d.at("F_Q");
      r.ft_methods = d.at("F_t");
      r.fq_qdsc_truth = d.at("F_Q_qdsc_truth");
      r.ft_qdsc_truth = d.at("F_t_qdsc_truth");
      r.fq_qdt_truth = d.at("F_Q_qdt_truth");
      r.ft_qdt_truth = d.at("F_t_qdt_truth");
      r.l_qdsc = vec(d.at("L_qdsc"));
      r.l_qdt = vec(d.at("L_qdt"));
      r.element_fidelity = d.at("element_fidelity").get<std::vector<double>>();
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::kInvalidInput, f.string() + ": " + e.what());
    }
    runs.emplace_back(std::move(r));
  }
  const CompareSummary s = summarize(runs, c.seed);
  Json doc = to_json(s);
  doc["source"] = in.string();
  // an explicit -o wins; otherwise the report sits next to its input
  const fs::path out = o.output_dir ? fs::path(*o.output_dir) : in;
  fs::create_directories(out);
  write_json(out / "report.json", doc);
  write_l_table(out / "l_table.csv", runs);

  char text[1024];
  std::string body = "Infidelities log10(1-F) between QDT and QDSC\n";
  std::snprintf(text, sizeof text, "  Q: %.4f\n  t: %.4f\n", doc["table_s1"]["log10_infidelity_Q"].get<double>(),
                doc["table_s1"]["log10_infidelity_t"].get<double>());
  body += text;
  if (!s.mean_element_fidelity.empty()) {
    body += "Element fidelities (%)\n";
    for (std::size_t k = 0; k < s.mean_element_fidelity.size(); ++k) {
      std::snprintf(text, sizeof text, "  pi_%zu: %.2f\n", k, 100.0 * s.mean_element_fidelity[k]);
      body += text;
    }
  }
  std::snprintf(text, sizeof text, "Mean L excess: qdsc %.3e, qdt %.3e\n", s.violations_qdsc.mean_excess,
                s.violations_qdt.mean_excess);
  body += text;
  write_text_atomic(out / "report.txt", body);
  doc["status"] = "ok";
  doc["command"] = "report";
  return doc;
}

void print_error(const std::string& kind, const std::string& stage, const std::string& message) {
  std::cerr << Json{{"status", "error"}, {"error", kind}, {"stage", stage}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Qubit measurement self-characterization and detector tomography"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--device", o.device, "mub6 | sic4 | real_mub4 | POVM JSON path");
    sub->add_option("--probes", o.probes, "grid50 | icosahedron12 | random-<m> | probe-set JSON path");
    sub->add_option("--shots", o.shots, "shots per probe state (0: exact probabilities)");
    sub->add_option("--runs", o.runs, "number of runs");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--workers", o.workers, "worker threads");
    sub->add_option("--restarts", o.restarts, "optimizer restarts");
    sub->add_option("--rank-threshold", o.rank_threshold, "relative singular value threshold");
    sub->add_flag("--automatic-rank", o.automatic_rank, "choose the rank at the largest singular value gap");
    sub->add_option("--misalignment-deg", o.misalignment, "probe axis misalignment (deg)");
    sub->add_option("--retardation-frac", o.retardation, "waveplate retardation error (waves)");
    sub->add_option("--jitter-deg", o.jitter, "waveplate rotation jitter (deg)");
    sub->add_option("--error-seed", o.error_seed, "seed of the preparation error draw");
    sub->add_option("--twist-deg", o.twist, "relative unitary twist of the device (deg)");
    sub->add_option("-o,--output-dir", o.output_dir, "output directory (default $POVMSCOPE_OUTPUT_DIR)");
  };
  auto with_data = [&o](CLI::App* sub) {
    sub->add_option("--data", o.data, "dataset CSV files or directories of run_*.csv");
  };
  auto with_states = [&o](CLI::App* sub) {
    sub->add_option("--states", o.states_path, "probe-set JSON with the nominal states")->check(CLI::ExistingFile);
  };

  auto* simulate = app.add_subcommand("simulate", "write simulated count datasets");
  common(simulate);
  auto* qdsc = app.add_subcommand("qdsc", "self-characterize (Q, t) from outcome statistics");
  common(qdsc);
  with_data(qdsc);
  auto* qdt = app.add_subcommand("qdt", "detector tomography with known probe states");
  common(qdt);
  with_data(qdt);
  with_states(qdt);
  auto* compare = app.add_subcommand("compare", "run both methods on identical data");
  common(compare);
  with_data(compare);
  with_states(compare);
  auto* subsample = app.add_subcommand("subsample", "infidelity vs number of probe states");
  common(subsample);
  with_data(subsample);
  subsample->add_option("--m", o.m_list, "subset sizes (each >= 9)");
  subsample->add_option("--subsets", o.subsets, "random subsets per size");
  subsample->add_option("--reference", o.reference_path, "reference (Q, t) JSON")->check(CLI::ExistingFile);
  auto* loop = app.add_subcommand("validate-loop", "state tomography with the calibrated device");
  common(loop);
  with_data(loop);
  with_states(loop);
  auto* report = app.add_subcommand("report", "summarize compare outputs");
  common(report);
  report->add_option("--input", o.input_dir, "directory holding compare_run*.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    print_error("usage", "arguments", e.what());
    return 2;
  }

  try {
    const ExperimentConfig c = build_config(o);
    Json result;
    if (*simulate) result = cmd_simulate(o, c);
    else if (*qdsc) result = cmd_qdsc(o, c);
    else if (*qdt) result = cmd_qdt(o, c);
    else if (*compare) result = cmd_compare(o, c);
    else if (*subsample) result = cmd_subsample(o, c);
    else if (*loop) result = cmd_validate_loop(o, c);
    else if (*report) result = cmd_report(o, c);
    std::cout << result.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    print_error(std::string(to_string(e.kind())), e.stage(), e.what());
    return e.kind() == ErrorKind::kIo ? 3 : 1;
  } catch (const std::exception& e) {
    print_error("internal", "", e.what());
    return 1;
  }
}
