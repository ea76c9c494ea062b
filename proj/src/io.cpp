#include "povmscope/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace povmscope {
namespace fs = std::filesystem;

namespace {

void check_schema(const Json& doc, const char* what) {
  if (!doc.is_object()) throw Error(ErrorKind::kInvalidInput, std::string(what) + ": expected a JSON object");
  if (doc.contains("schema") && doc["schema"] != kSchema) {
    throw Error(ErrorKind::kInvalidInput,
                std::string(what) + ": unsupported schema " + doc["schema"].dump());
  }
}

template <typename T>
T field(const Json& doc, const char* key) {
  if (!doc.contains(key)) throw Error(ErrorKind::kInvalidInput, std::string("missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("field '") + key + "': " + e.what());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

std::string header(Eigen::Index n) {
  std::string h;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k) h += ',';
    h += "outcome_" + std::to_string(k);
  }
  return h + '\n';
}

Json meta_json(const DatasetMeta& meta, Eigen::Index n, Eigen::Index m) {
  return Json{{"schema", kSchema},   {"kind", meta.kind},     {"outcomes", n},
              {"states", m},         {"shots", meta.shots},   {"seed", meta.seed},
              {"run", meta.run},     {"device", meta.device}, {"labels", meta.labels}};
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".json");
  return p;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot rename " + tmp.string() + ": " + ec.message());
}

void write_json(const fs::path& path, const Json& doc) { write_text_atomic(path, doc.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, path.string() + ": " + e.what());
  }
}

Json to_json(const Povm& p) {
  Json elements = Json::array();
  for (const auto& e : p.elements) {
    Json rows = Json::array();
    for (int i = 0; i < 2; ++i) {
      Json row = Json::array();
      for (int j = 0; j < 2; ++j) row.push_back({e.matrix(i, j).real(), e.matrix(i, j).imag()});
      rows.push_back(row);
    }
    elements.push_back(rows);
  }
  return Json{{"schema", kSchema}, {"type", "povm"}, {"n", p.size()}, {"elements", elements}};
}

Povm povm_from_json(const Json& doc) {
  check_schema(doc, "povm");
  const Json& elements = doc.contains("elements") ? doc["elements"] : Json();
  if (!elements.is_array() || elements.size() < 2)
    throw Error(ErrorKind::kInvalidInput, "povm: 'elements' must list at least two 2x2 matrices");
  std::vector<Matrix2c> mats;
  for (const auto& e : elements) {
    Matrix2c m;
    try {
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          const Json& entry = e.at(i).at(j);
          m(i, j) = entry.is_array() ? Complex(entry.at(0).get<double>(), entry.at(1).get<double>())
                                     : Complex(entry.get<double>(), 0.0);
        }
    } catch (const Json::exception& ex) {
      throw Error(ErrorKind::kInvalidInput, std::string("povm: malformed element: ") + ex.what());
    }
    mats.push_back(m);
  }
  return Povm::from_matrices(mats);
}

Json to_json(const QtRep& qt) {
  const auto n = qt.outcomes();
  std::vector<double> q;
  q.reserve(static_cast<std::size_t>(n * n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) q.push_back(qt.q(i, j));
  std::vector<double> t(qt.t.data(), qt.t.data() + n);
  return Json{{"schema", kSchema}, {"type", "qt"}, {"n", n}, {"Q", q}, {"t", t}, {"rank", qt.rank}};
}

QtRep qt_from_json(const Json& doc) {
  check_schema(doc, "qt");
  const auto t = field<std::vector<double>>(doc, "t");
  const auto q = field<std::vector<double>>(doc, "Q");
  const auto n = static_cast<Eigen::Index>(t.size());
  if (n < 2 || q.size() != t.size() * t.size())
    throw Error(ErrorKind::kInvalidInput, "qt: Q must hold n*n entries for n = len(t) >= 2");
  QtRep out;
  out.t = Eigen::Map<const RealVector>(t.data(), n);
  out.q = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      q.data(), n, n);
  out.rank = doc.value("rank", 0);
  require_finite(out.q, "qt.Q");
  require_finite(out.t, "qt.t");
  return out;
}

Json to_json(const ProbeSet& s) {
  Json states = Json::array();
  for (const auto& r : s.states) states.push_back({r.x(), r.y(), r.z()});
  return Json{{"schema", kSchema}, {"type", "probe-set"}, {"states", states}, {"labels", s.labels}};
}

ProbeSet probe_set_from_json(const Json& doc) {
  check_schema(doc, "probe-set");
  const auto raw = field<std::vector<std::vector<double>>>(doc, "states");
  if (raw.empty()) throw Error(ErrorKind::kInvalidInput, "probe-set: no states");
  ProbeSet out;
  for (const auto& r : raw) {
    if (r.size() != 3) throw Error(ErrorKind::kInvalidInput, "probe-set: Bloch vectors need 3 entries");
    out.states.emplace_back(r[0], r[1], r[2]);
  }
  if (doc.contains("labels")) out.labels = doc["labels"].get<std::vector<std::string>>();
  if (out.labels.size() != out.states.size()) {
    out.labels.clear();
    for (std::size_t j = 0; j < out.states.size(); ++j) out.labels.push_back("s" + std::to_string(j));
  }
  return out;
}

Json to_json(const FitDiagnostics& d) {
  return Json{{"restarts_run", d.restarts_run},
              {"best_restart_index", d.best_restart_index},
              {"final_cost", d.final_cost},
              {"boundary_size", d.boundary_size},
              {"converged", d.converged},
              {"constraint_violation", d.constraint_violation},
              {"detected_rank", d.detected_rank}};
}

Json to_json(const ErrorModel& e) {
  return Json{{"misalignment_deg", e.misalignment_deg},
              {"retardation_frac", e.retardation_frac},
              {"rotation_jitter_deg", e.rotation_jitter_deg},
              {"seed", e.seed}};
}

ErrorModel error_model_from_json(const Json& doc, ErrorModel base) {
  base.misalignment_deg = doc.value("misalignment_deg", base.misalignment_deg);
  base.retardation_frac = doc.value("retardation_frac", base.retardation_frac);
  base.rotation_jitter_deg = doc.value("rotation_jitter_deg", base.rotation_jitter_deg);
  base.seed = doc.value("seed", base.seed);
  if (base.misalignment_deg < 0 || base.retardation_frac < 0 || base.rotation_jitter_deg < 0)
    throw Error(ErrorKind::kInvalidInput, "error_model: magnitudes must be >= 0");
  return base;
}

Json to_json(const OptimizerConfig& c) {
  return Json{{"restarts", c.restarts},
              {"max_iterations", c.max_iterations},
              {"cost_tolerance", c.cost_tolerance},
              {"constraint_penalty_weight", c.constraint_penalty_weight},
              {"seed", c.seed},
              {"start_spread", c.start_spread}};
}

OptimizerConfig optimizer_from_json(const Json& doc, OptimizerConfig base) {
  base.restarts = doc.value("restarts", base.restarts);
  base.max_iterations = doc.value("max_iterations", base.max_iterations);
  base.cost_tolerance = doc.value("cost_tolerance", base.cost_tolerance);
  base.constraint_penalty_weight = doc.value("constraint_penalty_weight", base.constraint_penalty_weight);
  base.seed = doc.value("seed", base.seed);
  base.start_spread = doc.value("start_spread", base.start_spread);
  validate(base);
  return base;
}

void write_counts(const fs::path& csv, const CountsMatrix& c, const DatasetMeta& meta) {
  std::string text = header(c.counts.rows());
  for (Eigen::Index j = 0; j < c.counts.cols(); ++j) {
    for (Eigen::Index k = 0; k < c.counts.rows(); ++k) {
      if (k) text += ',';
      text += std::to_string(c.counts(k, j));
    }
    text += '\n';
  }
  DatasetMeta m = meta;
  m.kind = "counts";
  m.shots = c.shots_per_state;
  write_text_atomic(csv, text);
  write_json(sidecar_path(csv), meta_json(m, c.counts.rows(), c.counts.cols()));
}

void write_probabilities(const fs::path& csv, const ProbMatrix& p, const DatasetMeta& meta) {
  std::string text = header(p.outcomes());
  for (Eigen::Index j = 0; j < p.states(); ++j) {
    for (Eigen::Index k = 0; k < p.outcomes(); ++k) {
      if (k) text += ',';
      text += format_double(p.values(k, j));
    }
    text += '\n';
  }
  DatasetMeta m = meta;
  m.kind = "probabilities";
  write_text_atomic(csv, text);
  write_json(sidecar_path(csv), meta_json(m, p.outcomes(), p.states()));
}

Dataset read_dataset(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kInvalidInput, csv.string() + ": empty file");
  const auto head = split_csv_line(line);
  for (std::size_t k = 0; k < head.size(); ++k)
    if (head[k] != "outcome_" + std::to_string(k))
      throw Error(ErrorKind::kInvalidInput, csv.string() + ": header must be outcome_0..outcome_{n-1}");
  const auto n = static_cast<Eigen::Index>(head.size());
  if (n < 2) throw Error(ErrorKind::kInvalidInput, csv.string() + ": need at least two outcomes");

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (static_cast<Eigen::Index>(cells.size()) != n)
      throw Error(ErrorKind::kInvalidInput,
                  csv.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(n) + " cells");
    std::vector<double> row;
    for (const auto& c : cells) {
      double v = 0.0;
      auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size() || !std::isfinite(v))
        throw Error(ErrorKind::kInvalidInput,
                    csv.string() + ":" + std::to_string(line_no) + ": bad number '" + c + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::kInvalidInput, csv.string() + ": no data rows");
  const auto m = static_cast<Eigen::Index>(rows.size());
  RealMatrix values(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = 0; k < n; ++k) values(k, j) = rows[j][k];

  Dataset out;
  const fs::path side = sidecar_path(csv);
  bool integral = (values.array() == values.array().round()).all() && (values.array() >= 0).all();
  if (fs::exists(side)) {
    const Json meta = read_json(side);
    out.meta.kind = meta.value("kind", integral ? "counts" : "probabilities");
    out.meta.shots = meta.value("shots", std::int64_t{0});
    out.meta.seed = meta.value("seed", std::uint64_t{0});
    out.meta.run = meta.value("run", 0);
    out.meta.device = meta.value("device", std::string());
    if (meta.contains("labels")) out.meta.labels = meta["labels"].get<std::vector<std::string>>();
  } else {
    out.meta.kind = integral && (values.colwise().sum().array() > 1.5).all() ? "counts" : "probabilities";
  }

  if (out.meta.kind == "counts") {
    if (!integral) throw Error(ErrorKind::kInvalidInput, csv.string() + ": counts must be nonnegative integers");
    CountsMatrix c;
    c.counts = values.cast<std::int64_t>();
    const RealVector sums = values.colwise().sum().transpose();
    if ((sums.array() <= 0).any()) throw Error(ErrorKind::kInvalidInput, csv.string() + ": empty count column");
    c.shots_per_state = out.meta.shots > 0 ? out.meta.shots : static_cast<std::int64_t>(sums(0));
    out.frequencies.values = values.array().rowwise() / sums.transpose().array();
    out.counts = c;
    if (out.meta.shots == 0) out.meta.shots = c.shots_per_state;
  } else if (out.meta.kind == "probabilities") {
    out.frequencies.values = values;
    check_prob_matrix(out.frequencies, 1e-6);
  } else {
    throw Error(ErrorKind::kInvalidInput, side.string() + ": unknown kind '" + out.meta.kind + "'");
  }
  return out;
}

}  // namespace povmscope
