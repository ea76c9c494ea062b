#pragma once
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "povmscope/optimize.hpp"
#include "povmscope/qubit.hpp"
#include "povmscope/sim.hpp"

namespace povmscope {

using Json = nlohmann::json;

inline constexpr const char* kSchema = "povm-scope/1";

Json to_json(const Povm& p);
Povm povm_from_json(const Json& doc);

// Q stored row-major as a flat list of n*n numbers.
Json to_json(const QtRep& qt);
QtRep qt_from_json(const Json& doc);

Json to_json(const ProbeSet& s);
ProbeSet probe_set_from_json(const Json& doc);

Json to_json(const FitDiagnostics& d);
Json to_json(const ErrorModel& e);
ErrorModel error_model_from_json(const Json& doc, ErrorModel base = {});
Json to_json(const OptimizerConfig& c);
OptimizerConfig optimizer_from_json(const Json& doc, OptimizerConfig base = {});

// Outcome data on disk: <name>.csv with header outcome_0..outcome_{n-1} and
// one row per probe state, plus <name>.json next to it.
struct DatasetMeta {
  std::string kind = "counts";  // "counts" or "probabilities"
  std::int64_t shots = 0;
  std::uint64_t seed = 0;
  int run = 0;
  std::string device;
  std::vector<std::string> labels;
};

struct Dataset {
  ProbMatrix frequencies;
  std::optional<CountsMatrix> counts;
  DatasetMeta meta;
};

void write_counts(const std::filesystem::path& csv, const CountsMatrix& c, const DatasetMeta& meta);
void write_probabilities(const std::filesystem::path& csv, const ProbMatrix& p,
                         const DatasetMeta& meta);
// Reads either layout. Counts are normalized per column. The sidecar is
// optional; without it the kind is guessed from integrality.
Dataset read_dataset(const std::filesystem::path& csv);

std::filesystem::path sidecar_path(const std::filesystem::path& csv);

// Write to a temporary sibling and rename, so readers never see partial files.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& doc);
Json read_json(const std::filesystem::path& path);

}  // namespace povmscope
