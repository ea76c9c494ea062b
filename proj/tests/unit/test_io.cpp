#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "povmscope/io.hpp"
#include "support.hpp"

using namespace povmscope;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "povmscope-unit-io";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}
}  // namespace

TEST_CASE("POVM JSON round trip is exact") {
  std::mt19937_64 rng(2);
  const Povm p = testing_support::random_povm(5, rng);
  const Json doc = to_json(p);
  CHECK(doc["schema"] == kSchema);
  const Povm back = povm_from_json(Json::parse(doc.dump()));
  REQUIRE(back.size() == p.size());
  for (std::size_t k = 0; k < p.size(); ++k) CHECK(back.elements[k].matrix == p.elements[k].matrix);
}

TEST_CASE("(Q, t) and probe-set JSON round trips") {
  QtRep qt = qt_from_povm(build_standard(StandardPovm::kMub6));
  qt.rank = 3;
  const QtRep back = qt_from_json(Json::parse(to_json(qt).dump()));
  CHECK(back.q == qt.q);
  CHECK(back.t == qt.t);
  CHECK(back.rank == 3);

  const ProbeSet s = icosahedron_states();
  const ProbeSet sb = probe_set_from_json(Json::parse(to_json(s).dump()));
  REQUIRE(sb.size() == 12);
  CHECK(sb.labels == s.labels);
  for (std::size_t i = 0; i < 12; ++i) CHECK(sb.states[i].vector() == s.states[i].vector());
}

TEST_CASE("configuration records round trip") {
  ErrorModel e;
  e.misalignment_deg = 1.5;
  e.retardation_frac = 0.01;
  e.seed = 99;
  const ErrorModel eb = error_model_from_json(to_json(e));
  CHECK(eb.misalignment_deg == 1.5);
  CHECK(eb.retardation_frac == 0.01);
  CHECK(eb.seed == 99);
  OptimizerConfig c;
  c.restarts = 5;
  c.seed = 7;
  const OptimizerConfig cb = optimizer_from_json(to_json(c));
  CHECK(cb.restarts == 5);
  CHECK(cb.seed == 7);
  CHECK(optimizer_from_json(Json::object(), c).restarts == 5);
}

TEST_CASE("malformed JSON is rejected with kInvalidInput") {
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kIo;
  };
  CHECK(kind_of([] { povm_from_json(Json::array()); }) == ErrorKind::kInvalidInput);
  CHECK(kind_of([] { povm_from_json(Json{{"elements", Json::array()}}); }) == ErrorKind::kInvalidInput);
  Json wrong = to_json(build_standard(StandardPovm::kSic4));
  wrong["schema"] = "other/9";
  CHECK(kind_of([&] { povm_from_json(wrong); }) == ErrorKind::kInvalidInput);
  CHECK(kind_of([] { qt_from_json(Json{{"Q", {1, 2, 3}}, {"t", {0.5, 0.5}}}); }) == ErrorKind::kInvalidInput);
  CHECK(kind_of([] { probe_set_from_json(Json{{"states", {{0, 1}}}}); }) == ErrorKind::kInvalidInput);
  ErrorModel neg;
  neg.misalignment_deg = -1;
  CHECK(kind_of([&] { error_model_from_json(to_json(neg)); }) == ErrorKind::kInvalidInput);
}

TEST_CASE("counts CSV round trip") {
  const ProbMatrix exact = born_matrix(build_standard(StandardPovm::kSic4), probe_grid());
  const CountsMatrix c = sample_counts(exact, 1000, 3);
  DatasetMeta meta;
  meta.shots = 1000;
  meta.seed = 3;
  meta.device = "sic4";
  meta.labels = probe_grid().labels;
  const fs::path csv = scratch("counts.csv");
  write_counts(csv, c, meta);
  CHECK(fs::exists(sidecar_path(csv)));
  const Dataset d = read_dataset(csv);
  REQUIRE(d.counts);
  CHECK(d.counts->counts == c.counts);
  CHECK(d.meta.kind == "counts");
  CHECK(d.meta.shots == 1000);
  CHECK(d.meta.device == "sic4");
  CHECK((d.frequencies.values - c.frequencies().values).cwiseAbs().maxCoeff() < 1e-15);

  // without the sidecar the integer layout is still recognized
  fs::remove(sidecar_path(csv));
  const Dataset guessed = read_dataset(csv);
  CHECK(guessed.counts);
  CHECK((guessed.frequencies.values - d.frequencies.values).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("probability CSV round trip keeps full precision") {
  const ProbMatrix exact = born_matrix(build_standard(StandardPovm::kMub6), probe_grid());
  DatasetMeta meta;
  meta.kind = "probabilities";
  const fs::path csv = scratch("probs.csv");
  write_probabilities(csv, exact, meta);
  const Dataset d = read_dataset(csv);
  CHECK_FALSE(d.counts);
  CHECK(d.frequencies.values == exact.values);
}

TEST_CASE("malformed CSV input") {
  const fs::path bad_header = scratch("bad_header.csv");
  write_file(bad_header, "a,b\n1,2\n");
  CHECK_THROWS_AS(read_dataset(bad_header), Error);
  const fs::path ragged = scratch("ragged.csv");
  write_file(ragged, "outcome_0,outcome_1\n1,2\n3\n");
  CHECK_THROWS_AS(read_dataset(ragged), Error);
  const fs::path neg = scratch("neg.csv");
  write_file(neg, "outcome_0,outcome_1\n-1,2\n");
  CHECK_THROWS_AS(read_dataset(neg), Error);
  try {
    read_dataset(scratch("missing.csv"));
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIo);
  }
}

TEST_CASE("atomic JSON write leaves no temporary behind") {
  const fs::path p = scratch("doc.json");
  write_json(p, Json{{"a", 1}});
  CHECK(read_json(p)["a"] == 1);
  for (const auto& entry : fs::directory_iterator(p.parent_path()))
    CHECK(entry.path().filename().string().find(".tmp") == std::string::npos);
}
