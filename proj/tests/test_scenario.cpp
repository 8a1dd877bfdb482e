#include "pdflow/run.hpp"
#include "pdflow/scenario.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pdflow;
namespace fs = std::filesystem;

namespace {

const fs::path kFixture = fs::path(PDFLOW_DATA_DIR) / "nine_bus.scenario";

const char* kSmall = R"(
[graph]
nodes = 2
edge = 0 1 1.0

[converters]
base_power = 50
node = 0.1 -1 0.25 1 1 1
node = 0   -1 1    2 1 1

[schedule]
segment = 0  0.5 0
segment = 20 0.0 0.1

[sim]
h = 0.01
t_end = 40
sample_every = 10
)";

Scenario parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pdflow_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("fixture parses") {
  const Scenario sc = load_scenario(kFixture);
  CHECK(sc.graph.num_nodes() == 3);
  CHECK(sc.graph.num_edges() == 3);
  CHECK(sc.num_segments() == 6);
  CHECK(sc.base_power == 100.0);
  CHECK(sc.converters.p_star(1) == 0.875);
  CHECK(sc.sim.t_end == 240.0);
  for (std::size_t k = 0; k < sc.num_segments(); ++k) {
    CHECK(validate(sc.segment_problem(k)).ok());
  }
}

TEST_CASE("scenario rejections") {
  SUBCASE("load beyond the summed upper limits") {
    try {
      parse(replace(kSmall, "segment = 20 0.0 0.1", "segment = 20 1.0 0.25"));
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      const std::string what = e.what();
      CHECK(what.find("segment 1") != std::string::npos);
      CHECK(what.find("assumption 1") != std::string::npos);
    }
  }
  SUBCASE("empty schedule") {
    CHECK_THROWS_AS(parse(replace(replace(kSmall, "segment = 0  0.5 0", ""),
                                  "segment = 20 0.0 0.1", "")),
                    ValidationError);
  }
  SUBCASE("first segment must start at zero") {
    CHECK_THROWS_AS(parse(replace(kSmall, "segment = 0  0.5 0", "segment = 1 0.5 0")),
                    ValidationError);
  }
  SUBCASE("horizon before the last segment") {
    CHECK_THROWS_AS(parse(replace(kSmall, "t_end = 40", "t_end = 20")), ValidationError);
  }
  SUBCASE("malformed number carries the line") {
    try {
      parse(replace(kSmall, "edge = 0 1 1.0", "edge = 0 1 one"));
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
    }
  }
  SUBCASE("unknown field") {
    CHECK_THROWS_AS(parse(replace(kSmall, "h = 0.01", "step = 0.01")), ParseError);
  }
  SUBCASE("disconnected graph") {
    CHECK_THROWS_AS(parse(replace(replace(kSmall, "nodes = 2", "nodes = 3"),
                                  "node = 0   -1 1    2 1 1",
                                  "node = 0   -1 1    2 1 1\nnode = 0 -1 1 1 1 1")),
                    StructuralError);
  }
}

TEST_CASE("fixture run") {
  const Scenario sc = load_scenario(kFixture);
  Trajectory<double> traj;
  const RunReport rep = run(sc, {}, &traj);
  REQUIRE(rep.completed);
  REQUIRE(rep.segments.size() == 6);

  CHECK(rep.all_agree());
  CHECK(upper_saturation_order(rep) == std::vector<Index>{1, 2, 0});

  bool balanced_seen = false;
  for (const auto& s : rep.segments) {
    if (s.prediction.frequency_case != FrequencyCase::balanced) continue;
    balanced_seen = true;
    CHECK(std::abs(s.sync.omega_s_estimate) < 1e-4);
  }
  CHECK(balanced_seen);

  for (const auto& s : traj.states) {
    CHECK(s.lambda_lo.minCoeff() >= 0.0);
    CHECK(s.lambda_hi.minCoeff() >= 0.0);
  }
  for (std::size_t k = 1; k < traj.size(); ++k) CHECK(traj.times[k] > traj.times[k - 1]);
}

TEST_CASE("run output") {
  const Scenario sc = parse(kSmall);
  const fs::path a = scratch_dir("a"), b = scratch_dir("b");
  RunOptions opt;
  opt.out_dir = a;
  const RunReport ra = run(sc, opt);
  opt.out_dir = b;
  run(sc, opt);

  REQUIRE(ra.files.size() == 3);
  for (const auto& f : ra.files) {
    const fs::path twin = b / f.filename();
    CHECK(slurp(f) == slurp(twin));
    CHECK(!slurp(f).empty());
  }

  // Megawatt figures are the per-unit injections times the base power.
  std::istringstream rep(slurp(a / "report.txt"));
  std::size_t seg = 0;
  for (std::string line; std::getline(rep, line);) {
    if (line.rfind("injections_mw:", 0) != 0) continue;
    std::istringstream values(line.substr(14));
    for (Index i = 0; i < 2; ++i) {
      double mw = 0;
      values >> mw;
      std::ostringstream expected;
      expected.precision(12);
      expected << ra.segments[seg].final_injections(i) * sc.base_power;
      std::ostringstream got;
      got.precision(12);
      got << mw;
      CHECK(got.str() == expected.str());
    }
    ++seg;
  }
  CHECK(seg == ra.segments.size());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("divergence yields a partial report") {
  const Scenario sc = parse(kSmall);
  RunOptions opt;
  opt.h = 5.0;
  opt.t_end = 40.0;
  Scenario wild = sc;
  wild.sim.t_end = 1e5;
  opt.t_end = 1e5;
  const RunReport rep = run(wild, opt);
  CHECK_FALSE(rep.completed);
  CHECK_FALSE(rep.error.empty());
  CHECK_FALSE(rep.all_agree());
}

TEST_CASE("prediction CSV") {
  const Scenario sc = load_scenario(kFixture);
  const fs::path dir = scratch_dir("pred");
  fs::create_directories(dir);
  const fs::path csv = dir / "pred.csv";
  for (std::size_t k = 0; k < sc.num_segments(); ++k) {
    append_prediction_csv(csv, k, predict(sc.segment_problem(k)));
  }
  std::istringstream in(slurp(csv));
  std::string line;
  std::getline(in, line);
  CHECK(line == "segment,case,omega_s,active_lower,active_upper");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == sc.num_segments());
  fs::remove_all(dir);
}
