#include "pdflow/verify.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace pdflow;

namespace {

std::vector<std::string> details(const std::vector<CriterionResult>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(std::to_string(r.id) + (r.passed ? "+" : "-") + r.detail);
  return out;
}

}  // namespace

TEST_CASE("one trial per property") {
  const auto rs = run_verification(VerifyOptions::with_trials(1, 7));
  REQUIRE(rs.size() == 9);
  CHECK(rs[0].detail.rfind("1 instances", 0) == 0);
  CHECK(rs[1].detail.rfind("1 runs", 0) == 0);
  CHECK(rs[2].detail.rfind("1 runs", 0) == 0);
  CHECK(rs[4].detail.rfind("1 runs", 0) == 0);
  CHECK(rs[5].detail.rfind("1 cyclic runs", 0) == 0);
  CHECK(rs[6].detail.rfind("1 tree instances", 0) == 0);
  CHECK(rs[7].detail.rfind("1 runs", 0) == 0);
  CHECK(rs[8].detail.rfind("1 runs", 0) == 0);
  for (std::size_t k = 0; k < rs.size(); ++k) CHECK(rs[k].id == int(k) + 1);
}

TEST_CASE("deterministic for a fixed seed") {
  VerifyOptions opt = VerifyOptions::with_trials(3, 99);
  CHECK(details(run_verification(opt)) == details(run_verification(opt)));
}

TEST_CASE("corrupted oracle fails the agreement check") {
  VerifyOptions opt = VerifyOptions::with_trials(5, 42);
  const auto clean = check_dynamics(opt);
  REQUIRE(clean.size() == 3);
  CHECK(clean[1].passed);

  opt.oracle_corruption = 0.01;
  const auto bad = check_dynamics(opt);
  CHECK_FALSE(bad[1].passed);
  CHECK(bad[1].detail.find("5 failures") != std::string::npos);
}

TEST_CASE("fixture criterion") {
  const auto r = check_fixture(std::filesystem::path(PDFLOW_DATA_DIR) / "nine_bus.scenario");
  CHECK(r.passed);
  CHECK(r.detail.find("VSC2->VSC3->VSC1") != std::string::npos);
}

TEST_CASE("result lines") {
  std::ostringstream os;
  print_results(os, {{3, "name", true, "ok", 0.5}, {4, "other", false, "bad", 1.0}});
  CHECK(os.str() == "[PASS] 3 name (0.5 s): ok\n[FAIL] 4 other (1 s): bad\n");
}
