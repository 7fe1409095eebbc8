#include <doctest.h>

#include <vector>

#include "iontrap/reproduce.hpp"

using namespace iontrap;

namespace {
RetryOutcome replay(std::vector<bool> script) {
  return majority_retry([&](int k) { return StageOutcome{script.at(static_cast<std::size_t>(k)), ""}; });
}
}  // namespace

TEST_CASE("majority retry stops as soon as the verdict is settled") {
  auto r = replay({true, true, false});
  CHECK(r.passed);
  CHECK(r.attempts == 2);
  r = replay({false, false, true});
  CHECK_FALSE(r.passed);
  CHECK(r.attempts == 2);
  r = replay({true, false, true});
  CHECK(r.passed);
  CHECK(r.attempts == 3);
  CHECK(r.passes == 2);
  r = replay({false, true, false});
  CHECK_FALSE(r.passed);
  CHECK(r.history.size() == 3);
}

TEST_CASE("a flaky stage passing 2 times in 3 is accepted") {
  int calls = 0;
  const auto r = majority_retry([&](int) { return StageOutcome{++calls % 3 != 1, ""}; });
  CHECK(r.passed);
  CHECK(calls == 3);
}

TEST_CASE("analytic rows of the reproduce table") {
  ReproduceOptions o;
  o.fast = true;
  o.include_extras = false;
  o.only = {1, 2, 3, 4};
  const auto report = run_reproduce(o);
  REQUIRE(report.rows.size() == 4);
  for (const auto& row : report.rows) {
    CAPTURE(row.detail);
    CHECK(row.passed);
  }
  CHECK(report.all_passed());
  CHECK(report.to_json().at("rows").size() == 4);
  CHECK(report.table().find("PASS") != std::string::npos);
}
