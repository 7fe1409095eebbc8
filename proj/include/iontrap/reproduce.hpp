#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace iontrap {

struct ReproduceOptions {
  std::uint64_t seed = 20061;
  bool fast = false;          // fewer trials, looser tolerances
  unsigned workers = 1;
  bool include_extras = true; // stages beyond the numbered acceptance rows
  std::vector<int> only;      // row ids to run; empty runs everything
};

struct StageOutcome {
  bool passed = false;
  std::string detail;
};

struct RetryOutcome {
  bool passed = false;
  int attempts = 0;
  int passes = 0;
  std::vector<StageOutcome> history;
};

/// Runs `attempt(k)` for k = 0, 1, ... and stops as soon as a majority of
/// `max_attempts` (2 of 3 by default) have passed or have failed.
RetryOutcome majority_retry(const std::function<StageOutcome(int)>& attempt, int max_attempts = 3);

struct AcceptanceRow {
  int id = 0;           // 1..10 for acceptance rows, 100+ for extra stages
  std::string name;
  bool statistical = false;
  bool passed = false;
  int attempts = 0;
  int passes = 0;
  std::string detail;   // numbers behind the verdict (last attempt)
  double seconds = 0;
};

struct ReproduceReport {
  std::vector<AcceptanceRow> rows;
  bool fast = false;
  std::uint64_t seed = 0;

  bool all_passed() const;
  /// One line per row: "PASS  5  closed-loop Raman ...  | detail".
  std::string table() const;
  nlohmann::json to_json() const;
};

/// Executes the acceptance rows (and, optionally, the extra reproduce stages).
/// Statistical rows go through majority_retry with attempt-specific seeds.
/// Errors inside a stage fail that row with the stage name and message.
ReproduceReport run_reproduce(const ReproduceOptions& options = {});

}  // namespace iontrap
