#pragma once

// Family runners: walk-forward, gate and run-directory output.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "falsify/config.hpp"
#include "falsify/report.hpp"
#include "falsify/synth.hpp"
#include "falsify/walk_forward.hpp"

namespace falsify {

// Complete days per session plus the high-impact calendar.
struct DataSet {
  std::vector<TradingDay> rth;
  std::vector<TradingDay> asia;
  std::vector<TradingDay> london;
  std::vector<EconEvent> events;
};

// Relative paths resolve against `base`.
DataSet load_dataset(const DataPaths& paths, const Instrument& instrument, const std::filesystem::path& base = {});

struct SynthDataSet {
  DataSet data;
  std::vector<SignalEvent> planted;  // RTH ground truth (edge corpora only)
  std::vector<std::vector<int>> rth_labels;
};

// RTH days from `spec` (null, edge or regime), plus ASIA and LONDON null
// sessions on the same dates and a synthetic event calendar when
// `all_sessions` is set.
SynthDataSet synth_dataset(const SynthSpec& spec, const Instrument& instrument, bool all_sessions = true);

Session family_session(Family f);

struct FamilyOutcome {
  Family family = Family::ORB_LONG;
  WalkForwardResult walk_forward;
  RunReport report;
};

struct RunOptions {
  bool parallel = true;
};

// Walk-forward fitter for one family, bound to the data set and config.
FitFn family_fit(Family family, const DataSet& data, const RunConfig& config);

// Throws ConfigError when the family has no grid and DataError when its
// session data is missing.
FamilyOutcome run_family(const DataSet& data, const RunConfig& config, Family family,
                         const RunOptions& options = {});
// Checks every family's grid and data before running any of them.
std::vector<FamilyOutcome> run_families(const DataSet& data, const RunConfig& config,
                                        std::span<const Family> families, const RunOptions& options = {});

// Writes config.json, summary.{md,json}, reports/<FAMILY>.{md,json} and
// trades/<FAMILY>.csv. Output depends only on the arguments.
void write_run_directory(const std::filesystem::path& dir, const RunConfig& config,
                         std::span<const FamilyOutcome> outcomes);

// Re-renders reports/<FAMILY>.md from trades/<FAMILY>.csv and the stored
// structured record.
std::string regenerate_report(const std::filesystem::path& run_dir, Family family, const RunConfig& config);

}  // namespace falsify
