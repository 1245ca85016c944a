#pragma once

// Trade statistics, placement-randomization permutation test, year
// stability and the five-criteria gate.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "falsify/execution.hpp"
#include "falsify/market_data.hpp"

namespace falsify {

// One-sample t of the mean against zero; n-1 sample std. Absent when n < 2
// or the sample has zero variance.
std::optional<double> t_statistic(std::span<const double> values);

struct YearMetrics {
  std::size_t n = 0;
  double mean_net = 0.0;
  std::optional<double> t_stat;
};

struct EvalMetrics {
  std::size_t n = 0;
  std::optional<double> mean_gross;  // points
  std::optional<double> mean_net;    // points
  std::optional<double> t_stat;      // on nets
  std::optional<double> t_stat_gross;
  std::optional<double> win_rate;
  std::optional<double> profit_factor;  // absent when there are no losing trades
  std::optional<double> sharpe;         // per-trade mean / std of nets
  std::map<int, YearMetrics> per_year;
  std::optional<double> permutation_p;
};

EvalMetrics summary_metrics(std::span<const TradeRecord> trades, const Instrument& instrument);

// Standard error of the mean return with trades clustered by session date
// (overlapping trades within a day are correlated); CR1 factor G/(G-1).
// Absent with fewer than two dates.
std::optional<double> clustered_standard_error(std::span<const TradeRecord> trades, const Instrument& instrument,
                                               bool gross);

// Trades of one fold together with the days and exit rule they may be
// re-placed into.
struct PermutationSegment {
  std::span<const TradeRecord> trades;
  std::span<const TradingDay> days;
  ExitSpec exit;
};

struct PermutationOptions {
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
};

// Null: the same number of entries (with the observed directions) placed at
// uniformly random admissible (day, bar) positions and re-simulated with the
// same exit and friction. p = (1 + #{null mean >= observed mean}) / (iters + 1).
double permutation_test(std::span<const TradeRecord> trades, std::span<const TradingDay> day_pool,
                        const ExitSpec& exit, const FrictionModel& friction, const Instrument& instrument,
                        const PermutationOptions& options);
double permutation_test(std::span<const PermutationSegment> segments, const FrictionModel& friction,
                        const Instrument& instrument, const PermutationOptions& options);
// Single-threaded reference; returns exactly the same p.
double permutation_test_serial(std::span<const PermutationSegment> segments, const FrictionModel& friction,
                               const Instrument& instrument, const PermutationOptions& options);

struct YearStability {
  bool stable = false;
  std::vector<int> checked_years;
  std::vector<int> excluded_years;  // fewer than min_trades
};

// Every checked year's mean net shares the pooled sign and no checked year
// has |t| > 1 against it. Needs at least two checked years.
YearStability year_stability_detail(const std::map<int, YearMetrics>& per_year, std::size_t min_trades = 5);
bool year_stability(const std::map<int, YearMetrics>& per_year, std::size_t min_trades = 5);

struct GateConfig {
  double t_min = 2.0;
  std::size_t n_min = 30;
  double p_max = 0.05;
  bool permutation_applicable = true;
  std::size_t year_min_trades = 5;

  friend bool operator==(const GateConfig&, const GateConfig&) = default;
};

struct Verdict {
  bool t_ok = false;
  bool n_ok = false;
  bool net_ok = false;
  bool year_stable = false;
  bool perm_ok = false;
  bool overall = false;
  std::string failure_label;  // "PASS" or "FAIL – <first failed criterion>"

  std::vector<std::string> failed_criteria() const;
};

Verdict validate(const EvalMetrics& metrics, const GateConfig& gate);

// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
double ks_uniform_distance(std::vector<double> sample);

}  // namespace falsify
