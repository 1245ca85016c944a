#pragma once

// Expanding-window walk-forward: parameters are chosen on training years only
// and evaluated on the following year.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "falsify/execution.hpp"
#include "falsify/market_data.hpp"

namespace falsify {

struct Fold {
  std::vector<int> train_years;
  int test_year = 0;
  friend bool operator==(const Fold&, const Fold&) = default;
};

struct WalkForwardPlan {
  std::vector<Fold> folds;
};

// years {y0 < y1 < ... < yk} -> (y0 -> y1), (y0..y1 -> y2), ...
// Throws DataError with fewer than two years.
WalkForwardPlan expanding_plan(std::vector<int> years);
std::vector<int> years_present(std::span<const TradingDay> days);

using ParamPoint = std::vector<std::pair<std::string, double>>;

std::optional<double> param(const ParamPoint& p, std::string_view key);
double param_or(const ParamPoint& p, std::string_view key, double fallback);
std::string format_params(const ParamPoint& p);

struct GridPoint {
  ParamPoint params;
  ExitSpec exit;
};

// Trades for `target` days. `history` is every day up to and including the
// last target day (for causal warm-up); it never extends past the target.
using Evaluator = std::function<std::vector<TradeRecord>(const GridPoint&, std::span<const TradingDay> history,
                                                         std::span<const TradingDay> target)>;

// Fits training-only state and returns an evaluator bound to it. Receives
// the training days and nothing else.
using FitFn = std::function<Evaluator(std::span<const TradingDay> train)>;

struct FoldResult {
  Fold fold;
  std::size_t chosen_index = 0;
  GridPoint chosen;
  std::optional<double> train_t;
  std::size_t train_n = 0;
  std::vector<TradeRecord> test_trades;
  std::vector<TradingDay> test_days;
};

struct WalkForwardResult {
  WalkForwardPlan plan;
  std::vector<FoldResult> folds;
  std::vector<TradeRecord> oos_trades;
};

struct WalkForwardOptions {
  std::optional<std::vector<int>> years;  // default: every year present
  bool parallel = true;
};

// Grid order: params outer, exits inner. Selection maximises training t
// (ties: larger n, then earlier grid position); undefined t ranks last.
WalkForwardResult walk_forward(std::span<const TradingDay> days, const FitFn& fit,
                               std::span<const ParamPoint> param_grid, std::span<const ExitSpec> exit_grid,
                               const Instrument& instrument, const WalkForwardOptions& options = {});

std::vector<GridPoint> expand_grid(std::span<const ParamPoint> param_grid, std::span<const ExitSpec> exit_grid);

}  // namespace falsify
