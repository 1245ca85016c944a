#include "falsify/walk_forward.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "falsify/error.hpp"
#include "falsify/stats.hpp"

namespace falsify {

WalkForwardPlan expanding_plan(std::vector<int> years) {
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());
  if (years.size() < 2) throw DataError("walk-forward needs at least two calendar years");
  WalkForwardPlan plan;
  for (std::size_t k = 1; k < years.size(); ++k) {
    plan.folds.push_back({std::vector<int>(years.begin(), years.begin() + static_cast<std::ptrdiff_t>(k)), years[k]});
  }
  return plan;
}

std::vector<int> years_present(std::span<const TradingDay> days) {
  std::set<int> ys;
  for (const auto& d : days) ys.insert(d.year());
  return {ys.begin(), ys.end()};
}

std::optional<double> param(const ParamPoint& p, std::string_view key) {
  for (const auto& [k, v] : p) {
    if (k == key) return v;
  }
  return std::nullopt;
}

double param_or(const ParamPoint& p, std::string_view key, double fallback) {
  return param(p, key).value_or(fallback);
}

std::string format_params(const ParamPoint& p) {
  std::string out;
  for (const auto& [k, v] : p) {
    if (!out.empty()) out += ' ';
    out += fmt::format("{}={:g}", k, v);
  }
  return out.empty() ? "-" : out;
}

std::vector<GridPoint> expand_grid(std::span<const ParamPoint> param_grid, std::span<const ExitSpec> exit_grid) {
  std::vector<GridPoint> out;
  const std::vector<ParamPoint> single{ParamPoint{}};
  const auto params = param_grid.empty() ? std::span<const ParamPoint>(single) : param_grid;
  for (const auto& p : params) {
    for (const auto& e : exit_grid) out.push_back({p, e});
  }
  return out;
}

WalkForwardResult walk_forward(std::span<const TradingDay> days, const FitFn& fit,
                               std::span<const ParamPoint> param_grid, std::span<const ExitSpec> exit_grid,
                               const Instrument& instrument, const WalkForwardOptions& options) {
  if (exit_grid.empty()) throw std::invalid_argument("walk_forward: empty exit grid");
  WalkForwardResult result;
  result.plan = expanding_plan(options.years ? *options.years : years_present(days));
  const auto grid = expand_grid(param_grid, exit_grid);

  for (const auto& fold : result.plan.folds) {
    std::vector<TradingDay> train, history, test;
    const std::set<int> train_years(fold.train_years.begin(), fold.train_years.end());
    for (const auto& d : days) {
      if (train_years.count(d.year())) {
        train.push_back(d);
        history.push_back(d);
      } else if (d.year() == fold.test_year) {
        test.push_back(d);
        history.push_back(d);
      }
    }
    if (train.empty() || test.empty()) {
      throw DataError(fmt::format("walk-forward fold -> {} has no training or test days", fold.test_year));
    }

    const Evaluator eval = fit(train);
    std::vector<std::optional<double>> t(grid.size());
    std::vector<std::size_t> n(grid.size());
    const auto g = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(dynamic, 1) if (options.parallel)
    for (std::ptrdiff_t i = 0; i < g; ++i) {
      const auto trades = eval(grid[i], train, train);
      std::vector<double> nets;
      nets.reserve(trades.size());
      for (const auto& tr : trades) nets.push_back(instrument.to_points(tr.net));
      t[i] = t_statistic(nets);
      n[i] = trades.size();
    }

    std::size_t best = 0;
    auto score = [&](std::size_t i) { return t[i].value_or(-std::numeric_limits<double>::infinity()); };
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (score(i) > score(best) || (score(i) == score(best) && n[i] > n[best])) best = i;
    }

    FoldResult fr;
    fr.fold = fold;
    fr.chosen_index = best;
    fr.chosen = grid[best];
    fr.train_t = t[best];
    fr.train_n = n[best];
    fr.test_trades = eval(grid[best], history, test);
    fr.test_days = std::move(test);
    result.oos_trades.insert(result.oos_trades.end(), fr.test_trades.begin(), fr.test_trades.end());
    result.folds.push_back(std::move(fr));
  }
  return result;
}

}  // namespace falsify
