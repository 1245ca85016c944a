#include "falsify/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "falsify/error.hpp"
#include "falsify/rng.hpp"

namespace falsify {

std::optional<double> t_statistic(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return std::nullopt;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) return std::nullopt;
  return mean / (sd / std::sqrt(static_cast<double>(n)));
}

namespace {

double points(std::int64_t ticks, const Instrument& instrument) {
  return static_cast<double>(ticks) * instrument.tick_size;
}

}  // namespace

EvalMetrics summary_metrics(std::span<const TradeRecord> trades, const Instrument& instrument) {
  EvalMetrics m;
  m.n = trades.size();
  if (trades.empty()) return m;
  std::vector<double> nets, grosses;
  nets.reserve(trades.size());
  grosses.reserve(trades.size());
  std::int64_t gross_sum = 0, net_sum = 0, win_sum = 0, loss_sum = 0;
  std::size_t wins = 0;
  for (const auto& t : trades) {
    nets.push_back(instrument.to_points(t.net));
    grosses.push_back(instrument.to_points(t.gross));
    gross_sum += t.gross.count();
    net_sum += t.net.count();
    if (t.net.count() > 0) {
      ++wins;
      win_sum += t.net.count();
    } else if (t.net.count() < 0) {
      loss_sum -= t.net.count();
    }
  }
  const double n = static_cast<double>(m.n);
  m.mean_gross = points(gross_sum, instrument) / n;
  m.mean_net = points(net_sum, instrument) / n;
  m.t_stat = t_statistic(nets);
  m.t_stat_gross = t_statistic(grosses);
  m.win_rate = static_cast<double>(wins) / n;
  if (loss_sum > 0) m.profit_factor = static_cast<double>(win_sum) / static_cast<double>(loss_sum);
  if (m.t_stat) m.sharpe = *m.t_stat / std::sqrt(n);

  for (const auto& [year, list] : aggregate_by_year(trades)) {
    YearMetrics y;
    y.n = list.size();
    std::vector<double> yn;
    std::int64_t s = 0;
    for (const auto& t : list) {
      yn.push_back(instrument.to_points(t.net));
      s += t.net.count();
    }
    y.mean_net = points(s, instrument) / static_cast<double>(y.n);
    y.t_stat = t_statistic(yn);
    m.per_year[year] = y;
  }
  return m;
}

namespace {

struct Placement {
  std::size_t day;
  int bar;
};

// Flattened admissible (day, bar) positions of one segment.
struct SegmentPool {
  const PermutationSegment* segment = nullptr;
  std::vector<std::size_t> cumulative;  // cumulative[d] = positions in days [0, d)
  std::size_t total = 0;

  int max_signal_bar(const TradingDay& day) const {
    const int last = day.last_index();
    if (segment->exit.kind == ExitKind::Clock) return last - 1;
    return last - segment->exit.horizon;
  }

  Placement at(std::size_t k) const {
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), k);
    const auto d = static_cast<std::size_t>(it - cumulative.begin()) - 1;
    return {d, static_cast<int>(k - cumulative[d])};
  }
};

std::vector<SegmentPool> build_pools(std::span<const PermutationSegment> segments) {
  std::vector<SegmentPool> pools;
  std::size_t any = 0;
  for (const auto& seg : segments) {
    seg.exit.validate();
    SegmentPool p;
    p.segment = &seg;
    p.cumulative.reserve(seg.days.size() + 1);
    for (const auto& day : seg.days) {
      p.cumulative.push_back(p.total);
      p.total += static_cast<std::size_t>(std::max(p.max_signal_bar(day) + 1, 0));
    }
    if (!seg.trades.empty() && p.total == 0) {
      throw DataError("permutation_test: no admissible placements for the exit rule");
    }
    any += seg.trades.size();
    pools.push_back(std::move(p));
  }
  if (any == 0) throw DataError("permutation_test: no trades");
  return pools;
}

struct Observed {
  std::int64_t net_sum = 0;
  std::int64_t n = 0;
};

Observed observed_of(std::span<const PermutationSegment> segments) {
  Observed o;
  for (const auto& seg : segments) {
    for (const auto& t : seg.trades) {
      o.net_sum += t.net.count();
      ++o.n;
    }
  }
  return o;
}

// True when the iteration's null mean >= observed mean (exact integer compare).
bool null_iteration(const std::vector<SegmentPool>& pools, const Observed& obs, const FrictionModel& friction,
                    const Instrument& instrument, std::uint64_t seed, std::size_t iteration) {
  Rng rng(derive_seed(seed, "permutation", iteration));
  std::int64_t sum = 0, n = 0;
  for (const auto& pool : pools) {
    const auto& seg = *pool.segment;
    for (const auto& t : seg.trades) {
      const auto pl = pool.at(rng.below(pool.total));
      const auto& day = seg.days[pl.day];
      SignalEvent ev{t.family, day.date, pl.bar, t.direction, {}};
      const auto res = simulate(std::span(&ev, 1), day, seg.exit, friction, instrument);
      for (const auto& tr : res.trades) {
        sum += tr.net.count();
        ++n;
      }
    }
  }
  if (n == 0) return false;
  __extension__ using Wide = __int128;  // sums times counts can exceed 64 bits
  return static_cast<Wide>(sum) * obs.n >= static_cast<Wide>(obs.net_sum) * n;
}

void check_iterations(const PermutationOptions& options) {
  if (options.iterations < 1000) throw std::invalid_argument("permutation_test: need >= 1000 iterations");
}

}  // namespace

double permutation_test(std::span<const PermutationSegment> segments, const FrictionModel& friction,
                        const Instrument& instrument, const PermutationOptions& options) {
  check_iterations(options);
  const auto pools = build_pools(segments);
  const auto obs = observed_of(segments);
  const auto iters = static_cast<std::ptrdiff_t>(options.iterations);
  std::size_t exceed = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : exceed)
  for (std::ptrdiff_t i = 0; i < iters; ++i) {
    if (null_iteration(pools, obs, friction, instrument, options.seed, static_cast<std::size_t>(i))) ++exceed;
  }
  return static_cast<double>(1 + exceed) / static_cast<double>(options.iterations + 1);
}

double permutation_test_serial(std::span<const PermutationSegment> segments, const FrictionModel& friction,
                               const Instrument& instrument, const PermutationOptions& options) {
  check_iterations(options);
  const auto pools = build_pools(segments);
  const auto obs = observed_of(segments);
  std::size_t exceed = 0;
  for (std::size_t i = 0; i < options.iterations; ++i) {
    if (null_iteration(pools, obs, friction, instrument, options.seed, i)) ++exceed;
  }
  return static_cast<double>(1 + exceed) / static_cast<double>(options.iterations + 1);
}

double permutation_test(std::span<const TradeRecord> trades, std::span<const TradingDay> day_pool,
                        const ExitSpec& exit, const FrictionModel& friction, const Instrument& instrument,
                        const PermutationOptions& options) {
  const PermutationSegment seg{trades, day_pool, exit};
  return permutation_test(std::span(&seg, 1), friction, instrument, options);
}

YearStability year_stability_detail(const std::map<int, YearMetrics>& per_year, std::size_t min_trades) {
  YearStability out;
  double weighted = 0.0;
  std::size_t total = 0;
  for (const auto& [year, y] : per_year) {
    weighted += y.mean_net * static_cast<double>(y.n);
    total += y.n;
    if (y.n < min_trades) out.excluded_years.push_back(year);
    else out.checked_years.push_back(year);
  }
  if (total == 0 || out.checked_years.size() < 2) return out;
  const double pooled = weighted / static_cast<double>(total);
  const int s = pooled > 0.0 ? 1 : (pooled < 0.0 ? -1 : 0);
  if (s == 0) return out;
  for (int year : out.checked_years) {
    const auto& y = per_year.at(year);
    const int ys = y.mean_net > 0.0 ? 1 : (y.mean_net < 0.0 ? -1 : 0);
    if (ys != s) return out;
    if (y.t_stat && std::abs(*y.t_stat) > 1.0 && (*y.t_stat > 0.0 ? 1 : -1) != s) return out;
  }
  out.stable = true;
  return out;
}

bool year_stability(const std::map<int, YearMetrics>& per_year, std::size_t min_trades) {
  return year_stability_detail(per_year, min_trades).stable;
}

std::optional<double> clustered_standard_error(std::span<const TradeRecord> trades, const Instrument& instrument,
                                               bool gross) {
  if (trades.empty()) return std::nullopt;
  const double n = static_cast<double>(trades.size());
  double mean = 0.0;
  for (const auto& t : trades) mean += instrument.to_points(gross ? t.gross : t.net);
  mean /= n;
  std::map<std::int64_t, double> score;
  for (const auto& t : trades) {
    const auto key = std::chrono::sys_days{t.date}.time_since_epoch().count();
    score[key] += instrument.to_points(gross ? t.gross : t.net) - mean;
  }
  const double g = static_cast<double>(score.size());
  if (g < 2.0) return std::nullopt;
  double ss = 0.0;
  for (const auto& [k, s] : score) ss += s * s;
  return std::sqrt(ss * g / (g - 1.0)) / n;
}

std::vector<std::string> Verdict::failed_criteria() const {
  std::vector<std::string> out;
  if (!t_ok) out.emplace_back("t");
  if (!n_ok) out.emplace_back("n");
  if (!net_ok) out.emplace_back("net");
  if (!year_stable) out.emplace_back("year_stability");
  if (!perm_ok) out.emplace_back("permutation");
  return out;
}

Verdict validate(const EvalMetrics& metrics, const GateConfig& gate) {
  Verdict v;
  v.t_ok = metrics.t_stat && *metrics.t_stat >= gate.t_min;
  v.n_ok = metrics.n >= gate.n_min;
  v.net_ok = metrics.mean_net && *metrics.mean_net > 0.0;
  v.year_stable = year_stability(metrics.per_year, gate.year_min_trades);
  if (metrics.permutation_p) v.perm_ok = *metrics.permutation_p < gate.p_max;
  else v.perm_ok = !gate.permutation_applicable;
  v.overall = v.t_ok && v.n_ok && v.net_ok && v.year_stable && v.perm_ok;

  if (v.overall) v.failure_label = "PASS";
  // An undefined T (too few trades) is reported as the count failure.
  else if (!v.t_ok && (metrics.t_stat || v.n_ok)) v.failure_label = fmt::format("FAIL – T < {:.1f}", gate.t_min);
  else if (!v.n_ok) v.failure_label = fmt::format("FAIL – N < {}", gate.n_min);
  else if (!v.net_ok) v.failure_label = "FAIL – Net ≤ 0";
  else if (!v.year_stable) v.failure_label = "FAIL – Year instability";
  else v.failure_label = fmt::format("FAIL – p ≥ {:g}", gate.p_max);
  return v;
}

double ks_uniform_distance(std::vector<double> sample) {
  if (sample.empty()) throw DataError("ks_uniform_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double x = std::clamp(sample[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - x, x - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace falsify
