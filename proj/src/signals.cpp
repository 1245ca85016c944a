#include "falsify/signals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "falsify/error.hpp"

namespace falsify {

namespace {

constexpr std::array kFamilies{
    Family::ORB_LONG,         Family::ORB_SHORT,        Family::ORB_PULLBACK,        Family::ASIA_EXPANSION,
    Family::LIQUIDITY_GRAB_FADE, Family::LIQUIDITY_GRAB_CONT, Family::GAP_FILL_FADE, Family::GAP_CONT_SHORT,
    Family::VOL_SPIKE,        Family::VOL_DRYUP,        Family::VVG_REVERSAL,        Family::VVG_CONTINUATION,
    Family::VVG_CLOSE_FADE,   Family::EVENT_DRIFT,      Family::OU_REVERSION,        Family::CONFLUENCE_RTH,
    Family::LONDON_B,
};

bool admissible(const TradingDay& day, int bar, int min_horizon) {
  return bar >= 0 && bar + std::max(min_horizon, 1) <= day.last_index();
}

SignalEvent make_event(Family f, const TradingDay& day, int bar, Direction dir, Meta meta = {}) {
  return SignalEvent{f, day.date, bar, dir, std::move(meta)};
}

std::optional<Direction> direction_of(Ticks move) {
  if (move > Ticks{0}) return Direction::Long;
  if (move < Ticks{0}) return Direction::Short;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::ORB_LONG: return "ORB_LONG";
    case Family::ORB_SHORT: return "ORB_SHORT";
    case Family::ORB_PULLBACK: return "ORB_PULLBACK";
    case Family::ASIA_EXPANSION: return "ASIA_EXPANSION";
    case Family::LIQUIDITY_GRAB_FADE: return "LIQUIDITY_GRAB_FADE";
    case Family::LIQUIDITY_GRAB_CONT: return "LIQUIDITY_GRAB_CONT";
    case Family::GAP_FILL_FADE: return "GAP_FILL_FADE";
    case Family::GAP_CONT_SHORT: return "GAP_CONT_SHORT";
    case Family::VOL_SPIKE: return "VOL_SPIKE";
    case Family::VOL_DRYUP: return "VOL_DRYUP";
    case Family::VVG_REVERSAL: return "VVG_REVERSAL";
    case Family::VVG_CONTINUATION: return "VVG_CONTINUATION";
    case Family::VVG_CLOSE_FADE: return "VVG_CLOSE_FADE";
    case Family::EVENT_DRIFT: return "EVENT_DRIFT";
    case Family::OU_REVERSION: return "OU_REVERSION";
    case Family::CONFLUENCE_RTH: return "CONFLUENCE_RTH";
    case Family::LONDON_B: return "LONDON_B";
  }
  return "?";
}

std::optional<Family> parse_family(std::string_view text) {
  for (auto f : kFamilies) {
    if (to_string(f) == text) return f;
  }
  return std::nullopt;
}

std::span<const Family> all_families() { return kFamilies; }

std::string_view to_string(Direction d) { return d == Direction::Long ? "LONG" : "SHORT"; }

std::optional<double> SignalEvent::meta_value(std::string_view key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string event_record(const SignalEvent& e) {
  std::string out = fmt::format("{},{},{},{},", to_string(e.family), format_date(e.date), e.bar_index,
                                to_string(e.direction));
  for (std::size_t i = 0; i < e.meta.size(); ++i) {
    if (i) out += ';';
    out += fmt::format("{}={}", e.meta[i].first, e.meta[i].second);
  }
  return out;
}

std::vector<SignalEvent> orb_signals(const TradingDay& day, const DayPrimitives& prims, OrbVariant variant,
                                     const OrbParams& params, const Instrument& instrument, int min_horizon) {
  std::vector<SignalEvent> out;
  const auto& bars = day.bars;
  const Ticks hi = prims.opening_range_high;
  const Ticks lo = prims.opening_range_low;
  const Ticks pullback = instrument.to_ticks(params.pullback_points);

  std::optional<int> long_break, short_break;
  bool long_done = false, short_done = false;
  for (int i = kOpeningRangeBars; i <= day.last_index(); ++i) {
    const auto& b = bars[i];
    if (variant == OrbVariant::Immediate) {
      if (!admissible(day, i, min_horizon)) break;
      if (!long_break && b.close > hi) {
        long_break = i;
        out.push_back(make_event(Family::ORB_LONG, day, i, Direction::Long,
                                 {{"level", instrument.to_points(hi)}}));
      }
      if (!short_break && b.close < lo) {
        short_break = i;
        out.push_back(make_event(Family::ORB_SHORT, day, i, Direction::Short,
                                 {{"level", instrument.to_points(lo)}}));
      }
      continue;
    }
    // Pullback: arm on the breakout close, fire when a later bar trades back
    // to within `pullback` of the broken level.
    if (long_break && !long_done && i > *long_break && b.low <= hi + pullback) {
      long_done = true;
      if (admissible(day, i, min_horizon)) {
        out.push_back(make_event(Family::ORB_PULLBACK, day, i, Direction::Long,
                                 {{"level", instrument.to_points(hi)},
                                  {"armed_bar", static_cast<double>(*long_break)},
                                  {"stop", params.stop_points}}));
      }
    }
    if (short_break && !short_done && i > *short_break && b.high >= lo - pullback) {
      short_done = true;
      if (admissible(day, i, min_horizon)) {
        out.push_back(make_event(Family::ORB_PULLBACK, day, i, Direction::Short,
                                 {{"level", instrument.to_points(lo)},
                                  {"armed_bar", static_cast<double>(*short_break)},
                                  {"stop", params.stop_points}}));
      }
    }
    if (!long_break && b.close > hi) long_break = i;
    if (!short_break && b.close < lo) short_break = i;
  }
  return out;
}

std::vector<SignalEvent> asia_expansion_signals(const TradingDay& day, double multiple, int mean_window,
                                                int min_horizon) {
  std::vector<SignalEvent> out;
  const auto mean_range = rolling_stat(day.bars, {mean_window, RollingStatistic::MeanRange}, 1.0);
  for (int i = 0; i <= day.last_index(); ++i) {
    if (!admissible(day, i, min_horizon)) break;
    if (!mean_range[i]) continue;
    const auto& b = day.bars[i];
    if (!(static_cast<double>(b.range().count()) > multiple * *mean_range[i])) continue;
    const auto dir = direction_of(b.close - b.open);
    if (!dir) continue;
    out.push_back(make_event(Family::ASIA_EXPANSION, day, i, *dir,
                             {{"multiple", multiple},
                              {"range_ratio", static_cast<double>(b.range().count()) / *mean_range[i]}}));
  }
  return out;
}

std::vector<SignalEvent> liquidity_grab_signals(const TradingDay& day, GrabMode mode, const GrabParams& params,
                                                const Instrument& instrument, int min_horizon) {
  std::vector<SignalEvent> out;
  const auto& bars = day.bars;
  const Family fam = mode == GrabMode::Fade ? Family::LIQUIDITY_GRAB_FADE : Family::LIQUIDITY_GRAB_CONT;
  const int start = params.lookback ? std::max(*params.lookback, 1) : std::max(params.min_history, 1);
  for (int i = start; i <= day.last_index(); ++i) {
    if (!admissible(day, i, min_horizon)) break;
    const int from = params.lookback ? i - *params.lookback : 0;
    Ticks prior_high = bars[from].high, prior_low = bars[from].low;
    for (int j = from + 1; j < i; ++j) {
      prior_high = std::max(prior_high, bars[j].high);
      prior_low = std::min(prior_low, bars[j].low);
    }
    const auto& b = bars[i];
    if (b.high > prior_high && b.close < prior_high) {
      const Direction dir = mode == GrabMode::Fade ? Direction::Short : Direction::Long;
      out.push_back(make_event(fam, day, i, dir, {{"side", 1.0}, {"level", instrument.to_points(prior_high)}}));
    }
    if (b.low < prior_low && b.close > prior_low) {
      const Direction dir = mode == GrabMode::Fade ? Direction::Long : Direction::Short;
      out.push_back(make_event(fam, day, i, dir, {{"side", -1.0}, {"level", instrument.to_points(prior_low)}}));
    }
  }
  return out;
}

std::vector<SignalEvent> gap_signals(const TradingDay& day, const DayPrimitives& prims, GapVariant variant,
                                     const GapParams& params, double kalman_v, const Instrument& instrument,
                                     int min_horizon) {
  const auto idx = day.session.bar_index(params.entry_time);
  if (!idx || !day.session.contains(params.entry_time)) {
    throw std::invalid_argument("gap entry time is outside the session");
  }
  std::vector<SignalEvent> out;
  if (!prims.overnight_gap || *idx > day.last_index() || !admissible(day, *idx, min_horizon)) return out;
  const Ticks gap = *prims.overnight_gap;
  const double gap_points = instrument.to_points(gap);
  if (variant == GapVariant::FillFade) {
    if (std::abs(gap_points) >= params.min_gap_points && gap != Ticks{0}) {
      const Direction dir = gap > Ticks{0} ? Direction::Short : Direction::Long;
      out.push_back(make_event(Family::GAP_FILL_FADE, day, *idx, dir, {{"gap", gap_points}}));
    }
  } else if (gap < Ticks{0} && std::abs(kalman_v) > params.kalman_threshold) {
    out.push_back(make_event(Family::GAP_CONT_SHORT, day, *idx, Direction::Short,
                             {{"gap", gap_points}, {"kalman_v", kalman_v}}));
  }
  return out;
}

OptionalSeries volume_ratio(const TradingDay& day, int window) {
  const auto mean = rolling_stat(day.bars, {window, RollingStatistic::VolumeMean}, 1.0);
  OptionalSeries out(day.bars.size());
  for (std::size_t i = 0; i < day.bars.size(); ++i) {
    if (mean[i] && *mean[i] > 0.0) out[i] = static_cast<double>(day.bars[i].volume) / *mean[i];
  }
  return out;
}

VolumeCutoffs volume_cutoffs(std::span<const TradingDay> training, int window, double tail) {
  std::vector<double> ratios;
  for (const auto& day : training) {
    for (const auto& r : volume_ratio(day, window)) {
      if (r) ratios.push_back(*r);
    }
  }
  if (ratios.empty()) throw DataError("volume_cutoffs: no ratios in training window");
  return {quantile(ratios, tail), quantile(ratios, 1.0 - tail)};
}

std::vector<SignalEvent> volume_signature_signals(const TradingDay& day, VolumeKind kind,
                                                  const VolumeCutoffs& cutoffs, int window, int min_horizon) {
  std::vector<SignalEvent> out;
  const auto ratio = volume_ratio(day, window);
  for (int i = 0; i <= day.last_index(); ++i) {
    if (!admissible(day, i, min_horizon)) break;
    if (!ratio[i]) continue;
    const auto& b = day.bars[i];
    const auto bar_dir = direction_of(b.close - b.open);
    if (!bar_dir) continue;
    if (kind == VolumeKind::Spike && *ratio[i] > cutoffs.high) {
      out.push_back(make_event(Family::VOL_SPIKE, day, i, *bar_dir, {{"ratio", *ratio[i]}}));
    } else if (kind == VolumeKind::DryUp && *ratio[i] < cutoffs.low) {
      out.push_back(make_event(Family::VOL_DRYUP, day, i, opposite(*bar_dir), {{"ratio", *ratio[i]}}));
    }
  }
  return out;
}

std::vector<VvgMetrics> vvg_metrics(std::span<const TradingDay> days, const Instrument& instrument,
                                    int baseline_days) {
  std::vector<VvgMetrics> out;
  out.reserve(days.size());
  for (std::size_t i = 0; i < days.size(); ++i) {
    VvgMetrics m;
    m.date = days[i].date;
    if (days[i].bars.size() >= static_cast<std::size_t>(kOpeningRangeBars)) {
      const auto p = day_primitives(days[i]);
      m.abs_first30 = std::abs(instrument.to_points(p.first30_return));
      if (p.overnight_gap) m.abs_gap = std::abs(instrument.to_points(*p.overnight_gap));
      if (i >= static_cast<std::size_t>(baseline_days)) {
        double s = 0.0;
        for (std::size_t j = i - baseline_days; j < i; ++j) s += static_cast<double>(days[j].bars.front().volume);
        const double base = s / baseline_days;
        if (base > 0.0) m.volume_deviation = std::abs(static_cast<double>(p.first_bar_volume) / base - 1.0);
      }
    }
    out.push_back(m);
  }
  return out;
}

VvgTerciles vvg_terciles(std::span<const VvgMetrics> training) {
  std::vector<double> a, b, c;
  for (const auto& m : training) {
    if (!m.usable()) continue;
    a.push_back(*m.abs_first30);
    b.push_back(*m.abs_gap);
    c.push_back(*m.volume_deviation);
  }
  if (a.size() < 30) {
    throw DataError(fmt::format("vvg: need at least 30 days with a volume baseline, have {}", a.size()));
  }
  constexpr double kUpperTercile = 2.0 / 3.0;
  return {quantile(a, kUpperTercile), quantile(b, kUpperTercile), quantile(c, kUpperTercile)};
}

std::vector<bool> vvg_flags(std::span<const VvgMetrics> metrics, const VvgTerciles& t) {
  std::vector<bool> out(metrics.size(), false);
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const auto& m = metrics[i];
    out[i] = m.usable() && *m.abs_first30 > t.first30 && *m.abs_gap > t.gap && *m.volume_deviation > t.volume;
  }
  return out;
}

VvgClassification vvg_classify(std::span<const TradingDay> days, const Instrument& instrument,
                               int baseline_days) {
  const auto metrics = vvg_metrics(days, instrument, baseline_days);
  VvgClassification out;
  out.terciles = vvg_terciles(metrics);
  out.flags = vvg_flags(metrics, out.terciles);
  return out;
}

std::vector<SignalEvent> vvg_strategy_signals(const TradingDay& day, const DayPrimitives& prims, bool flagged,
                                              VvgMode mode, const VvgParams& params, int min_horizon) {
  std::vector<SignalEvent> out;
  if (!flagged) return out;
  if (mode == VvgMode::CloseFade) {
    const auto idx = day.session.bar_index(params.close_fade_time);
    if (!idx || !admissible(day, *idx, min_horizon)) return out;
    const Ticks move = day.bars[*idx].close - day.bars.front().open;
    const auto dir = direction_of(move);
    if (dir) out.push_back(make_event(Family::VVG_CLOSE_FADE, day, *idx, opposite(*dir)));
    return out;
  }
  const auto first30 = direction_of(prims.first30_return);
  if (!first30) return out;
  const Direction dir = mode == VvgMode::Continuation ? *first30 : opposite(*first30);
  const Family fam = mode == VvgMode::Continuation ? Family::VVG_CONTINUATION : Family::VVG_REVERSAL;
  for (int i = params.first_entry_bar; admissible(day, i, min_horizon); i += std::max(params.stride, 1)) {
    out.push_back(make_event(fam, day, i, dir));
  }
  return out;
}

std::vector<SignalEvent> event_drift_signals(const TradingDay& day, std::span<const EconEvent> events,
                                             int start_bar_offset, const Instrument& instrument,
                                             int min_horizon) {
  if (start_bar_offset < kMinEventOffset) {
    throw std::invalid_argument(fmt::format(
        "event drift must be measured from bar +{} onward; offset {} overlaps the release spike",
        kMinEventOffset, start_bar_offset));
  }
  std::vector<SignalEvent> out;
  for (const auto& ev : events) {
    if (day.session.session_date(ev.ts) != day.date) continue;
    const auto r = day.session.bar_index(clock_of(ev.ts));
    if (!r || *r + 5 > day.last_index() || day.bars[*r].ts != ev.ts) continue;
    const Ticks move = day.bars[*r + 5].close - day.bars[*r].close;
    const auto dir = direction_of(move);
    const int bar = *r + start_bar_offset;
    if (!dir || !admissible(day, bar, min_horizon)) continue;
    out.push_back(make_event(Family::EVENT_DRIFT, day, bar, *dir,
                             {{"release_bar", static_cast<double>(*r)},
                              {"spike_move", instrument.to_points(move)},
                              {"kind", static_cast<double>(static_cast<int>(ev.kind))}}));
  }
  return out;
}

std::vector<double> closes_in_points(std::span<const Bar> bars, const Instrument& instrument) {
  std::vector<double> out(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) out[i] = instrument.to_points(bars[i].close);
  return out;
}

OuSignalResult ou_reversion_signals(const TradingDay& day, const OuFit& fit, double threshold,
                                    const Instrument& instrument, double rearm, int min_horizon) {
  OuSignalResult res;
  if (!fit.valid()) {
    res.warnings.push_back(fmt::format("{}: OU fit has no half-life (phi={:.6f}); signals disabled",
                                       format_date(day.date), fit.phi));
    return res;
  }
  const auto z = ou_zscore(closes_in_points(day.bars, instrument), fit);
  bool armed = true;
  for (int i = 0; i <= day.last_index(); ++i) {
    if (!admissible(day, i, min_horizon)) break;
    if (!armed && std::abs(z[i]) < rearm) armed = true;
    if (!armed) continue;
    if (z[i] <= -threshold) {
      res.events.push_back(make_event(Family::OU_REVERSION, day, i, Direction::Long, {{"z", z[i]}}));
      armed = false;
    } else if (z[i] >= threshold) {
      res.events.push_back(make_event(Family::OU_REVERSION, day, i, Direction::Short, {{"z", z[i]}}));
      armed = false;
    }
  }
  return res;
}

std::vector<SignalEvent> confluence_rth_signals(const TradingDay& day, const ConfluenceInputs& in,
                                                const ConfluenceParams& params, const Instrument& instrument,
                                                int min_horizon) {
  std::vector<SignalEvent> out;
  const std::size_t n = day.bars.size();
  if (in.labels.size() != n || in.transition_to_bullish.size() != n || in.volume_z.size() != n) {
    throw std::invalid_argument("confluence inputs are not aligned with the day's bars");
  }
  for (int i = 0; i <= day.last_index(); ++i) {
    if (!admissible(day, i, min_horizon)) break;
    if (in.labels[i] != kActiveFlow) continue;
    const auto& p = in.transition_to_bullish[i];
    const auto& vz = in.volume_z[i];
    if (!p || !(*p > params.transition_threshold) || !vz || !(*vz > params.volume_z_threshold)) continue;
    double scale = 1.0;
    if (!in.atr.empty() && in.atr[i] && in.atr_baseline > 0.0) scale = *in.atr[i] / in.atr_baseline;
    const double pullback = params.pullback_points * scale;
    const double close = instrument.to_points(day.bars[i].close);
    out.push_back(make_event(Family::CONFLUENCE_RTH, day, i, Direction::Long,
                             {{"p_to_bullish", *p},
                              {"volume_z", *vz},
                              {"pullback", pullback},
                              {"entry_level", close - pullback},
                              {"exit_bar", static_cast<double>(params.exit_bar)}}));
  }
  return out;
}

std::vector<SignalEvent> london_b_signals(const TradingDay& day, std::span<const int> labels, int min_horizon) {
  if (labels.size() != day.bars.size()) {
    throw std::invalid_argument("london labels are not aligned with the day's bars");
  }
  std::vector<SignalEvent> out;
  for (int t = 1; t <= day.last_index(); ++t) {
    if (!admissible(day, t, min_horizon)) break;
    if (labels[t] != kBullishDrift || labels[t - 1] != kBearishChop) continue;
    // At t = 1 there is no t - 2 bar in the session to contaminate.
    if (t >= 2 && (labels[t - 2] == kActiveFlow || labels[t - 2] == kUnlabeled)) continue;
    const int exit_bar = std::min(t + kLondonHoldBars, day.last_index());
    out.push_back(make_event(Family::LONDON_B, day, t, Direction::Long,
                             {{"exit_bar", static_cast<double>(exit_bar)}}));
  }
  return out;
}

TradingDay negate_prices(const TradingDay& day) {
  TradingDay out = day;
  for (auto& b : out.bars) {
    const Ticks hi = b.high, lo = b.low;
    b.open = -b.open;
    b.close = -b.close;
    b.high = -lo;
    b.low = -hi;
  }
  if (out.prior_rth_close) out.prior_rth_close = -*out.prior_rth_close;
  return out;
}

}  // namespace falsify
