#include "falsify/execution.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "falsify/error.hpp"

namespace falsify {

std::string_view to_string(ExitKind k) {
  switch (k) {
    case ExitKind::Horizon: return "HORIZON";
    case ExitKind::StopHorizon: return "STOP_HORIZON";
    case ExitKind::PullbackLimit: return "PULLBACK_LIMIT";
    case ExitKind::Clock: return "CLOCK";
  }
  return "?";
}

std::optional<ExitKind> parse_exit_kind(std::string_view text) {
  for (auto k : {ExitKind::Horizon, ExitKind::StopHorizon, ExitKind::PullbackLimit, ExitKind::Clock}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

void ExitSpec::validate() const {
  if (horizon < 1) throw std::invalid_argument("exit horizon must be >= 1");
  if (stop_points && !(*stop_points > 0.0)) throw std::invalid_argument("stop must be > 0");
  if (kind == ExitKind::StopHorizon && !stop_points) throw std::invalid_argument("STOP_HORIZON needs a stop");
  if (kind == ExitKind::Clock && !clock) throw std::invalid_argument("CLOCK exit needs a clock time");
}

std::string ExitSpec::label() const {
  std::string s = fmt::format("b+{}", horizon);
  if (kind == ExitKind::StopHorizon && stop_points) s += fmt::format(" stop {:g}", *stop_points);
  if (kind == ExitKind::PullbackLimit) s += " limit";
  if (kind == ExitKind::Clock && clock) {
    s += fmt::format(" until {:02d}:{:02d}", clock->count() / 60, clock->count() % 60);
  }
  return s;
}

std::string_view to_string(ExitReason r) {
  switch (r) {
    case ExitReason::Horizon: return "HORIZON";
    case ExitReason::Stop: return "STOP";
    case ExitReason::Clock: return "CLOCK";
    case ExitReason::SessionEnd: return "SESSION_END";
    case ExitReason::LimitUnfilled: return "LIMIT_UNFILLED";
  }
  return "?";
}

std::optional<ExitReason> parse_exit_reason(std::string_view text) {
  for (auto r : {ExitReason::Horizon, ExitReason::Stop, ExitReason::Clock, ExitReason::SessionEnd,
                 ExitReason::LimitUnfilled}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

Ticks FrictionModel::round_trip(const Instrument& instrument) const {
  if (round_trip_points < 0.0) throw std::invalid_argument("friction must be >= 0");
  return instrument.to_ticks(round_trip_points);
}

namespace {

struct ExitFill {
  int bar;
  Ticks price;
  ExitReason reason;
};

// Exit for a position opened at `entry_bar` / `entry`.
ExitFill resolve_exit(const TradingDay& day, const ExitSpec& exit, const Instrument& instrument, int signal_bar,
                      int entry_bar, Ticks entry, Direction dir) {
  const int last = day.last_index();
  int horizon_bar = signal_bar + exit.horizon;
  ExitReason horizon_reason = ExitReason::Horizon;
  if (horizon_bar > last) {
    horizon_bar = last;
    horizon_reason = ExitReason::SessionEnd;
  }
  horizon_bar = std::max(horizon_bar, entry_bar);

  if (exit.kind == ExitKind::StopHorizon) {
    const Ticks stop = instrument.to_ticks(*exit.stop_points);
    const Ticks level = dir == Direction::Long ? entry - stop : entry + stop;
    for (int b = entry_bar; b <= horizon_bar; ++b) {
      const auto& bar = day.bars[b];
      // Stop is assumed to trade before any favourable excursion in the bar;
      // a bar opening beyond the stop fills at its open.
      if (dir == Direction::Long && bar.low <= level) {
        return {b, std::min(bar.open, level), ExitReason::Stop};
      }
      if (dir == Direction::Short && bar.high >= level) {
        return {b, std::max(bar.open, level), ExitReason::Stop};
      }
    }
  }

  if (exit.kind == ExitKind::Clock) {
    const auto clock = *exit.clock;
    if (clock == day.session.end) {
      if (horizon_bar == last) return {last, day.bars[last].close, ExitReason::Clock};
    } else if (auto idx = day.session.bar_index(clock); idx && *idx <= last) {
      if (*idx <= entry_bar) return {entry_bar, day.bars[entry_bar].close, ExitReason::Clock};
      if (*idx <= horizon_bar) return {*idx, day.bars[*idx].open, ExitReason::Clock};
    }
  }
  return {horizon_bar, day.bars[horizon_bar].close, horizon_reason};
}

}  // namespace

SimulationResult simulate(std::span<const SignalEvent> events, const TradingDay& day, const ExitSpec& exit,
                          const FrictionModel& friction, const Instrument& instrument) {
  exit.validate();
  const Ticks cost = friction.round_trip(instrument);
  SimulationResult res;
  const int last = day.last_index();
  for (const auto& ev : events) {
    if (ev.bar_index < 0 || ev.bar_index >= last) {
      res.rejected.push_back({ev, "signal bar has no following bar to enter on"});
      continue;
    }
    const int s = ev.bar_index;
    int entry_bar = s + 1;
    Ticks entry = day.bars[entry_bar].open;

    if (exit.kind == ExitKind::PullbackLimit) {
      Ticks limit;
      if (auto lvl = ev.meta_value("entry_level")) {
        limit = Ticks(static_cast<std::int64_t>(std::floor(*lvl / instrument.tick_size + 1e-9)));
        if (ev.direction == Direction::Short) {
          limit = Ticks(static_cast<std::int64_t>(std::ceil(*lvl / instrument.tick_size - 1e-9)));
        }
      } else if (exit.limit_offset_points) {
        const Ticks off = instrument.to_ticks(*exit.limit_offset_points);
        limit = ev.direction == Direction::Long ? day.bars[s].close - off : day.bars[s].close + off;
      } else {
        res.rejected.push_back({ev, "pullback limit without entry level"});
        continue;
      }
      const int window_end = std::min(s + exit.horizon - 1, last - 1);
      std::optional<int> fill_bar;
      for (int b = s + 1; b <= window_end; ++b) {
        const auto& bar = day.bars[b];
        if (ev.direction == Direction::Long && bar.low < limit) {
          fill_bar = b;
          entry = std::min(bar.open, limit);
          break;
        }
        if (ev.direction == Direction::Short && bar.high > limit) {
          fill_bar = b;
          entry = std::max(bar.open, limit);
          break;
        }
      }
      if (!fill_bar) {
        ++res.unfilled;
        continue;
      }
      entry_bar = *fill_bar;
    }

    const auto fill = resolve_exit(day, exit, instrument, s, entry_bar, entry, ev.direction);
    TradeRecord t;
    t.family = ev.family;
    t.date = day.date;
    t.direction = ev.direction;
    t.signal_bar = s;
    t.entry_bar = entry_bar;
    t.exit_bar = fill.bar;
    t.entry_price = entry;
    t.exit_price = fill.price;
    t.gross = sign(ev.direction) * (fill.price - entry);
    t.net = t.gross - cost;
    t.exit_reason = fill.reason;
    res.trades.push_back(t);
  }
  return res;
}

std::map<int, std::vector<TradeRecord>> aggregate_by_year(std::span<const TradeRecord> trades) {
  std::map<int, std::vector<TradeRecord>> out;
  for (const auto& t : trades) out[t.year()].push_back(t);
  return out;
}

std::string trade_row(const TradeRecord& t, const Instrument& instrument) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", to_string(t.family), format_date(t.date),
                     to_string(t.direction), t.signal_bar, t.entry_bar, t.exit_bar, instrument.format(t.entry_price),
                     instrument.format(t.exit_price), instrument.format(t.gross), instrument.format(t.net),
                     to_string(t.exit_reason));
}

void write_trade_log(std::ostream& out, std::span<const TradeRecord> trades, const Instrument& instrument) {
  out << kTradeLogHeader << '\n';
  for (const auto& t : trades) out << trade_row(t, instrument) << '\n';
}

std::vector<TradeRecord> parse_trade_log(std::istream& in, const Instrument& instrument) {
  std::vector<TradeRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kTradeLogHeader) throw DataError("bad trade log header", line_no);
      continue;
    }
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const auto pos = line.find(',', start);
      cols.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (cols.size() != 11) throw DataError("trade log row needs 11 columns", line_no);
    TradeRecord t;
    const auto fam = parse_family(cols[0]);
    const auto date = parse_date(cols[1]);
    const auto reason = parse_exit_reason(cols[10]);
    if (!fam || !date || !reason || (cols[2] != "LONG" && cols[2] != "SHORT")) {
      throw DataError("malformed trade log row", line_no);
    }
    t.family = *fam;
    t.date = *date;
    t.direction = cols[2] == "LONG" ? Direction::Long : Direction::Short;
    try {
      t.signal_bar = std::stoi(cols[3]);
      t.entry_bar = std::stoi(cols[4]);
      t.exit_bar = std::stoi(cols[5]);
      t.entry_price = instrument.to_ticks(std::stod(cols[6]));
      t.exit_price = instrument.to_ticks(std::stod(cols[7]));
      t.gross = instrument.to_ticks(std::stod(cols[8]));
      t.net = instrument.to_ticks(std::stod(cols[9]));
    } catch (const std::exception& e) {
      throw DataError(std::string("malformed trade log row: ") + e.what(), line_no);
    }
    t.exit_reason = *reason;
    out.push_back(t);
  }
  return out;
}

}  // namespace falsify
