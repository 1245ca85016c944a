#pragma once

// Turns signal events into trades. Market entries fill at the open of the bar
// after the signal bar; friction is a single round-trip deduction at exit.

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "falsify/market_data.hpp"
#include "falsify/signals.hpp"

namespace falsify {

enum class ExitKind { Horizon, StopHorizon, PullbackLimit, Clock };

std::string_view to_string(ExitKind k);
std::optional<ExitKind> parse_exit_kind(std::string_view text);

// `horizon` h exits at the close of bar signal + h, so h = 1 holds the entry
// bar only.
struct ExitSpec {
  ExitKind kind = ExitKind::Horizon;
  int horizon = 1;
  std::optional<double> stop_points;
  std::optional<double> limit_offset_points;  // used when the event carries no entry_level
  std::optional<ClockTime> clock;

  void validate() const;
  std::string label() const;
  friend bool operator==(const ExitSpec&, const ExitSpec&) = default;
};

enum class ExitReason { Horizon, Stop, Clock, SessionEnd, LimitUnfilled };

std::string_view to_string(ExitReason r);
std::optional<ExitReason> parse_exit_reason(std::string_view text);

struct FrictionModel {
  double round_trip_points = 2.0;

  Ticks round_trip(const Instrument& instrument) const;
};

struct TradeRecord {
  Family family = Family::ORB_LONG;
  Date date;
  Direction direction = Direction::Long;
  int signal_bar = 0;
  int entry_bar = 0;
  int exit_bar = 0;
  Ticks entry_price;
  Ticks exit_price;
  Ticks gross;
  Ticks net;
  ExitReason exit_reason = ExitReason::Horizon;

  int year() const { return static_cast<int>(date.year()); }
  friend bool operator==(const TradeRecord&, const TradeRecord&) = default;
};

struct SimulationRejection {
  SignalEvent event;
  std::string reason;
};

struct SimulationResult {
  std::vector<TradeRecord> trades;
  std::vector<SimulationRejection> rejected;
  std::size_t unfilled = 0;  // limit orders that never traded through
};

// Events are processed in the order given; overlapping trades are
// independent (no netting).
SimulationResult simulate(std::span<const SignalEvent> events, const TradingDay& day, const ExitSpec& exit,
                          const FrictionModel& friction, const Instrument& instrument);

std::map<int, std::vector<TradeRecord>> aggregate_by_year(std::span<const TradeRecord> trades);

inline constexpr std::string_view kTradeLogHeader =
    "family,date,direction,signal_bar,entry_bar,exit_bar,entry_price,exit_price,gross,net,exit_reason";

std::string trade_row(const TradeRecord& t, const Instrument& instrument);
void write_trade_log(std::ostream& out, std::span<const TradeRecord> trades, const Instrument& instrument);
std::vector<TradeRecord> parse_trade_log(std::istream& in, const Instrument& instrument);

}  // namespace falsify
