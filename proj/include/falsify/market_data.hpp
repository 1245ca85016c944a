#pragma once

// Bar files, sessions and trading days.
//
// Prices are held as integer ticks so friction and P&L arithmetic is exact;
// points only appear at the file boundary and in reports. Timestamps are ET
// wall-clock and label the bar's open.

#include <algorithm>
#include <chrono>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace falsify {

class Ticks {
 public:
  constexpr Ticks() = default;
  constexpr explicit Ticks(std::int64_t count) : count_(count) {}

  constexpr std::int64_t count() const { return count_; }

  constexpr Ticks& operator+=(Ticks o) { count_ += o.count_; return *this; }
  constexpr Ticks& operator-=(Ticks o) { count_ -= o.count_; return *this; }
  friend constexpr Ticks operator+(Ticks a, Ticks b) { return Ticks(a.count_ + b.count_); }
  friend constexpr Ticks operator-(Ticks a, Ticks b) { return Ticks(a.count_ - b.count_); }
  friend constexpr Ticks operator-(Ticks a) { return Ticks(-a.count_); }
  friend constexpr Ticks operator*(std::int64_t k, Ticks a) { return Ticks(k * a.count_); }
  friend constexpr auto operator<=>(Ticks, Ticks) = default;

 private:
  std::int64_t count_ = 0;
};

struct Instrument {
  std::string symbol = "MNQ";
  double tick_size = 0.25;       // points per tick
  double friction_points = 2.0;  // round trip

  // Throws DataError if `points` is not on the tick grid.
  Ticks to_ticks(double points) const;
  double to_points(Ticks t) const { return static_cast<double>(t.count()) * tick_size; }
  int price_decimals() const;
  std::string format(Ticks t) const;
};

using Timestamp = std::chrono::local_time<std::chrono::minutes>;
using Date = std::chrono::year_month_day;

// Minutes after midnight.
using ClockTime = std::chrono::minutes;

std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);
std::string format_date(Date d);
std::optional<Date> parse_date(std::string_view text);
ClockTime clock_of(Timestamp ts);
Date date_of(Timestamp ts);
constexpr ClockTime hhmm(int h, int m) { return std::chrono::hours(h) + std::chrono::minutes(m); }

struct Bar {
  Timestamp ts;
  Ticks open, high, low, close;
  std::int64_t volume = 0;

  Ticks range() const { return high - low; }
  bool valid() const {
    return low <= high && low <= std::min(open, close) && high >= std::max(open, close) && volume >= 0;
  }
  friend bool operator==(const Bar&, const Bar&) = default;
};

enum class Session { RTH, ASIA, LONDON };

std::string_view to_string(Session s);
std::optional<Session> parse_session(std::string_view text);

struct SessionSpec {
  Session name = Session::RTH;
  ClockTime start{};
  ClockTime end{};
  int bar_minutes = 5;

  static SessionSpec rth();
  static SessionSpec asia();
  static SessionSpec london();
  static SessionSpec of(Session s);

  bool wraps_midnight() const { return end <= start; }
  int length_minutes() const;
  int nominal_bars() const { return length_minutes() / bar_minutes; }
  bool contains(ClockTime t) const;
  // Calendar date owning a timestamp; ASIA bars after midnight belong to the
  // previous evening's open.
  Date session_date(Timestamp ts) const;
  // Nominal index of the bar starting at `t`, or nullopt if `t` is off-grid or
  // outside the session.
  std::optional<int> bar_index(ClockTime t) const;
  // Timestamp of the bar at nominal `index` for a session opening on `d`.
  Timestamp bar_time(Date d, int index) const;

  friend bool operator==(const SessionSpec&, const SessionSpec&) = default;
};

struct TradingDay {
  Date date;
  SessionSpec session;
  std::vector<Bar> bars;
  std::optional<Ticks> prior_rth_close;
  bool complete = false;

  int last_index() const { return static_cast<int>(bars.size()) - 1; }
  int year() const { return static_cast<int>(date.year()); }
  friend bool operator==(const TradingDay&, const TradingDay&) = default;
};

struct BarRejection {
  std::size_t line = 0;
  Timestamp ts;
  std::string reason;
};

struct IngestResult {
  std::vector<TradingDay> days;
  std::vector<BarRejection> rejected;

  std::size_t complete_count() const;
  std::size_t incomplete_count() const { return days.size() - complete_count(); }
};

IngestResult parse_bars(std::istream& in, const SessionSpec& session, const Instrument& instrument);
IngestResult parse_bar_file(const std::string& path, const SessionSpec& session,
                            const Instrument& instrument);

// Writes the header and one row per bar, in day order.
void write_bars(std::ostream& out, std::span<const TradingDay> days, const Instrument& instrument);
std::string bar_row(const Bar& bar, const Instrument& instrument);

std::vector<TradingDay> complete_days(std::span<const TradingDay> days);

struct DayPrimitives {
  Ticks opening_range_high;
  Ticks opening_range_low;
  std::optional<Ticks> overnight_gap;
  Ticks first30_return;
  std::int64_t first_bar_volume = 0;
  std::vector<Ticks> session_high_so_far;
  std::vector<Ticks> session_low_so_far;
};

inline constexpr int kOpeningRangeBars = 6;

DayPrimitives day_primitives(const TradingDay& day);

enum class EventKind { FOMC, CPI, NFP, PCE, OTHER };
enum class Impact { HIGH, MEDIUM, LOW, NONE };

std::string_view to_string(EventKind k);
std::string_view to_string(Impact i);

struct EconEvent {
  Timestamp ts;
  EventKind kind = EventKind::OTHER;
  Impact impact = Impact::NONE;
  std::string currency;
};

std::vector<EconEvent> parse_event_calendar(std::istream& in, bool rth_only);
std::vector<EconEvent> parse_event_calendar_file(const std::string& path, bool rth_only);
void write_event_calendar(std::ostream& out, std::span<const EconEvent> events);

}  // namespace falsify
