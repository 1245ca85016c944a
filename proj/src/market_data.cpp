#include "falsify/market_data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "falsify/error.hpp"

namespace falsify {

namespace {

using namespace std::chrono;

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_fixed(std::string_view s, int& out) { return parse_number(s, out); }

bool is_comment_or_blank(std::string_view line) {
  auto t = rtrim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace

Ticks Instrument::to_ticks(double points) const {
  if (!std::isfinite(points)) throw DataError("non-finite price");
  const double q = points / tick_size;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-6) {
    throw DataError(fmt::format("price {} is not a multiple of tick size {}", points, tick_size));
  }
  return Ticks(static_cast<std::int64_t>(r));
}

int Instrument::price_decimals() const {
  for (int d = 0; d <= 8; ++d) {
    const double scaled = tick_size * std::pow(10.0, d);
    if (std::abs(scaled - std::round(scaled)) < 1e-9) return std::max(d, 2);
  }
  return 8;
}

std::string Instrument::format(Ticks t) const {
  return fmt::format("{:.{}f}", to_points(t), price_decimals());
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  // YYYY-MM-DDTHH:MM
  if (text.size() != 16 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':') {
    return std::nullopt;
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  if (!parse_fixed(text.substr(0, 4), y) || !parse_fixed(text.substr(5, 2), mo) ||
      !parse_fixed(text.substr(8, 2), d) || !parse_fixed(text.substr(11, 2), h) ||
      !parse_fixed(text.substr(14, 2), mi)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59) return std::nullopt;
  return local_days{ymd} + hours{h} + minutes{mi};
}

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, mo = 0, d = 0;
  if (!parse_fixed(text.substr(0, 4), y) || !parse_fixed(text.substr(5, 2), mo) ||
      !parse_fixed(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  const Date ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

Date date_of(Timestamp ts) { return Date{floor<days>(ts)}; }

ClockTime clock_of(Timestamp ts) { return ts - floor<days>(ts); }

std::string format_date(Date d) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()),
                     static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
}

std::string format_timestamp(Timestamp ts) {
  const auto tod = clock_of(ts).count();
  return fmt::format("{}T{:02d}:{:02d}", format_date(date_of(ts)), tod / 60, tod % 60);
}

std::string_view to_string(Session s) {
  switch (s) {
    case Session::RTH: return "RTH";
    case Session::ASIA: return "ASIA";
    case Session::LONDON: return "LONDON";
  }
  return "?";
}

std::optional<Session> parse_session(std::string_view text) {
  if (text == "RTH") return Session::RTH;
  if (text == "ASIA") return Session::ASIA;
  if (text == "LONDON") return Session::LONDON;
  return std::nullopt;
}

SessionSpec SessionSpec::rth() { return {Session::RTH, hhmm(9, 30), hhmm(16, 0), 5}; }
SessionSpec SessionSpec::asia() { return {Session::ASIA, hhmm(20, 0), hhmm(2, 0), 5}; }
SessionSpec SessionSpec::london() { return {Session::LONDON, hhmm(3, 0), hhmm(8, 30), 15}; }

SessionSpec SessionSpec::of(Session s) {
  switch (s) {
    case Session::RTH: return rth();
    case Session::ASIA: return asia();
    case Session::LONDON: return london();
  }
  return rth();
}

int SessionSpec::length_minutes() const {
  auto len = (end - start).count();
  if (len <= 0) len += 24 * 60;
  return static_cast<int>(len);
}

bool SessionSpec::contains(ClockTime t) const {
  auto off = (t - start).count() % (24 * 60);
  if (off < 0) off += 24 * 60;
  return off < length_minutes();
}

Date SessionSpec::session_date(Timestamp ts) const {
  const auto d = floor<days>(ts);
  if (wraps_midnight() && clock_of(ts) < end) return Date{d - days{1}};
  return Date{d};
}

std::optional<int> SessionSpec::bar_index(ClockTime t) const {
  auto off = (t - start).count() % (24 * 60);
  if (off < 0) off += 24 * 60;
  if (off >= length_minutes() || off % bar_minutes != 0) return std::nullopt;
  return static_cast<int>(off / bar_minutes);
}

Timestamp SessionSpec::bar_time(Date d, int index) const {
  return local_days{d} + start + minutes{index * bar_minutes};
}

std::size_t IngestResult::complete_count() const {
  return static_cast<std::size_t>(
      std::count_if(days.begin(), days.end(), [](const TradingDay& d) { return d.complete; }));
}

IngestResult parse_bars(std::istream& in, const SessionSpec& session, const Instrument& instrument) {
  IngestResult result;
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  std::optional<Timestamp> prev_ts;

  while (std::getline(in, raw)) {
    ++line_no;
    if (is_comment_or_blank(raw)) continue;
    const auto line = rtrim(raw);
    if (!have_header) {
      if (line != "ts,open,high,low,close,volume") {
        throw DataError("expected header 'ts,open,high,low,close,volume'", line_no);
      }
      have_header = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 6) {
      throw DataError(fmt::format("expected 6 columns, found {}", cols.size()), line_no);
    }
    const auto ts = parse_timestamp(cols[0]);
    if (!ts) throw DataError(fmt::format("bad timestamp '{}'", cols[0]), line_no);
    double px[4];
    for (int i = 0; i < 4; ++i) {
      if (!parse_number(cols[1 + i], px[i])) {
        throw DataError(fmt::format("bad price '{}'", cols[1 + i]), line_no);
      }
    }
    std::int64_t volume = 0;
    if (!parse_number(cols[5], volume)) {
      throw DataError(fmt::format("bad volume '{}'", cols[5]), line_no);
    }
    Bar bar;
    bar.ts = *ts;
    try {
      bar.open = instrument.to_ticks(px[0]);
      bar.high = instrument.to_ticks(px[1]);
      bar.low = instrument.to_ticks(px[2]);
      bar.close = instrument.to_ticks(px[3]);
    } catch (const DataError& e) {
      throw DataError(e.what(), line_no);
    }
    bar.volume = volume;
    if (!bar.valid()) {
      throw DataError(fmt::format("bar {} violates OHLCV invariants", format_timestamp(bar.ts)), line_no);
    }
    if (prev_ts && *ts <= *prev_ts) {
      throw DataError(fmt::format("unsorted input: {} does not follow {}", format_timestamp(*ts),
                                  format_timestamp(*prev_ts)),
                      line_no);
    }
    prev_ts = *ts;

    const auto index = session.bar_index(clock_of(*ts));
    if (!index) {
      result.rejected.push_back({line_no, *ts, "outside session or off the bar grid"});
      continue;
    }
    const Date d = session.session_date(*ts);
    if (result.days.empty() || result.days.back().date != d) {
      TradingDay day;
      day.date = d;
      day.session = session;
      result.days.push_back(std::move(day));
    }
    result.days.back().bars.push_back(bar);
  }

  const int nominal = session.nominal_bars();
  for (std::size_t i = 0; i < result.days.size(); ++i) {
    auto& day = result.days[i];
    bool complete = static_cast<int>(day.bars.size()) == nominal;
    for (int b = 0; complete && b < nominal; ++b) {
      complete = day.bars[b].ts == session.bar_time(day.date, b);
    }
    day.complete = complete;
    if (session.name == Session::RTH && i > 0) {
      day.prior_rth_close = result.days[i - 1].bars.back().close;
    }
  }
  return result;
}

IngestResult parse_bar_file(const std::string& path, const SessionSpec& session,
                            const Instrument& instrument) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open bar file " + path);
  return parse_bars(in, session, instrument);
}

std::string bar_row(const Bar& bar, const Instrument& instrument) {
  return fmt::format("{},{},{},{},{},{}", format_timestamp(bar.ts), instrument.format(bar.open),
                     instrument.format(bar.high), instrument.format(bar.low),
                     instrument.format(bar.close), bar.volume);
}

void write_bars(std::ostream& out, std::span<const TradingDay> days, const Instrument& instrument) {
  out << "ts,open,high,low,close,volume\n";
  for (const auto& day : days) {
    for (const auto& bar : day.bars) out << bar_row(bar, instrument) << '\n';
  }
}

std::vector<TradingDay> complete_days(std::span<const TradingDay> days) {
  std::vector<TradingDay> out;
  for (const auto& d : days) {
    if (d.complete) out.push_back(d);
  }
  return out;
}

DayPrimitives day_primitives(const TradingDay& day) {
  if (day.bars.size() < static_cast<std::size_t>(kOpeningRangeBars)) {
    throw DataError(fmt::format("day {} has {} bars; opening range needs {}", format_date(day.date),
                                day.bars.size(), kOpeningRangeBars));
  }
  DayPrimitives p;
  p.opening_range_high = day.bars[0].high;
  p.opening_range_low = day.bars[0].low;
  for (int i = 1; i < kOpeningRangeBars; ++i) {
    p.opening_range_high = std::max(p.opening_range_high, day.bars[i].high);
    p.opening_range_low = std::min(p.opening_range_low, day.bars[i].low);
  }
  if (day.prior_rth_close) p.overnight_gap = day.bars[0].open - *day.prior_rth_close;
  p.first30_return = day.bars[kOpeningRangeBars - 1].close - day.bars[0].open;
  p.first_bar_volume = day.bars[0].volume;
  p.session_high_so_far.reserve(day.bars.size());
  p.session_low_so_far.reserve(day.bars.size());
  Ticks hi = day.bars[0].high, lo = day.bars[0].low;
  for (const auto& b : day.bars) {
    hi = std::max(hi, b.high);
    lo = std::min(lo, b.low);
    p.session_high_so_far.push_back(hi);
    p.session_low_so_far.push_back(lo);
  }
  return p;
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::FOMC: return "FOMC";
    case EventKind::CPI: return "CPI";
    case EventKind::NFP: return "NFP";
    case EventKind::PCE: return "PCE";
    case EventKind::OTHER: return "OTHER";
  }
  return "OTHER";
}

std::string_view to_string(Impact i) {
  switch (i) {
    case Impact::HIGH: return "HIGH";
    case Impact::MEDIUM: return "MEDIUM";
    case Impact::LOW: return "LOW";
    case Impact::NONE: return "NONE";
  }
  return "NONE";
}

std::vector<EconEvent> parse_event_calendar(std::istream& in, bool rth_only) {
  std::vector<EconEvent> out;
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  const auto rth = SessionSpec::rth();
  while (std::getline(in, raw)) {
    ++line_no;
    if (is_comment_or_blank(raw)) continue;
    const auto line = rtrim(raw);
    if (!have_header) {
      if (line != "ts,kind,impact,currency") {
        throw DataError("expected header 'ts,kind,impact,currency'", line_no);
      }
      have_header = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 4) throw DataError("expected 4 columns", line_no);
    const auto ts = parse_timestamp(cols[0]);
    if (!ts) throw DataError(fmt::format("bad timestamp '{}'", cols[0]), line_no);
    EconEvent ev;
    ev.ts = *ts;
    const auto kind = cols[1];
    ev.kind = kind == "FOMC"  ? EventKind::FOMC
              : kind == "CPI" ? EventKind::CPI
              : kind == "NFP" ? EventKind::NFP
              : kind == "PCE" ? EventKind::PCE
                              : EventKind::OTHER;
    const auto impact = cols[2];
    if (impact == "HIGH") ev.impact = Impact::HIGH;
    else if (impact == "MEDIUM") ev.impact = Impact::MEDIUM;
    else if (impact == "LOW") ev.impact = Impact::LOW;
    else if (impact == "NONE") ev.impact = Impact::NONE;
    else throw DataError(fmt::format("unknown impact code '{}'", impact), line_no);
    ev.currency = std::string(cols[3]);

    if (ev.impact != Impact::HIGH || ev.currency != "USD" || ev.kind == EventKind::OTHER) continue;
    if (rth_only && !rth.contains(clock_of(ev.ts))) continue;
    out.push_back(std::move(ev));
  }
  return out;
}

std::vector<EconEvent> parse_event_calendar_file(const std::string& path, bool rth_only) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open event calendar " + path);
  return parse_event_calendar(in, rth_only);
}

void write_event_calendar(std::ostream& out, std::span<const EconEvent> events) {
  out << "ts,kind,impact,currency\n";
  for (const auto& e : events) {
    out << format_timestamp(e.ts) << ',' << to_string(e.kind) << ',' << to_string(e.impact) << ','
        << e.currency << '\n';
  }
}

}  // namespace falsify
