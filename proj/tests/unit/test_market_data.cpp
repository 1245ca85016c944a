#include <gtest/gtest.h>

#include <sstream>

#include "falsify/error.hpp"
#include "falsify/market_data.hpp"
#include "test_days.hpp"

using namespace falsify;
using namespace falsify::testing;

namespace {

std::string rth_rows(Date d, int n, double start = 100.0) {
  std::ostringstream os;
  const auto rth = SessionSpec::rth();
  double px = start;
  for (int i = 0; i < n; ++i) {
    const Instrument inst;
    Bar b = make_bar(rth.bar_time(d, i), {px, px + 1.0, px - 0.5, px + 0.25, 100 + i});
    os << bar_row(b, inst) << '\n';
    px += 0.25;
  }
  return os.str();
}

const std::string kHeader = "ts,open,high,low,close,volume\n";

}  // namespace

TEST(MarketData, EmptyFileGivesNoDays) {
  std::istringstream in("");
  const auto r = parse_bars(in, SessionSpec::rth(), Instrument{});
  EXPECT_TRUE(r.days.empty());
  EXPECT_TRUE(r.rejected.empty());
}

TEST(MarketData, FullRthDayIsComplete) {
  std::istringstream in(kHeader + rth_rows(ymd(2023, 3, 1), 78));
  const auto r = parse_bars(in, SessionSpec::rth(), Instrument{});
  ASSERT_EQ(r.days.size(), 1u);
  EXPECT_EQ(r.days[0].bars.size(), 78u);
  EXPECT_TRUE(r.days[0].complete);
  EXPECT_EQ(r.complete_count(), 1u);
}

TEST(MarketData, PartialDayFlaggedNotDropped) {
  std::istringstream in(kHeader + rth_rows(ymd(2023, 3, 1), 78) + rth_rows(ymd(2023, 3, 2), 40));
  const auto r = parse_bars(in, SessionSpec::rth(), Instrument{});
  ASSERT_EQ(r.days.size(), 2u);
  EXPECT_FALSE(r.days[1].complete);
  EXPECT_EQ(r.incomplete_count(), 1u);
  EXPECT_EQ(complete_days(r.days).size(), 1u);
}

TEST(MarketData, HighBelowLowNamesTimestamp) {
  std::istringstream in(kHeader + "2023-03-01T09:30,100.00,99.00,99.50,99.75,10\n");
  try {
    parse_bars(in, SessionSpec::rth(), Instrument{});
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("2023-03-01T09:30"), std::string::npos);
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(MarketData, MalformedRowCarriesLineNumber) {
  std::istringstream in(kHeader + rth_rows(ymd(2023, 3, 1), 2) + "2023-03-01T09:40,1,2\n");
  try {
    parse_bars(in, SessionSpec::rth(), Instrument{});
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(MarketData, UnsortedInputIsAnError) {
  const auto rows = rth_rows(ymd(2023, 3, 1), 3);
  const auto first = rows.substr(0, rows.find('\n') + 1);
  std::istringstream in(kHeader + rows + first);
  EXPECT_THROW(parse_bars(in, SessionSpec::rth(), Instrument{}), DataError);
}

TEST(MarketData, OutOfSessionBarsAreRejectedRecords) {
  std::istringstream in(kHeader + "2023-03-01T09:00,100.00,101.00,99.00,100.00,5\n" + rth_rows(ymd(2023, 3, 1), 78));
  const auto r = parse_bars(in, SessionSpec::rth(), Instrument{});
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].line, 2u);
  std::size_t bars = 0;
  for (const auto& d : r.days) bars += d.bars.size();
  EXPECT_EQ(bars + r.rejected.size(), 79u);  // completeness partition
}

TEST(MarketData, RoundTripIsByteIdentical) {
  const std::string text = kHeader + rth_rows(ymd(2023, 3, 1), 78) + rth_rows(ymd(2023, 3, 2), 78, 120.0);
  std::istringstream in(text);
  const auto r = parse_bars(in, SessionSpec::rth(), Instrument{});
  std::ostringstream out;
  write_bars(out, r.days, Instrument{});
  EXPECT_EQ(out.str(), text);
}

TEST(MarketData, AsiaSessionBelongsToOpenDate) {
  const auto asia = SessionSpec::asia();
  EXPECT_EQ(asia.nominal_bars(), 72);
  const auto ts = *parse_timestamp("2023-03-02T01:55");
  EXPECT_EQ(asia.session_date(ts), ymd(2023, 3, 1));
  EXPECT_EQ(asia.bar_index(clock_of(ts)), 71);
  EXPECT_EQ(SessionSpec::london().nominal_bars(), 22);
}

TEST(MarketData, GapLinkageAcrossDays) {
  std::istringstream in(kHeader + rth_rows(ymd(2023, 3, 1), 78) + rth_rows(ymd(2023, 3, 2), 78, 95.0));
  const auto r = parse_bars(in, SessionSpec::rth(), Instrument{});
  ASSERT_EQ(r.days.size(), 2u);
  const auto p = day_primitives(r.days[1]);
  ASSERT_TRUE(p.overnight_gap);
  EXPECT_EQ(*p.overnight_gap, r.days[1].bars[0].open - r.days[0].bars[77].close);
  EXPECT_FALSE(day_primitives(r.days[0]).overnight_gap);
}

TEST(MarketData, OpeningRangeHigh) {
  std::vector<Ohlcv> bars;
  for (double h : {10.0, 11.0, 12.0, 11.0, 10.0, 9.0}) bars.push_back({h - 1, h, h - 2, h - 1});
  const auto p = day_primitives(make_day(ymd(2023, 1, 3), bars));
  EXPECT_EQ(p.opening_range_high, Instrument{}.to_ticks(12.0));
}

TEST(MarketData, OvernightGapSubtraction) {
  auto day = make_day(ymd(2023, 1, 3), flat(6, 95.0));
  day.prior_rth_close = Instrument{}.to_ticks(100.0);
  EXPECT_EQ(*day_primitives(day).overnight_gap, Instrument{}.to_ticks(-5.0));
}

TEST(MarketData, RunningHighIgnoresLaterBars) {
  // Hand walk: highs 10,11,12,11,10,9,13,12 then 20,25 at bars 8 and 9.
  std::vector<Ohlcv> bars;
  for (double h : {10.0, 11.0, 12.0, 11.0, 10.0, 9.0, 13.0, 12.0, 20.0, 25.0}) bars.push_back({h - 1, h, h - 2, h - 1});
  const auto p = day_primitives(make_day(ymd(2023, 1, 3), bars));
  EXPECT_EQ(p.session_high_so_far[7], Instrument{}.to_ticks(13.0));
  EXPECT_EQ(p.session_high_so_far[9], Instrument{}.to_ticks(25.0));
}

TEST(MarketData, FewerThanSixBarsIsAnError) {
  EXPECT_THROW(day_primitives(make_day(ymd(2023, 1, 3), flat(5, 100.0))), DataError);
}

TEST(MarketData, CalendarExcludesPreOpenNfpUnderRthOnly) {
  std::istringstream in("ts,kind,impact,currency\n2023-03-10T08:30,NFP,HIGH,USD\n");
  EXPECT_TRUE(parse_event_calendar(in, true).empty());
}

TEST(MarketData, CalendarKeepsAfternoonFomc) {
  std::istringstream in("ts,kind,impact,currency\n2023-03-22T14:00,FOMC,HIGH,USD\n");
  const auto ev = parse_event_calendar(in, true);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::FOMC);
}

TEST(MarketData, CalendarDropsNonUsd) {
  std::istringstream in("ts,kind,impact,currency\n2023-03-22T10:00,CPI,HIGH,EUR\n");
  EXPECT_TRUE(parse_event_calendar(in, false).empty());
}

TEST(MarketData, CalendarUnknownImpactIsAnError) {
  std::istringstream in("ts,kind,impact,currency\n2023-03-22T10:00,CPI,SEVERE,USD\n");
  EXPECT_THROW(parse_event_calendar(in, false), DataError);
}

TEST(MarketData, OffGridPriceIsAnError) {
  EXPECT_THROW(Instrument{}.to_ticks(100.1), DataError);
  EXPECT_EQ(Instrument{}.to_ticks(-0.75).count(), -3);
}
