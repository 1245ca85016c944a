#include <gtest/gtest.h>

#include <sstream>

#include "falsify/error.hpp"
#include "falsify/execution.hpp"
#include "test_days.hpp"

using namespace falsify;
using namespace falsify::testing;

namespace {

const Instrument kInst;

SignalEvent long_at(int bar, Meta meta = {}) {
  return SignalEvent{Family::ORB_LONG, ymd(2023, 5, 2), bar, Direction::Long, std::move(meta)};
}

SignalEvent short_at(int bar) { return SignalEvent{Family::ORB_SHORT, ymd(2023, 5, 2), bar, Direction::Short, {}}; }

TradeRecord only_trade(const SimulationResult& r) {
  EXPECT_EQ(r.trades.size(), 1u);
  return r.trades.empty() ? TradeRecord{} : r.trades[0];
}

}  // namespace

TEST(Simulate, HorizonOneLongHandWalk) {
  auto rows = flat(78, 99.0);
  rows[11] = {100, 103.5, 99.75, 103};
  const auto day = make_day(ymd(2023, 5, 2), rows);
  const std::vector<SignalEvent> ev{long_at(10)};
  const auto t = only_trade(simulate(ev, day, ExitSpec{}, FrictionModel{}, kInst));
  EXPECT_EQ(t.entry_bar, 11);
  EXPECT_EQ(t.exit_bar, 11);
  EXPECT_EQ(t.entry_price, kInst.to_ticks(100.0));
  EXPECT_EQ(t.gross, kInst.to_ticks(3.0));
  EXPECT_EQ(t.net, kInst.to_ticks(1.0));
  EXPECT_EQ(t.exit_reason, ExitReason::Horizon);
}

TEST(Simulate, ShortGrossIsEntryMinusExit) {
  auto rows = flat(78, 100.0);
  rows[11] = {100, 100.5, 95.75, 96};
  const auto day = make_day(ymd(2023, 5, 2), rows);
  const std::vector<SignalEvent> ev{short_at(10)};
  const auto t = only_trade(simulate(ev, day, ExitSpec{}, FrictionModel{}, kInst));
  EXPECT_EQ(t.gross, kInst.to_ticks(4.0));
}

TEST(Simulate, StopHitIntrabar) {
  auto rows = flat(78, 100.0);
  rows[13] = {99, 101, 79, 95};
  const auto day = make_day(ymd(2023, 5, 2), rows);
  ExitSpec exit;
  exit.kind = ExitKind::StopHorizon;
  exit.horizon = 10;
  exit.stop_points = 20.0;
  const std::vector<SignalEvent> ev{long_at(10)};
  const auto t = only_trade(simulate(ev, day, exit, FrictionModel{}, kInst));
  EXPECT_EQ(t.exit_bar, 13);
  EXPECT_EQ(t.exit_price, kInst.to_ticks(80.0));
  EXPECT_EQ(t.gross, kInst.to_ticks(-20.0));
  EXPECT_EQ(t.exit_reason, ExitReason::Stop);
}

TEST(Simulate, StopGappedThroughFillsAtOpen) {
  auto rows = flat(78, 100.0);
  rows[13] = {75, 77, 74, 76};
  const auto day = make_day(ymd(2023, 5, 2), rows);
  ExitSpec exit;
  exit.kind = ExitKind::StopHorizon;
  exit.horizon = 10;
  exit.stop_points = 20.0;
  const std::vector<SignalEvent> ev{long_at(10)};
  EXPECT_EQ(only_trade(simulate(ev, day, exit, FrictionModel{}, kInst)).exit_price, kInst.to_ticks(75.0));
}

TEST(Simulate, StopUntouchedRunsToHorizon) {
  const auto day = make_day(ymd(2023, 5, 2), flat(78, 100.0));
  ExitSpec exit;
  exit.kind = ExitKind::StopHorizon;
  exit.horizon = 5;
  exit.stop_points = 20.0;
  const std::vector<SignalEvent> ev{long_at(10)};
  const auto t = only_trade(simulate(ev, day, exit, FrictionModel{}, kInst));
  EXPECT_EQ(t.exit_bar, 15);
  EXPECT_EQ(t.exit_reason, ExitReason::Horizon);
}

TEST(Simulate, HorizonPastCloseEndsAtSession) {
  const auto day = make_day(ymd(2023, 5, 2), flat(78, 100.0));
  ExitSpec exit;
  exit.horizon = 30;
  const std::vector<SignalEvent> ev{long_at(70)};
  const auto t = only_trade(simulate(ev, day, exit, FrictionModel{}, kInst));
  EXPECT_EQ(t.exit_bar, 77);
  EXPECT_EQ(t.exit_reason, ExitReason::SessionEnd);
}

TEST(Simulate, ClockExitAtOpenOfClockBar) {
  auto rows = flat(78, 100.0);
  rows[72] = {104, 105, 103, 104.5};
  const auto day = make_day(ymd(2023, 5, 2), rows);
  ExitSpec exit;
  exit.kind = ExitKind::Clock;
  exit.horizon = 70;
  exit.clock = hhmm(15, 30);
  const std::vector<SignalEvent> ev{long_at(10)};
  const auto t = only_trade(simulate(ev, day, exit, FrictionModel{}, kInst));
  EXPECT_EQ(t.exit_bar, 72);
  EXPECT_EQ(t.exit_price, kInst.to_ticks(104.0));
  EXPECT_EQ(t.exit_reason, ExitReason::Clock);
}

TEST(Simulate, LastBarEventIsRejected) {
  const auto day = make_day(ymd(2023, 5, 2), flat(78, 100.0));
  const std::vector<SignalEvent> ev{long_at(77)};
  const auto r = simulate(ev, day, ExitSpec{}, FrictionModel{}, kInst);
  EXPECT_TRUE(r.trades.empty());
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].event.bar_index, 77);
}

TEST(Simulate, PullbackLimitFromEntryLevel) {
  auto rows = flat(78, 100.0);
  rows[14] = {99, 99.5, 94.5, 95};
  const auto day = make_day(ymd(2023, 5, 2), rows);
  ExitSpec exit;
  exit.kind = ExitKind::PullbackLimit;
  exit.horizon = 13;
  const std::vector<SignalEvent> ev{long_at(10, {{"entry_level", 95.0}})};
  const auto t = only_trade(simulate(ev, day, exit, FrictionModel{}, kInst));
  EXPECT_EQ(t.entry_bar, 14);
  EXPECT_EQ(t.entry_price, kInst.to_ticks(95.0));
  EXPECT_EQ(t.exit_bar, 23);
}

TEST(Simulate, PullbackLimitUnfilledMakesNoTrade) {
  const auto day = make_day(ymd(2023, 5, 2), flat(78, 100.0));
  ExitSpec exit;
  exit.kind = ExitKind::PullbackLimit;
  exit.horizon = 13;
  const std::vector<SignalEvent> ev{long_at(10, {{"entry_level", 90.0}})};
  const auto r = simulate(ev, day, exit, FrictionModel{}, kInst);
  EXPECT_TRUE(r.trades.empty());
  EXPECT_EQ(r.unfilled, 1u);
}

TEST(Simulate, PullbackLimitFromExitSpecOffset) {
  auto rows = flat(78, 100.0);
  rows[12] = {100, 100.5, 94, 96};
  const auto day = make_day(ymd(2023, 5, 2), rows);
  ExitSpec exit;
  exit.kind = ExitKind::PullbackLimit;
  exit.horizon = 13;
  exit.limit_offset_points = 5.0;
  const std::vector<SignalEvent> ev{long_at(10)};
  const auto t = only_trade(simulate(ev, day, exit, FrictionModel{}, kInst));
  EXPECT_EQ(t.entry_price, kInst.to_ticks(95.0));
}

TEST(Simulate, FrictionIsLinear) {
  Rng rng(3);
  const auto day = make_day(ymd(2023, 5, 2), random_walk(rng, 78));
  std::vector<SignalEvent> ev;
  for (int b = 0; b < 70; b += 7) ev.push_back(b % 2 ? long_at(b) : short_at(b));
  ExitSpec exit;
  exit.horizon = 6;
  const auto a = simulate(ev, day, exit, FrictionModel{0.0}, kInst);
  const auto b = simulate(ev, day, exit, FrictionModel{2.0}, kInst);
  const auto c = simulate(ev, day, exit, FrictionModel{5.0}, kInst);
  ASSERT_EQ(a.trades.size(), ev.size());
  for (std::size_t i = 0; i < ev.size(); ++i) {
    EXPECT_EQ(a.trades[i].gross, a.trades[i].net);
    EXPECT_EQ(a.trades[i].gross - b.trades[i].net, Ticks{8});
    EXPECT_EQ(a.trades[i].gross - c.trades[i].net, Ticks{20});
  }
}

TEST(Simulate, GrossDoesNotDependOnPriceLevel) {
  Rng rng(4);
  const auto rows = random_walk(rng, 78);
  auto shifted = rows;
  for (auto& r : shifted) {
    r.open += 500;
    r.high += 500;
    r.low += 500;
    r.close += 500;
  }
  const auto d1 = make_day(ymd(2023, 5, 2), rows);
  const auto d2 = make_day(ymd(2023, 5, 2), shifted);
  std::vector<SignalEvent> ev;
  for (int b = 0; b < 70; b += 5) ev.push_back(long_at(b));
  ExitSpec exit;
  exit.kind = ExitKind::StopHorizon;
  exit.horizon = 6;
  exit.stop_points = 6.0;
  const auto a = simulate(ev, d1, exit, FrictionModel{}, kInst);
  const auto b = simulate(ev, d2, exit, FrictionModel{}, kInst);
  ASSERT_EQ(a.trades.size(), b.trades.size());
  for (std::size_t i = 0; i < a.trades.size(); ++i) {
    EXPECT_EQ(a.trades[i].gross, b.trades[i].gross);
    EXPECT_EQ(a.trades[i].exit_reason, b.trades[i].exit_reason);
  }
}

TEST(Simulate, ExitSpecValidation) {
  ExitSpec e;
  e.horizon = 0;
  EXPECT_THROW(e.validate(), std::invalid_argument);
  e.horizon = 1;
  e.kind = ExitKind::StopHorizon;
  e.stop_points = 0.0;
  EXPECT_THROW(e.validate(), std::invalid_argument);
  e.stop_points = -3.0;
  EXPECT_THROW(e.validate(), std::invalid_argument);
  EXPECT_THROW(FrictionModel{-1.0}.round_trip(kInst), std::invalid_argument);
}

TEST(Aggregate, PartitionsByYear) {
  std::vector<TradeRecord> trades(5);
  trades[0].date = ymd(2022, 3, 1);
  trades[1].date = ymd(2023, 3, 1);
  trades[2].date = ymd(2022, 9, 1);
  trades[3].date = ymd(2025, 1, 2);
  trades[4].date = ymd(2023, 12, 29);
  const auto by = aggregate_by_year(trades);
  ASSERT_EQ(by.size(), 3u);
  EXPECT_EQ(by.at(2022).size(), 2u);
  EXPECT_EQ(by.at(2023).size(), 2u);
  EXPECT_EQ(by.at(2025).size(), 1u);
  EXPECT_EQ(by.at(2022)[1].date, ymd(2022, 9, 1));
}

TEST(TradeLog, RoundTrip) {
  Rng rng(5);
  const auto day = make_day(ymd(2023, 5, 2), random_walk(rng, 78));
  std::vector<SignalEvent> ev;
  for (int b = 0; b < 70; b += 3) ev.push_back(b % 2 ? long_at(b) : short_at(b));
  ExitSpec exit;
  exit.kind = ExitKind::StopHorizon;
  exit.horizon = 8;
  exit.stop_points = 5.0;
  const auto trades = simulate(ev, day, exit, FrictionModel{}, kInst).trades;
  std::stringstream ss;
  write_trade_log(ss, trades, kInst);
  EXPECT_EQ(parse_trade_log(ss, kInst), trades);
}

TEST(TradeLog, BadRowNamesLine) {
  std::istringstream in(std::string(kTradeLogHeader) + "\nORB_LONG,2023-05-02,UP,1,2,3,1,1,0,0,HORIZON\n");
  try {
    parse_trade_log(in, kInst);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}
