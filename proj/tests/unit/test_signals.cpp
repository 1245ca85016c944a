#include <gtest/gtest.h>

#include <algorithm>
#include <tuple>

#include "falsify/error.hpp"
#include "falsify/signals.hpp"
#include "test_days.hpp"

using namespace falsify;
using namespace falsify::testing;

namespace {

const Instrument kInst;

// OR high 100 / low 98, bar 6 stays inside, bar 7 closes 101, bar 8 holds
// far above, bar 9 dips to 100.50 (within 5 pts of 100).
TradingDay orb_day() {
  std::vector<Ohlcv> rows(6, Ohlcv{99, 100, 98, 99});
  rows.push_back({99, 99.75, 98.5, 99.5});
  rows.push_back({99.5, 101.5, 99.25, 101});
  rows.push_back({106, 108, 105.5, 107});
  rows.push_back({107, 107.5, 100.5, 106});
  while (rows.size() < 78) rows.push_back({106, 106.5, 105.75, 106});
  return make_day(ymd(2023, 5, 2), rows);
}

std::vector<std::tuple<int, Direction>> bar_dirs(const std::vector<SignalEvent>& ev) {
  std::vector<std::tuple<int, Direction>> out;
  for (const auto& e : ev) out.emplace_back(e.bar_index, e.direction);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::tuple<int, Direction>> flipped(std::vector<std::tuple<int, Direction>> v) {
  for (auto& [b, d] : v) d = opposite(d);
  std::sort(v.begin(), v.end());
  return v;
}

OuFit unit_fit() {
  // mu 100, stationary std 1.
  OuFit f;
  f.phi = 0.5;
  f.intercept = 50.0;
  f.mu = 100.0;
  f.sigma_eps = std::sqrt(0.75);
  f.half_life = 1.0;
  return f;
}

TradingDay path_day(const std::vector<double>& closes) {
  std::vector<Ohlcv> rows;
  for (double c : closes) rows.push_back({c, c + 0.25, c - 0.25, c});
  while (rows.size() < 78) rows.push_back({100, 100.25, 99.75, 100});
  return make_day(ymd(2023, 5, 2), rows);
}

}  // namespace

TEST(Orb, NoBreakoutNoEvents) {
  const auto day = make_day(ymd(2023, 5, 2), flat(78, 100.0));
  const auto p = day_primitives(day);
  EXPECT_TRUE(orb_signals(day, p, OrbVariant::Immediate, {}, kInst).empty());
  EXPECT_TRUE(orb_signals(day, p, OrbVariant::Pullback, {}, kInst).empty());
}

TEST(Orb, LongAtBarSeven) {
  const auto day = orb_day();
  const auto ev = orb_signals(day, day_primitives(day), OrbVariant::Immediate, {}, kInst);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].family, Family::ORB_LONG);
  EXPECT_EQ(ev[0].bar_index, 7);
  EXPECT_EQ(ev[0].direction, Direction::Long);
}

TEST(Orb, PullbackAtBarNine) {
  const auto day = orb_day();
  const auto ev = orb_signals(day, day_primitives(day), OrbVariant::Pullback, {}, kInst);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].family, Family::ORB_PULLBACK);
  EXPECT_EQ(ev[0].bar_index, 9);
  EXPECT_EQ(ev[0].meta_value("armed_bar"), 7.0);
  EXPECT_EQ(ev[0].meta_value("stop"), 20.0);
}

TEST(Orb, NegationMapsLongToShort) {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto day = make_day(ymd(2023, 5, 2), random_walk(rng, 78));
    const auto neg = negate_prices(day);
    const auto a = orb_signals(day, day_primitives(day), OrbVariant::Immediate, {}, kInst);
    const auto b = orb_signals(neg, day_primitives(neg), OrbVariant::Immediate, {}, kInst);
    EXPECT_EQ(bar_dirs(b), flipped(bar_dirs(a)));
  }
}

TEST(Asia, EqualRangesGiveNothing) {
  const auto day = make_day(ymd(2023, 5, 2), flat(72, 100.0), SessionSpec::asia());
  EXPECT_TRUE(asia_expansion_signals(day, 1.5).empty());
}

TEST(Asia, ExpansionBarAfterTwentyOneQuietBars) {
  auto rows = flat(21, 100.0);
  rows.push_back({100, 103.5, 99.5, 103});  // range 4.0, up close
  while (rows.size() < 72) rows.push_back({103, 104, 102, 103});
  const auto ev = asia_expansion_signals(make_day(ymd(2023, 5, 2), rows, SessionSpec::asia()), 1.5);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].bar_index, 21);
  EXPECT_EQ(ev[0].direction, Direction::Long);
}

TEST(Asia, DojiExpansionBarIsSilent) {
  auto rows = flat(21, 100.0);
  rows.push_back({101, 103, 99, 101});
  while (rows.size() < 72) rows.push_back({101, 102, 100, 101});
  EXPECT_TRUE(asia_expansion_signals(make_day(ymd(2023, 5, 2), rows, SessionSpec::asia()), 1.5).empty());
}

TEST(Grab, UptrendNeverReenters) {
  std::vector<Ohlcv> rows;
  for (int i = 0; i < 78; ++i) rows.push_back({100.0 + i, 101.0 + i, 99.5 + i, 101.0 + i});
  const auto day = make_day(ymd(2023, 5, 2), rows);
  EXPECT_TRUE(liquidity_grab_signals(day, GrabMode::Fade, {}, kInst).empty());
  EXPECT_TRUE(liquidity_grab_signals(day, GrabMode::Fade, {12, 6}, kInst).empty());
}

TEST(Grab, PierceAndRejectTwelveBarHigh) {
  std::vector<Ohlcv> rows(12, Ohlcv{102, 103, 100, 102});
  rows[5] = {102, 105, 100, 104};
  rows.push_back({104.5, 105.5, 103.75, 104});  // bar 12
  while (rows.size() < 78) rows.push_back({104, 104.5, 103.75, 104});
  const auto day = make_day(ymd(2023, 5, 2), rows);
  const GrabParams p{12, 6};
  const auto fade = liquidity_grab_signals(day, GrabMode::Fade, p, kInst);
  const auto cont = liquidity_grab_signals(day, GrabMode::Continuation, p, kInst);
  ASSERT_EQ(fade.size(), 1u);
  ASSERT_EQ(cont.size(), 1u);
  EXPECT_EQ(fade[0].bar_index, 12);
  EXPECT_EQ(fade[0].direction, Direction::Short);
  EXPECT_EQ(cont[0].direction, Direction::Long);
  EXPECT_EQ(fade[0].meta_value("level"), 105.0);
}

TEST(Grab, NegationMirrors) {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto day = make_day(ymd(2023, 5, 2), random_walk(rng, 78));
    const auto neg = negate_prices(day);
    for (auto mode : {GrabMode::Fade, GrabMode::Continuation}) {
      for (GrabParams p : {GrabParams{}, GrabParams{12, 6}}) {
        EXPECT_EQ(bar_dirs(liquidity_grab_signals(neg, mode, p, kInst)),
                  flipped(bar_dirs(liquidity_grab_signals(day, mode, p, kInst))));
      }
    }
  }
}

TEST(Gap, ZeroGapGivesNothing) {
  auto day = make_day(ymd(2023, 5, 2), flat(78, 100.0));
  day.prior_rth_close = kInst.to_ticks(100.0);
  const auto p = day_primitives(day);
  EXPECT_TRUE(gap_signals(day, p, GapVariant::FillFade, {}, 5.0, kInst).empty());
  EXPECT_TRUE(gap_signals(day, p, GapVariant::ContinuationShort, {}, 5.0, kInst).empty());
}

TEST(Gap, DownGapWithVelocityContinuesShort) {
  auto day = make_day(ymd(2023, 5, 2), flat(78, 100.0));
  day.prior_rth_close = kInst.to_ticks(108.0);
  const auto ev = gap_signals(day, day_primitives(day), GapVariant::ContinuationShort, {}, 3.0, kInst);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].family, Family::GAP_CONT_SHORT);
  EXPECT_EQ(ev[0].direction, Direction::Short);
  EXPECT_EQ(ev[0].bar_index, 0);
  EXPECT_TRUE(gap_signals(day, day_primitives(day), GapVariant::ContinuationShort, {}, 2.0, kInst).empty());
}

TEST(Gap, UpGapFadedAtQuarterTo) {
  auto day = make_day(ymd(2023, 5, 2), flat(78, 110.0));
  day.prior_rth_close = kInst.to_ticks(100.0);
  GapParams p;
  p.entry_time = hhmm(9, 45);
  const auto ev = gap_signals(day, day_primitives(day), GapVariant::FillFade, p, 0.0, kInst);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].direction, Direction::Short);
  EXPECT_EQ(day.bars[ev[0].bar_index].ts, *parse_timestamp("2023-05-02T09:45"));
}

TEST(Gap, EntryOutsideSessionIsAnError) {
  auto day = make_day(ymd(2023, 5, 2), flat(78, 110.0));
  day.prior_rth_close = kInst.to_ticks(100.0);
  GapParams p;
  p.entry_time = hhmm(8, 0);
  EXPECT_THROW(gap_signals(day, day_primitives(day), GapVariant::FillFade, p, 0.0, kInst), std::invalid_argument);
}

TEST(Volume, UniformVolumeGivesNothing) {
  const auto day = make_day(ymd(2023, 5, 2), flat(78, 100.0));
  const std::vector<TradingDay> train{day};
  const auto cut = volume_cutoffs(train);
  EXPECT_TRUE(volume_signature_signals(day, VolumeKind::Spike, cut).empty());
  EXPECT_TRUE(volume_signature_signals(day, VolumeKind::DryUp, cut).empty());
}

TEST(Volume, PlantedSpikeAndDryUp) {
  auto rows = flat(78, 100.0);
  rows[30] = {100, 101.5, 99.75, 101, 5000};
  rows[50] = {100, 101.5, 99.75, 101, 100};
  const auto day = make_day(ymd(2023, 5, 2), rows);
  const VolumeCutoffs cut{0.5, 2.0};
  const auto spike = volume_signature_signals(day, VolumeKind::Spike, cut);
  ASSERT_EQ(spike.size(), 1u);
  EXPECT_EQ(spike[0].bar_index, 30);
  EXPECT_EQ(spike[0].direction, Direction::Long);
  const auto dry = volume_signature_signals(day, VolumeKind::DryUp, cut);
  ASSERT_EQ(dry.size(), 1u);
  EXPECT_EQ(dry[0].bar_index, 50);
  EXPECT_EQ(dry[0].direction, Direction::Short);
}

TEST(Vvg, IdenticalDaysFlagNothing) {
  std::vector<TradingDay> days;
  for (int i = 0; i < 60; ++i) {
    auto d = make_day(Date{std::chrono::sys_days{ymd(2023, 1, 2)} + std::chrono::days(i)}, flat(78, 100.0));
    d.prior_rth_close = kInst.to_ticks(99.0);
    days.push_back(d);
  }
  const auto c = vvg_classify(days, kInst);
  EXPECT_EQ(std::count(c.flags.begin(), c.flags.end(), true), 0);
}

TEST(Vvg, ExactlyOnePlantedDayFlagged) {
  std::vector<VvgMetrics> m;
  for (int i = 0; i < 100; ++i) {
    VvgMetrics v;
    v.abs_first30 = i;
    v.abs_gap = 99 - i;  // top tercile of one is the bottom of the other
    v.volume_deviation = i % 10;
    m.push_back(v);
  }
  VvgMetrics planted;
  planted.abs_first30 = planted.abs_gap = planted.volume_deviation = 1000.0;
  m.push_back(planted);
  const auto flags = vvg_flags(m, vvg_terciles(m));
  EXPECT_EQ(std::count(flags.begin(), flags.end(), true), 1);
  EXPECT_TRUE(flags.back());
}

TEST(Vvg, TooFewUsableDaysIsAnError) {
  std::vector<VvgMetrics> m(20, VvgMetrics{{}, 1.0, 1.0, 1.0});
  EXPECT_THROW(vvg_terciles(m), DataError);
}

TEST(Vvg, ContinuationAndReversalFollowFirstThirty) {
  auto rows = flat(78, 100.0);
  rows[5] = {100, 112.5, 99.75, 112};  // first-30 move +12
  for (std::size_t i = 6; i < rows.size(); ++i) rows[i] = {112, 112.5, 111.5, 112};
  const auto day = make_day(ymd(2023, 5, 2), rows);
  const auto p = day_primitives(day);
  EXPECT_TRUE(vvg_strategy_signals(day, p, false, VvgMode::Continuation).empty());
  const auto cont = vvg_strategy_signals(day, p, true, VvgMode::Continuation);
  const auto rev = vvg_strategy_signals(day, p, true, VvgMode::Reversal);
  ASSERT_FALSE(cont.empty());
  ASSERT_EQ(cont.size(), rev.size());
  for (const auto& e : cont) EXPECT_EQ(e.direction, Direction::Long);
  for (const auto& e : rev) EXPECT_EQ(e.direction, Direction::Short);
}

TEST(Vvg, CloseFadeAtThreeThirty) {
  auto rows = flat(78, 100.0);
  for (std::size_t i = 40; i < rows.size(); ++i) rows[i] = {140, 140.5, 139.5, 140};
  const auto day = make_day(ymd(2023, 5, 2), rows);
  const auto ev = vvg_strategy_signals(day, day_primitives(day), true, VvgMode::CloseFade);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].direction, Direction::Short);
  EXPECT_EQ(day.bars[ev[0].bar_index].ts, *parse_timestamp("2023-05-02T15:30"));
}

TEST(EventDrift, NoEventsNoSignals) {
  const auto day = make_day(ymd(2023, 5, 2), flat(78, 100.0));
  EXPECT_TRUE(event_drift_signals(day, {}, 6, kInst).empty());
}

TEST(EventDrift, FomcUpMoveLongSixBarsLater) {
  auto rows = flat(78, 100.0);
  for (std::size_t i = 55; i < rows.size(); ++i) rows[i] = {109, 109.5, 108.5, 109};
  const auto day = make_day(ymd(2023, 5, 2), rows);
  const EconEvent fomc{*parse_timestamp("2023-05-02T14:00"), EventKind::FOMC, Impact::HIGH, "USD"};
  const std::vector<EconEvent> events{fomc};
  const auto ev = event_drift_signals(day, events, 6, kInst);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].direction, Direction::Long);
  EXPECT_EQ(ev[0].bar_index, 54 + 6);
  EXPECT_EQ(ev[0].meta_value("spike_move"), 9.0);
}

TEST(EventDrift, OffsetBelowSixIsAnError) {
  const auto day = make_day(ymd(2023, 5, 2), flat(78, 100.0));
  EXPECT_THROW(event_drift_signals(day, {}, 3, kInst), std::invalid_argument);
}

TEST(OuSignals, PinnedAtMeanIsSilent) {
  EXPECT_TRUE(ou_reversion_signals(path_day({}), unit_fit(), 2.0, kInst).events.empty());
}

TEST(OuSignals, CrossingFiresOnce) {
  const auto r = ou_reversion_signals(path_day({100, 99, 97.75}), unit_fit(), 2.0, kInst);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].bar_index, 2);
  EXPECT_EQ(r.events[0].direction, Direction::Long);
}

TEST(OuSignals, NoRearmWithoutDip) {
  const auto r =
      ou_reversion_signals(path_day({100, 99, 97.75, 98.5, 97.5, 98.25, 97.5, 98}), unit_fit(), 2.0, kInst);
  EXPECT_EQ(r.events.size(), 1u);
}

TEST(OuSignals, InvalidFitWarns) {
  OuFit bad;
  bad.phi = 1.2;
  const auto r = ou_reversion_signals(path_day({}), bad, 2.0, kInst);
  EXPECT_TRUE(r.events.empty());
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(OuSignals, NegationMirrors) {
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto day = make_day(ymd(2023, 5, 2), random_walk(rng, 78, 0.0, 1.0));
    OuFit f = unit_fit();
    f.mu = 0.0;
    f.intercept = 0.0;
    EXPECT_EQ(bar_dirs(ou_reversion_signals(negate_prices(day), f, 1.5, kInst).events),
              flipped(bar_dirs(ou_reversion_signals(day, f, 1.5, kInst).events)));
  }
}

TEST(Confluence, OnePlantedBar) {
  const auto day = make_day(ymd(2023, 5, 2), flat(78, 100.0));
  std::vector<int> labels(78, kBearishChop);
  std::vector<std::optional<double>> p(78, 0.3), vz(78, 1.0), atr(78, 4.0);
  labels[20] = kActiveFlow;
  labels[30] = kActiveFlow;
  vz[30] = 0.2;  // fails the volume condition
  const ConfluenceInputs in{labels, p, vz, atr, 2.0};
  const auto ev = confluence_rth_signals(day, in, {}, kInst);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].bar_index, 20);
  EXPECT_EQ(ev[0].meta_value("pullback"), 50.0);  // 25 * 4 / 2
  EXPECT_EQ(ev[0].meta_value("entry_level"), 50.0);
  EXPECT_EQ(ev[0].meta_value("exit_bar"), 13.0);
}

TEST(Confluence, ThresholdIsStrict) {
  const auto day = make_day(ymd(2023, 5, 2), flat(78, 100.0));
  std::vector<int> labels(78, kActiveFlow);
  std::vector<std::optional<double>> p(78, 0.15), vz(78, 1.0);
  const ConfluenceInputs in{labels, p, vz, {}, 0.0};
  EXPECT_TRUE(confluence_rth_signals(day, in, {}, kInst).empty());
}

TEST(Confluence, NoActiveFlowNoEvents) {
  const auto day = make_day(ymd(2023, 5, 2), flat(78, 100.0));
  std::vector<int> labels(78, kBullishDrift);
  std::vector<std::optional<double>> p(78, 0.9), vz(78, 3.0);
  const ConfluenceInputs in{labels, p, vz, {}, 0.0};
  EXPECT_TRUE(confluence_rth_signals(day, in, {}, kInst).empty());
}

class LondonB : public ::testing::Test {
 protected:
  std::vector<SignalEvent> run(std::vector<int> prefix) {
    prefix.resize(22, kBullishDrift);
    return london_b_signals(day_, prefix);
  }
  TradingDay day_ = make_day(ymd(2023, 5, 2), flat(22, 100.0), SessionSpec::london());
};

TEST_F(LondonB, ChopThenBullish) {
  const auto ev = run({0, 0, 2});
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].bar_index, 2);
  EXPECT_EQ(ev[0].meta_value("exit_bar"), 6.0);
}

TEST_F(LondonB, ActiveFlowContaminates) { EXPECT_TRUE(run({1, 0, 2}).empty()); }

TEST_F(LondonB, OnlyTheTransitionBar) {
  const auto ev = run({0, 2, 2});
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].bar_index, 1);
}

TEST(Containment, EventsLeaveRoomForTheExit) {
  Rng rng(8);
  for (int i = 0; i < 30; ++i) {
    const auto day = make_day(ymd(2023, 5, 2), random_walk(rng, 78));
    for (int h : {1, 6, 13}) {
      for (const auto& e : liquidity_grab_signals(day, GrabMode::Fade, {}, kInst, h)) {
        EXPECT_LE(e.bar_index + h, day.last_index());
      }
      for (const auto& e : orb_signals(day, day_primitives(day), OrbVariant::Pullback, {}, kInst, h)) {
        EXPECT_LE(e.bar_index + h, day.last_index());
      }
    }
  }
}

TEST(Determinism, RepeatedCallsAreIdentical) {
  Rng rng(9);
  const auto day = make_day(ymd(2023, 5, 2), random_walk(rng, 78));
  EXPECT_EQ(liquidity_grab_signals(day, GrabMode::Fade, {}, kInst),
            liquidity_grab_signals(day, GrabMode::Fade, {}, kInst));
  EXPECT_EQ(asia_expansion_signals(day, 1.5), asia_expansion_signals(day, 1.5));
}

TEST(Records, EventRecordFormat) {
  const SignalEvent e{Family::LONDON_B, ymd(2023, 5, 2), 3, Direction::Long, {{"exit_bar", 7}}};
  EXPECT_EQ(event_record(e), "LONDON_B,2023-05-02,3,LONG,exit_bar=7");
}
