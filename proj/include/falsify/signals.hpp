#pragma once

// Signal families. Every rule is evaluated on closed bars only; an event at
// bar i may depend on bars 0..i of its day (and on estimator inputs that are
// themselves causal), never on bar i+1 or later.
//
// Each generator takes `min_horizon`: an event at bar i is emitted only if
// i + min_horizon <= last bar index, so every event can be entered at the next
// open and exited in-session.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "falsify/features.hpp"
#include "falsify/gmm.hpp"
#include "falsify/market_data.hpp"

namespace falsify {

enum class Family {
  ORB_LONG,
  ORB_SHORT,
  ORB_PULLBACK,
  ASIA_EXPANSION,
  LIQUIDITY_GRAB_FADE,
  LIQUIDITY_GRAB_CONT,
  GAP_FILL_FADE,
  GAP_CONT_SHORT,
  VOL_SPIKE,
  VOL_DRYUP,
  VVG_REVERSAL,
  VVG_CONTINUATION,
  VVG_CLOSE_FADE,
  EVENT_DRIFT,
  OU_REVERSION,
  CONFLUENCE_RTH,
  LONDON_B,
};

std::string_view to_string(Family f);
std::optional<Family> parse_family(std::string_view text);
std::span<const Family> all_families();

enum class Direction { Long, Short };

constexpr int sign(Direction d) { return d == Direction::Long ? 1 : -1; }
constexpr Direction opposite(Direction d) { return d == Direction::Long ? Direction::Short : Direction::Long; }
std::string_view to_string(Direction d);

using Meta = std::vector<std::pair<std::string, double>>;

struct SignalEvent {
  Family family = Family::ORB_LONG;
  Date date;
  int bar_index = 0;
  Direction direction = Direction::Long;
  Meta meta;

  std::optional<double> meta_value(std::string_view key) const;
  friend bool operator==(const SignalEvent&, const SignalEvent&) = default;
};

// `family,date,bar_index,direction,key=value;key=value`
std::string event_record(const SignalEvent& e);

// --- opening range breakout ---------------------------------------------

enum class OrbVariant { Immediate, Pullback };

struct OrbParams {
  double pullback_points = 5.0;
  double stop_points = 20.0;
};

std::vector<SignalEvent> orb_signals(const TradingDay& day, const DayPrimitives& prims, OrbVariant variant,
                                     const OrbParams& params, const Instrument& instrument,
                                     int min_horizon = 1);

// --- Asia expansion bars ------------------------------------------------

std::vector<SignalEvent> asia_expansion_signals(const TradingDay& day, double multiple,
                                                int mean_window = 20, int min_horizon = 1);

// --- liquidity grab -------------------------------------------------------

enum class GrabMode { Fade, Continuation };

struct GrabParams {
  // Absent: compare against the running session extreme.
  std::optional<int> lookback;
  // Bars required before the first grab can be evaluated.
  int min_history = 6;
};

std::vector<SignalEvent> liquidity_grab_signals(const TradingDay& day, GrabMode mode, const GrabParams& params,
                                                const Instrument& instrument, int min_horizon = 1);

// --- overnight gap -----------------------------------------------------------

enum class GapVariant { FillFade, ContinuationShort };

struct GapParams {
  ClockTime entry_time = hhmm(9, 30);
  double kalman_threshold = 2.5;
  double min_gap_points = 5.0;
};

// Throws std::invalid_argument when entry_time is not a bar of the session.
std::vector<SignalEvent> gap_signals(const TradingDay& day, const DayPrimitives& prims, GapVariant variant,
                                     const GapParams& params, double kalman_v, const Instrument& instrument,
                                     int min_horizon = 1);

// --- volume signatures ------------------------------------------------------

enum class VolumeKind { Spike, DryUp };

struct VolumeCutoffs {
  double low = 0.0;   // bottom-decile cut of volume / prior mean
  double high = 0.0;  // top-decile cut
};

// volume / mean of the prior `window` volumes within the day.
OptionalSeries volume_ratio(const TradingDay& day, int window);

// Decile cuts frozen from training days.
VolumeCutoffs volume_cutoffs(std::span<const TradingDay> training, int window = 20, double tail = 0.1);

std::vector<SignalEvent> volume_signature_signals(const TradingDay& day, VolumeKind kind,
                                                  const VolumeCutoffs& cutoffs, int window = 20,
                                                  int min_horizon = 1);

// --- volatility-volume-gap day classifier ---------------------------------

struct VvgMetrics {
  Date date;
  std::optional<double> abs_first30;       // points
  std::optional<double> abs_gap;           // points
  std::optional<double> volume_deviation;  // |first-bar volume / prior-days mean - 1|

  bool usable() const { return abs_first30 && abs_gap && volume_deviation; }
};

struct VvgTerciles {
  double first30 = 0.0;
  double gap = 0.0;
  double volume = 0.0;
};

struct VvgClassification {
  std::vector<bool> flags;
  VvgTerciles terciles;
};

std::vector<VvgMetrics> vvg_metrics(std::span<const TradingDay> days, const Instrument& instrument,
                                    int baseline_days = 20);
// Upper-tercile boundaries over usable metrics. Throws DataError with fewer
// than 30 usable days.
VvgTerciles vvg_terciles(std::span<const VvgMetrics> training);
// Strictly above all three boundaries.
std::vector<bool> vvg_flags(std::span<const VvgMetrics> metrics, const VvgTerciles& terciles);
// Boundaries fitted on `days` themselves.
VvgClassification vvg_classify(std::span<const TradingDay> days, const Instrument& instrument,
                               int baseline_days = 20);

enum class VvgMode { Reversal, Continuation, CloseFade };

struct VvgParams {
  int first_entry_bar = kOpeningRangeBars;
  int stride = 2;
  ClockTime close_fade_time = hhmm(15, 30);
};

std::vector<SignalEvent> vvg_strategy_signals(const TradingDay& day, const DayPrimitives& prims, bool flagged,
                                              VvgMode mode, const VvgParams& params = {},
                                              int min_horizon = 1);

// --- post-release drift -------------------------------------------------------

inline constexpr int kMinEventOffset = 6;

// Direction from the close of the release bar to the close five bars later;
// the signal bar is release bar + start_bar_offset. Throws
// std::invalid_argument when start_bar_offset < 6.
std::vector<SignalEvent> event_drift_signals(const TradingDay& day, std::span<const EconEvent> events,
                                             int start_bar_offset, const Instrument& instrument,
                                             int min_horizon = 1);

// --- OU reversion -------------------------------------------------------------

struct OuSignalResult {
  std::vector<SignalEvent> events;
  std::vector<std::string> warnings;
};

std::vector<double> closes_in_points(std::span<const Bar> bars, const Instrument& instrument);

OuSignalResult ou_reversion_signals(const TradingDay& day, const OuFit& fit, double threshold,
                                    const Instrument& instrument, double rearm = 0.5, int min_horizon = 1);

// --- regime confluence ------------------------------------------------------

struct ConfluenceParams {
  double transition_threshold = 0.15;
  double volume_z_threshold = 0.5;
  double pullback_points = 25.0;
  int exit_bar = 13;
};

// Per-bar inputs aligned with one day's bars, sliced from a continuous
// multi-day stream.
struct ConfluenceInputs {
  std::span<const int> labels;
  std::span<const std::optional<double>> transition_to_bullish;  // P(1 -> 2)
  std::span<const std::optional<double>> volume_z;
  std::span<const std::optional<double>> atr;  // points
  double atr_baseline = 0.0;                   // training-window median ATR
};

std::vector<SignalEvent> confluence_rth_signals(const TradingDay& day, const ConfluenceInputs& inputs,
                                                const ConfluenceParams& params, const Instrument& instrument,
                                                int min_horizon = 1);

// --- London regime transition -----------------------------------------------

inline constexpr int kLondonHoldBars = 4;

std::vector<SignalEvent> london_b_signals(const TradingDay& day, std::span<const int> labels,
                                          int min_horizon = 1);

// Mirror a day through zero: open/close negated, high/low swapped and negated.
TradingDay negate_prices(const TradingDay& day);

}  // namespace falsify
