#pragma once

// Synthetic OHLCV corpora with known properties: driftless null days, planted
// per-event drift, and hidden regime chains.

#include <cstdint>
#include <optional>
#include <vector>

#include "falsify/market_data.hpp"
#include "falsify/signals.hpp"

namespace falsify {

enum class Placement { Random, Confluence };

struct DriftSpec {
  double magnitude = 15.0;  // points over the horizon, in the planted direction
  int horizon = 13;
  int events_per_day = 1;  // Random placement only
  Placement placement = Placement::Random;
  Direction direction = Direction::Long;
  int min_bar = kOpeningRangeBars;
  double volume_boost = 1.0;  // multiplier on the planted bar's volume (Random)
  // Confluence placement thresholds, evaluated on the true labels.
  double transition_threshold = 0.15;
  double volume_z_threshold = 0.5;
  int transition_window = 200;
  int volume_window = 50;
};

struct RegimeSpec {
  std::vector<std::vector<double>> transition;  // rows sum to 1
  std::vector<double> mean;                     // points per bar
  std::vector<double> vol_mult;
  std::vector<double> volume_mult;
  int initial = 0;

  int k() const { return static_cast<int>(transition.size()); }
  void validate() const;
};

struct SynthSpec {
  int n_days = 0;
  SessionSpec session = SessionSpec::rth();
  double vol_per_bar = 8.0;  // points, std of close - open
  std::uint64_t seed = 1;
  std::optional<DriftSpec> drift;
  std::optional<RegimeSpec> regimes;
  int start_year = 2022;
  int days_per_year = 250;
  double start_price = 15000.0;
  double gap_vol = 20.0;
  double base_volume = 1000.0;
  double volume_sigma = 0.5;  // lognormal shape
  int substeps = 5;

  void validate() const;
};

// Three-state chain the mixture model separates cleanly: low-volatility
// down and up drifts around a rare high-volatility, high-volume state whose
// exits are symmetric, so the chain alone carries no forward edge after it.
RegimeSpec reference_regimes();

// Weekdays from the first of January, `days_per_year` per calendar year.
std::vector<Date> synthetic_calendar(int start_year, int days_per_year, int n_days);

struct EdgeCorpus {
  std::vector<TradingDay> days;
  std::vector<SignalEvent> planted;  // ground truth, family CONFLUENCE_RTH
  std::size_t skipped = 0;           // slots too close to the session end
};

struct RegimeCorpus {
  std::vector<TradingDay> days;
  std::vector<std::vector<int>> labels;  // per day, per bar
};

std::vector<TradingDay> gen_null_days(const SynthSpec& spec, const Instrument& instrument);
std::vector<TradingDay> gen_null_days_serial(const SynthSpec& spec, const Instrument& instrument);
EdgeCorpus gen_edge_days(const SynthSpec& spec, const Instrument& instrument);
RegimeCorpus gen_regime_days(const SynthSpec& spec, const Instrument& instrument);

// High-impact USD releases (FOMC 14:00, CPI/NFP 08:30, PCE 10:00) plus
// lower-impact and non-USD rows, over the given session dates.
std::vector<EconEvent> synthetic_event_calendar(const std::vector<Date>& dates, std::uint64_t seed);

}  // namespace falsify
