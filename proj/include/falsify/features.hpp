#pragma once

// Per-bar estimators consumed by the signal families. Rolling windows cover
// strictly prior bars [i - window, i - 1]; the value at index i never reads
// bar i or anything later.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "falsify/market_data.hpp"

namespace falsify {

using OptionalSeries = std::vector<std::optional<double>>;

enum class RollingStatistic { MeanRange, VolumeMean, VolumeStd, Atr };

struct RollingSpec {
  int window = 20;
  RollingStatistic statistic = RollingStatistic::MeanRange;
};

// Price statistics are returned in points.
OptionalSeries rolling_stat(std::span<const Bar> bars, const RollingSpec& spec, double tick_size);

// (v_i - mean) / std over the prior `window` volumes, population std.
// Absent during warm-up and when the window has zero dispersion.
OptionalSeries volume_zscore(std::span<const Bar> bars, int window);

struct KalmanParams {
  double q = 1e-3;  // process noise scale
  double r = 1.0;   // observation noise scale
  double prior_variance = 1e6;
};

// Constant-velocity (level + slope) filter.
struct KalmanState {
  double level = 0.0;
  double velocity = 0.0;
  std::array<std::array<double, 2>, 2> cov{};

  void predict(double q);
  // Joseph-form update; keeps `cov` symmetric positive semidefinite.
  void update(double observation, double r);
};

struct KalmanTrack {
  std::vector<double> velocity;    // points per bar
  std::vector<double> velocity_z;  // velocity / posterior std of velocity
};

KalmanTrack kalman_velocity(std::span<const double> closes, const KalmanParams& params);

// Rescaled-range estimate: slope of log mean(R/S) on log chunk size over
// dyadic sizes min_chunk, 2*min_chunk, ... <= n/2.
double hurst_exponent(std::span<const double> returns, int min_chunk = 16);

struct OuFit {
  double phi = 0.0;
  double intercept = 0.0;
  double mu = 0.0;  // meaningful only when half_life is set
  double sigma_eps = 0.0;
  std::optional<double> half_life;  // bars; absent unless 0 < phi < 1

  bool valid() const { return half_life.has_value(); }
  double stationary_std() const;
};

// Least-squares AR(1) on levels: x[t+1] = c + phi * x[t] + e.
OuFit ou_fit(std::span<const double> prices);
std::vector<double> ou_zscore(std::span<const double> prices, const OuFit& fit);

}  // namespace falsify

namespace falsify {

// Linear-interpolation quantile (Hyndman-Fan type 7) of unsorted values.
double quantile(std::vector<double> values, double p);

}  // namespace falsify
