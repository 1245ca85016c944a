#include "falsify/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "falsify/error.hpp"

namespace falsify {

namespace {

void check_window(int window) {
  if (window < 2) throw std::invalid_argument("rolling window must be >= 2");
}

std::vector<double> true_ranges(std::span<const Bar> bars) {
  std::vector<double> tr(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    double r = static_cast<double>(bars[i].range().count());
    if (i > 0) {
      const auto pc = bars[i - 1].close;
      r = std::max({r, std::abs(static_cast<double>((bars[i].high - pc).count())),
                    std::abs(static_cast<double>((bars[i].low - pc).count()))});
    }
    tr[i] = r;
  }
  return tr;
}

// Mean (and optionally population std) of values[i-window .. i-1]. Sums are
// recomputed per index so results do not depend on accumulation history.
OptionalSeries prior_window_mean(const std::vector<double>& values, int window, double scale) {
  OptionalSeries out(values.size());
  for (std::size_t i = window; i < values.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = i - window; j < i; ++j) s += values[j];
    out[i] = scale * s / window;
  }
  return out;
}

OptionalSeries prior_window_std(const std::vector<double>& values, int window) {
  OptionalSeries out(values.size());
  for (std::size_t i = window; i < values.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = i - window; j < i; ++j) s += values[j];
    const double mean = s / window;
    double ss = 0.0;
    for (std::size_t j = i - window; j < i; ++j) ss += (values[j] - mean) * (values[j] - mean);
    out[i] = std::sqrt(ss / window);
  }
  return out;
}

}  // namespace

OptionalSeries rolling_stat(std::span<const Bar> bars, const RollingSpec& spec, double tick_size) {
  check_window(spec.window);
  std::vector<double> values(bars.size());
  switch (spec.statistic) {
    case RollingStatistic::MeanRange:
      for (std::size_t i = 0; i < bars.size(); ++i) values[i] = static_cast<double>(bars[i].range().count());
      return prior_window_mean(values, spec.window, tick_size);
    case RollingStatistic::Atr:
      return prior_window_mean(true_ranges(bars), spec.window, tick_size);
    case RollingStatistic::VolumeMean:
      for (std::size_t i = 0; i < bars.size(); ++i) values[i] = static_cast<double>(bars[i].volume);
      return prior_window_mean(values, spec.window, 1.0);
    case RollingStatistic::VolumeStd:
      for (std::size_t i = 0; i < bars.size(); ++i) values[i] = static_cast<double>(bars[i].volume);
      return prior_window_std(values, spec.window);
  }
  return OptionalSeries(bars.size());
}

OptionalSeries volume_zscore(std::span<const Bar> bars, int window) {
  check_window(window);
  const auto mean = rolling_stat(bars, {window, RollingStatistic::VolumeMean}, 1.0);
  const auto sd = rolling_stat(bars, {window, RollingStatistic::VolumeStd}, 1.0);
  OptionalSeries out(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    if (!mean[i] || !sd[i] || *sd[i] <= 0.0) continue;
    out[i] = (static_cast<double>(bars[i].volume) - *mean[i]) / *sd[i];
  }
  return out;
}

void KalmanState::predict(double q) {
  // x' = F x, P' = F P F^T + Q with F = [[1,1],[0,1]] and white-noise
  // acceleration Q = q [[1/3, 1/2], [1/2, 1]].
  level += velocity;
  const auto& p = cov;
  const double p00 = p[0][0] + p[0][1] + p[1][0] + p[1][1] + q / 3.0;
  const double p01 = p[0][1] + p[1][1] + q / 2.0;
  const double p11 = p[1][1] + q;
  cov = {{{p00, p01}, {p01, p11}}};
}

void KalmanState::update(double observation, double r) {
  const double s = cov[0][0] + r;
  const double k0 = cov[0][0] / s;
  const double k1 = cov[1][0] / s;
  const double innovation = observation - level;
  level += k0 * innovation;
  velocity += k1 * innovation;
  // Joseph form: (I - K H) P (I - K H)^T + K r K^T
  const double a00 = 1.0 - k0, a10 = -k1;
  const auto& p = cov;
  // M = A P, A = [[a00, 0], [a10, 1]]
  const double m00 = a00 * p[0][0];
  const double m01 = a00 * p[0][1];
  const double m10 = a10 * p[0][0] + p[1][0];
  const double m11 = a10 * p[0][1] + p[1][1];
  const double n00 = m00 * a00 + r * k0 * k0;
  const double n01 = m00 * a10 + m01 + r * k0 * k1;
  const double n10 = m10 * a00 + r * k1 * k0;
  const double n11 = m10 * a10 + m11 + r * k1 * k1;
  const double off = 0.5 * (n01 + n10);
  cov = {{{n00, off}, {off, n11}}};
}

KalmanTrack kalman_velocity(std::span<const double> closes, const KalmanParams& params) {
  if (closes.empty()) throw DataError("kalman_velocity: empty series");
  if (!(params.q > 0.0) || !(params.r > 0.0)) throw std::invalid_argument("kalman q and r must be > 0");
  for (double c : closes) {
    if (!std::isfinite(c)) throw DataError("kalman_velocity: non-finite input");
  }
  KalmanState st;
  st.level = closes[0];
  st.velocity = 0.0;
  st.cov = {{{params.r, 0.0}, {0.0, params.prior_variance}}};
  KalmanTrack track;
  track.velocity.reserve(closes.size());
  track.velocity_z.reserve(closes.size());
  track.velocity.push_back(0.0);
  track.velocity_z.push_back(0.0);
  for (std::size_t i = 1; i < closes.size(); ++i) {
    st.predict(params.q);
    st.update(closes[i], params.r);
    track.velocity.push_back(st.velocity);
    track.velocity_z.push_back(st.velocity / std::sqrt(std::max(st.cov[1][1], 1e-300)));
  }
  return track;
}

double hurst_exponent(std::span<const double> returns, int min_chunk) {
  const std::size_t n = returns.size();
  if (n < 100) throw DataError("hurst_exponent: need at least 100 returns");
  if (min_chunk < 4) throw std::invalid_argument("hurst_exponent: min_chunk must be >= 4");
  const auto [mn, mx] = std::minmax_element(returns.begin(), returns.end());
  if (*mn == *mx) throw DataError("hurst_exponent: constant series has zero dispersion");

  std::vector<double> log_size, log_rs;
  for (std::size_t s = min_chunk; s <= n / 2; s *= 2) {
    const std::size_t chunks = n / s;
    double rs_sum = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
      const auto chunk = returns.subspan(c * s, s);
      double mean = 0.0;
      for (double x : chunk) mean += x;
      mean /= static_cast<double>(s);
      double cum = 0.0, lo = 0.0, hi = 0.0, ss = 0.0;
      for (double x : chunk) {
        cum += x - mean;
        lo = std::min(lo, cum);
        hi = std::max(hi, cum);
        ss += (x - mean) * (x - mean);
      }
      const double sd = std::sqrt(ss / static_cast<double>(s));
      if (sd <= 0.0) continue;
      rs_sum += (hi - lo) / sd;
      ++used;
    }
    if (used == 0 || rs_sum <= 0.0) continue;
    log_size.push_back(std::log(static_cast<double>(s)));
    log_rs.push_back(std::log(rs_sum / static_cast<double>(used)));
  }
  if (log_size.size() < 2) throw DataError("hurst_exponent: fewer than two usable chunk sizes");

  const double k = static_cast<double>(log_size.size());
  double mx_ = 0.0, my = 0.0;
  for (std::size_t i = 0; i < log_size.size(); ++i) {
    mx_ += log_size[i];
    my += log_rs[i];
  }
  mx_ /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < log_size.size(); ++i) {
    sxy += (log_size[i] - mx_) * (log_rs[i] - my);
    sxx += (log_size[i] - mx_) * (log_size[i] - mx_);
  }
  return sxy / sxx;
}

double OuFit::stationary_std() const { return sigma_eps / std::sqrt(1.0 - phi * phi); }

OuFit ou_fit(std::span<const double> prices) {
  if (prices.size() < 30) throw DataError("ou_fit: need at least 30 observations");
  const std::size_t m = prices.size() - 1;
  double mx = 0.0, my = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    mx += prices[t];
    my += prices[t + 1];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    sxx += (prices[t] - mx) * (prices[t] - mx);
    sxy += (prices[t] - mx) * (prices[t + 1] - my);
  }
  if (sxx <= 0.0) throw DataError("ou_fit: constant series");
  OuFit fit;
  fit.phi = sxy / sxx;
  fit.intercept = my - fit.phi * mx;
  double ssr = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    const double e = prices[t + 1] - fit.intercept - fit.phi * prices[t];
    ssr += e * e;
  }
  fit.sigma_eps = std::sqrt(ssr / static_cast<double>(m - 2));
  if (fit.phi < 1.0) fit.mu = fit.intercept / (1.0 - fit.phi);
  if (fit.phi > 0.0 && fit.phi < 1.0) fit.half_life = std::numbers::ln2 / -std::log(fit.phi);
  return fit;
}

std::vector<double> ou_zscore(std::span<const double> prices, const OuFit& fit) {
  if (!fit.valid()) throw DataError("ou_zscore: fit has no defined half-life");
  const double sd = fit.stationary_std();
  std::vector<double> z(prices.size());
  for (std::size_t i = 0; i < prices.size(); ++i) z[i] = (prices[i] - fit.mu) / sd;
  return z;
}

}  // namespace falsify

namespace falsify {

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace falsify
