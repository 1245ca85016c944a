#include "falsify/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "falsify/error.hpp"
#include "falsify/rng.hpp"

namespace falsify {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr int kLloydPasses = 10;

// Per-component constants hoisted out of the row loop:
// log w_j - 0.5 * sum_d (log 2pi + log var_jd), and 1 / var_jd.
struct ComponentTerms {
  std::vector<double> constant;
  std::vector<FeatureVec> inv_var;

  explicit ComponentTerms(const RegimeModel& m) : constant(m.k), inv_var(m.k) {
    for (int j = 0; j < m.k; ++j) {
      double c = std::log(m.weights[j]);
      for (int d = 0; d < kFeatureDim; ++d) {
        c -= 0.5 * (kLog2Pi + std::log(m.variances[j][d]));
        inv_var[j][d] = 1.0 / m.variances[j][d];
      }
      constant[j] = c;
    }
  }

  double log_density(const RegimeModel& m, int j, const FeatureVec& z) const {
    double q = 0.0;
    for (int d = 0; d < kFeatureDim; ++d) {
      const double diff = z[d] - m.means[j][d];
      q += diff * diff * inv_var[j][d];
    }
    return constant[j] - 0.5 * q;
  }
};

inline void estep_row(const RegimeModel& m, const ComponentTerms& terms, const FeatureVec& z, double* resp,
                      double& ll) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < m.k; ++j) {
    resp[j] = terms.log_density(m, j, z);
    mx = std::max(mx, resp[j]);
  }
  double total = 0.0;
  for (int j = 0; j < m.k; ++j) {
    resp[j] = std::exp(resp[j] - mx);
    total += resp[j];
  }
  for (int j = 0; j < m.k; ++j) resp[j] /= total;
  ll = mx + std::log(total);
}

struct FitAttempt {
  RegimeModel model;
  bool collapsed = false;
  bool converged = false;
};

FitAttempt seed_model(std::span<const FeatureVec> z, int k, std::uint64_t seed, double min_variance) {
  const std::size_t n = z.size();
  FitAttempt out;
  RegimeModel& m = out.model;
  m.k = k;
  m.seed_used = seed;
  m.means.assign(k, FeatureVec{});
  m.variances.assign(k, FeatureVec{1.0, 1.0, 1.0});
  m.weights.assign(k, 1.0 / k);

  // Greedy k-means++: each new center is the best of a few D^2 draws by
  // total potential.
  Rng rng(derive_seed(seed, "gmm-init"));
  m.means[0] = z[rng.below(n)];
  auto sq = [](const FeatureVec& a, const FeatureVec& b) {
    double dist = 0.0;
    for (int d = 0; d < kFeatureDim; ++d) dist += (a[d] - b[d]) * (a[d] - b[d]);
    return dist;
  };
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq(z[i], m.means[0]);
  for (int j = 1; j < k; ++j) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = rng.below(n);
    double pick_potential = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
      std::size_t cand = rng.below(n);
      if (total > 0.0) {
        double u = rng.uniform() * total;
        for (std::size_t i = 0; i < n; ++i) {
          u -= d2[i];
          if (u <= 0.0) {
            cand = i;
            break;
          }
        }
      }
      double potential = 0.0;
      for (std::size_t i = 0; i < n; ++i) potential += std::min(d2[i], sq(z[i], z[cand]));
      if (potential < pick_potential) {
        pick = cand;
        pick_potential = potential;
      }
    }
    m.means[j] = z[pick];
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq(z[i], m.means[j]));
  }

  // A few Lloyd passes, then start EM from the hard-assignment moments.
  // Unit variances around raw k-means++ picks let a wide component swallow
  // two tight ones.
  std::vector<int> assign(n, 0);
  for (int pass = 0; pass < kLloydPasses; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        double dist = 0.0;
        for (int d = 0; d < kFeatureDim; ++d) dist += (z[i][d] - m.means[j][d]) * (z[i][d] - m.means[j][d]);
        if (dist < best_d) {
          best = j;
          best_d = dist;
        }
      }
      moved |= pass == 0 || assign[i] != best;
      assign[i] = best;
    }
    if (!moved) break;
    std::vector<FeatureVec> sum(k, FeatureVec{});
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[assign[i]];
      for (int d = 0; d < kFeatureDim; ++d) sum[assign[i]][d] += z[i][d];
    }
    for (int j = 0; j < k; ++j) {
      if (count[j] == 0) continue;
      for (int d = 0; d < kFeatureDim; ++d) m.means[j][d] = sum[j][d] / static_cast<double>(count[j]);
    }
  }
  std::vector<FeatureVec> ss(k, FeatureVec{});
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++count[assign[i]];
    for (int d = 0; d < kFeatureDim; ++d) {
      const double diff = z[i][d] - m.means[assign[i]][d];
      ss[assign[i]][d] += diff * diff;
    }
  }
  for (int j = 0; j < k; ++j) {
    if (count[j] < 2) continue;
    m.weights[j] = static_cast<double>(count[j]) / static_cast<double>(n);
    for (int d = 0; d < kFeatureDim; ++d) {
      const double v = ss[j][d] / static_cast<double>(count[j]);
      if (v > min_variance) m.variances[j][d] = v;
    }
  }
  double wsum = 0.0;
  for (double w : m.weights) wsum += w;
  for (double& w : m.weights) w /= wsum;
  return out;
}

// Continues EM from the current state for at most `budget` more iterations.
void run_em(FitAttempt& out, std::span<const FeatureVec> z, const GmmOptions& opt, int budget) {
  const std::size_t n = z.size();
  RegimeModel& m = out.model;
  const int k = m.k;
  std::vector<double> resp(n * k), ll(n);
  const int stop = std::min(m.iterations + budget, opt.max_iterations);
  for (int it = m.iterations; it < stop; ++it) {
    if (opt.parallel) gmm_estep(m, z, resp, ll);
    else gmm_estep_serial(m, z, resp, ll);
    double total_ll = 0.0;
    for (double v : ll) total_ll += v;
    const double mean_ll = total_ll / static_cast<double>(n);
    const double prev = m.log_likelihood_trace.empty() ? 0.0 : m.log_likelihood_trace.back();
    m.log_likelihood_trace.push_back(mean_ll);
    m.iterations = it + 1;
    if (it > 0 && std::abs(mean_ll - prev) < opt.tolerance) {
      out.converged = true;
      return;
    }

    // M-step: one pass of weighted first and second moments, summed in
    // observation order for reproducibility. Features are standardized, so
    // E[z^2] - mean^2 loses nothing material.
    std::vector<double> nks(k, 0.0);
    std::vector<FeatureVec> s1(k, FeatureVec{}), s2(k, FeatureVec{});
    for (std::size_t i = 0; i < n; ++i) {
      const double* r = resp.data() + i * k;
      for (int j = 0; j < k; ++j) {
        nks[j] += r[j];
        for (int d = 0; d < kFeatureDim; ++d) {
          const double rz = r[j] * z[i][d];
          s1[j][d] += rz;
          s2[j][d] += rz * z[i][d];
        }
      }
    }
    for (int j = 0; j < k; ++j) {
      const double nk = nks[j];
      if (nk < 1e-8) {
        out.collapsed = true;
        return;
      }
      FeatureVec mean{}, var{};
      for (int d = 0; d < kFeatureDim; ++d) {
        mean[d] = s1[j][d] / nk;
        var[d] = s2[j][d] / nk - mean[d] * mean[d];
      }
      for (int d = 0; d < kFeatureDim; ++d) {
        if (!(var[d] >= opt.min_variance)) {
          out.collapsed = true;
          return;
        }
      }
      m.means[j] = mean;
      m.variances[j] = var;
      m.weights[j] = nk / static_cast<double>(n);
    }
  }
  if (m.iterations >= opt.max_iterations) out.converged = true;
}

}  // namespace

FeatureVec RegimeModel::standardize(const FeatureVec& x) const {
  FeatureVec z;
  for (int d = 0; d < kFeatureDim; ++d) z[d] = (x[d] - center[d]) / scale[d];
  return z;
}

std::vector<double> RegimeModel::component_log_densities(const FeatureVec& x) const {
  const auto z = standardize(x);
  const ComponentTerms terms(*this);
  std::vector<double> out(k);
  for (int j = 0; j < k; ++j) out[j] = terms.log_density(*this, j, z);
  return out;
}

void gmm_estep(const RegimeModel& model, std::span<const FeatureVec> standardized,
               std::span<double> responsibilities, std::span<double> loglik) {
  const ComponentTerms terms(model);
  const auto n = static_cast<std::ptrdiff_t>(standardized.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    estep_row(model, terms, standardized[i], responsibilities.data() + i * model.k, loglik[i]);
  }
}

void gmm_estep_serial(const RegimeModel& model, std::span<const FeatureVec> standardized,
                      std::span<double> responsibilities, std::span<double> loglik) {
  const ComponentTerms terms(model);
  for (std::size_t i = 0; i < standardized.size(); ++i) {
    estep_row(model, terms, standardized[i], responsibilities.data() + i * model.k, loglik[i]);
  }
}

RegimeModel gmm_fit(std::span<const FeatureVec> features, int k, std::uint64_t seed,
                    const GmmOptions& options) {
  if (k < 1) throw std::invalid_argument("gmm_fit: k must be >= 1");
  if (features.size() < static_cast<std::size_t>(50 * k)) {
    throw DataError(fmt::format("gmm_fit: need at least {} observations, have {}", 50 * k, features.size()));
  }
  FeatureVec center{}, scale{};
  for (const auto& x : features) {
    for (int d = 0; d < kFeatureDim; ++d) {
      if (!std::isfinite(x[d])) throw DataError("gmm_fit: non-finite feature");
      center[d] += x[d];
    }
  }
  const double n = static_cast<double>(features.size());
  for (int d = 0; d < kFeatureDim; ++d) center[d] /= n;
  for (const auto& x : features) {
    for (int d = 0; d < kFeatureDim; ++d) scale[d] += (x[d] - center[d]) * (x[d] - center[d]);
  }
  for (int d = 0; d < kFeatureDim; ++d) {
    scale[d] = std::sqrt(scale[d] / n);
    if (!(scale[d] > 0.0)) scale[d] = 1.0;
  }
  std::vector<FeatureVec> z(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (int d = 0; d < kFeatureDim; ++d) z[i][d] = (features[i][d] - center[d]) / scale[d];
  }

  // Short-run screening: every initialisation gets a few EM iterations, the
  // highest log-likelihood (earliest on ties) is run to convergence. A start
  // that collapses restarts with the next seed; if the survivor collapses
  // later the next-best candidate takes over.
  const int inits = std::max(options.initializations, 1);
  const int screen = inits > 1 ? options.screening_iterations : options.max_iterations;
  std::vector<FitAttempt> candidates;
  for (int init = 0; init < inits; ++init) {
    const std::uint64_t base = init == 0 ? seed : derive_seed(seed, "gmm-start", static_cast<std::uint64_t>(init));
    for (int attempt = 0; attempt <= options.max_restarts; ++attempt) {
      auto fit = seed_model(z, k, base + static_cast<std::uint64_t>(attempt), options.min_variance);
      run_em(fit, z, options, screen);
      if (fit.collapsed) continue;
      candidates.push_back(std::move(fit));
      break;
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const FitAttempt& a, const FitAttempt& b) {
    return a.model.log_likelihood_trace.back() > b.model.log_likelihood_trace.back();
  });
  std::optional<RegimeModel> best;
  for (auto& c : candidates) {
    if (!c.converged) run_em(c, z, options, options.max_iterations);
    if (c.collapsed) continue;
    best = std::move(c.model);
    break;
  }
  if (!best) throw DataError(fmt::format("gmm_fit: variance collapse after {} restarts", options.max_restarts));

  RegimeModel raw = std::move(*best);
  raw.center = center;
  raw.scale = scale;
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return raw.means[a][0] < raw.means[b][0]; });
  RegimeModel m = raw;
  m.label_order = order;
  for (int r = 0; r < k; ++r) {
    m.means[r] = raw.means[order[r]];
    m.variances[r] = raw.variances[order[r]];
    m.weights[r] = raw.weights[order[r]];
  }
  return m;
}

namespace {

// Argmax posterior; ties go to the lower index.
int label_one(const RegimeModel& model, const ComponentTerms& terms, const FeatureVec& x) {
  const auto z = model.standardize(x);
  int best = 0;
  double best_lp = terms.log_density(model, 0, z);
  for (int j = 1; j < model.k; ++j) {
    const double lp = terms.log_density(model, j, z);
    if (lp > best_lp) {
      best = j;
      best_lp = lp;
    }
  }
  return best;
}

}  // namespace

std::vector<int> regime_labels(const RegimeModel& model, std::span<const FeatureVec> features) {
  const ComponentTerms terms(model);
  std::vector<int> out(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) out[i] = label_one(model, terms, features[i]);
  return out;
}

std::vector<int> regime_labels(const RegimeModel& model,
                               std::span<const std::optional<FeatureVec>> features) {
  const ComponentTerms terms(model);
  std::vector<int> out(features.size(), kUnlabeled);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i]) out[i] = label_one(model, terms, *features[i]);
  }
  return out;
}

OptionalSeries markov_transition_prob(std::span<const int> labels, int window, int from, int to) {
  if (window < 10) throw std::invalid_argument("markov window must be >= 10");
  const std::size_t n = labels.size();
  OptionalSeries out(n);
  // Sliding counts over pair starts j in [i - window, i - 2].
  long from_count = 0, hit_count = 0;
  auto add = [&](std::size_t j, int sign) {
    if (labels[j] != from || labels[j + 1] == kUnlabeled) return;
    from_count += sign;
    if (labels[j + 1] == to) hit_count += sign;
  };
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t i = w; i < n; ++i) {
    if (i == w) {
      for (std::size_t j = 0; j + 1 < w; ++j) add(j, +1);
    } else {
      add(i - w - 1, -1);  // pair (i-w-1, i-w) leaves
      add(i - 2, +1);      // pair (i-2, i-1) enters
    }
    if (from_count > 0) out[i] = static_cast<double>(hit_count) / static_cast<double>(from_count);
  }
  return out;
}

std::vector<std::optional<FeatureVec>> regime_features(std::span<const Bar> bars, int volume_window,
                                                       double tick_size) {
  const auto vz = volume_zscore(bars, volume_window);
  std::vector<std::optional<FeatureVec>> out(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    if (!vz[i]) continue;
    out[i] = FeatureVec{static_cast<double>((bars[i].close - bars[i].open).count()) * tick_size,
                        static_cast<double>(bars[i].range().count()) * tick_size, *vz[i]};
  }
  return out;
}

}  // namespace falsify
