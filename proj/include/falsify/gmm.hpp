#pragma once

// Diagonal-covariance Gaussian mixture regime model and rolling Markov
// transition probabilities over its labels.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "falsify/features.hpp"
#include "falsify/market_data.hpp"

namespace falsify {

inline constexpr int kFeatureDim = 3;
using FeatureVec = std::array<double, kFeatureDim>;

// Regime index once components are ordered by mean bar return.
inline constexpr int kBearishChop = 0;
inline constexpr int kActiveFlow = 1;
inline constexpr int kBullishDrift = 2;
inline constexpr int kUnlabeled = -1;

struct RegimeModel {
  int k = 0;
  // Component parameters live in standardized feature space and are already
  // ordered so that index == regime label.
  std::vector<FeatureVec> means;
  std::vector<FeatureVec> variances;
  std::vector<double> weights;
  // label_order[regime] = component index in the raw EM solution.
  std::vector<int> label_order;
  FeatureVec center{};
  FeatureVec scale{};
  std::vector<double> log_likelihood_trace;  // mean per-observation, one per iteration
  int iterations = 0;
  std::uint64_t seed_used = 0;

  FeatureVec standardize(const FeatureVec& x) const;
  // log(w_j) + log N(z | mean_j, var_j) for every component.
  std::vector<double> component_log_densities(const FeatureVec& x) const;
  friend bool operator==(const RegimeModel&, const RegimeModel&) = default;
};

struct GmmOptions {
  int max_iterations = 500;
  double tolerance = 1e-8;  // on mean per-observation log-likelihood
  int max_restarts = 5;
  int initializations = 6;  // independent k-means++ starts
  int screening_iterations = 25;  // EM iterations per start before picking one
  double min_variance = 1e-6;
  bool parallel = true;
};

RegimeModel gmm_fit(std::span<const FeatureVec> features, int k, std::uint64_t seed,
                    const GmmOptions& options = {});

// Argmax posterior; ties go to the lower regime index.
std::vector<int> regime_labels(const RegimeModel& model, std::span<const FeatureVec> features);

// Same, skipping absent features (label kUnlabeled).
std::vector<int> regime_labels(const RegimeModel& model,
                               std::span<const std::optional<FeatureVec>> features);

// Empirical P(to | from) over label pairs (j, j+1) with both inside
// [i - window, i - 1]. Pairs touching kUnlabeled are ignored.
OptionalSeries markov_transition_prob(std::span<const int> labels, int window, int from, int to);

// (bar return, bar range) in points and the rolling volume z-score.
std::vector<std::optional<FeatureVec>> regime_features(std::span<const Bar> bars, int volume_window,
                                                       double tick_size);

// One E-step: fills responsibilities (n x k, row-major) and per-observation
// log-likelihood. The OpenMP and serial kernels produce identical bits.
void gmm_estep(const RegimeModel& model, std::span<const FeatureVec> standardized,
               std::span<double> responsibilities, std::span<double> loglik);
void gmm_estep_serial(const RegimeModel& model, std::span<const FeatureVec> standardized,
                      std::span<double> responsibilities, std::span<double> loglik);

}  // namespace falsify
