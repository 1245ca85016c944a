#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "falsify/error.hpp"
#include "falsify/gmm.hpp"
#include "falsify/rng.hpp"
#include "falsify/synth.hpp"

using namespace falsify;

namespace {

struct Planted {
  std::vector<FeatureVec> x;
  std::vector<int> label;  // ordered by first-coordinate mean
};

Planted planted_clusters(std::uint64_t seed, std::size_t n) {
  const FeatureVec means[3] = {{-4.0, 1.0, 0.0}, {0.0, 6.0, 2.0}, {4.0, 1.0, -1.0}};
  const FeatureVec sds[3] = {{0.7, 0.5, 0.8}, {1.0, 1.2, 0.6}, {0.6, 0.4, 0.7}};
  Rng r(seed);
  Planted p;
  for (std::size_t i = 0; i < n; ++i) {
    const int k = static_cast<int>(r.below(3));
    FeatureVec v;
    for (int d = 0; d < kFeatureDim; ++d) v[d] = r.normal(means[k][d], sds[k][d]);
    p.x.push_back(v);
    p.label.push_back(k);
  }
  return p;
}

// Posterior argmax computed from the component parameters directly.
int brute_label(const RegimeModel& m, const FeatureVec& x) {
  int best = 0;
  double best_lp = -1e300;
  for (int j = 0; j < m.k; ++j) {
    double lp = std::log(m.weights[j]);
    for (int d = 0; d < kFeatureDim; ++d) {
      const double z = (x[d] - m.center[d]) / m.scale[d];
      const double v = m.variances[j][d];
      lp += -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * (z - m.means[j][d]) * (z - m.means[j][d]) / v;
    }
    if (lp > best_lp) {
      best = j;
      best_lp = lp;
    }
  }
  return best;
}

std::optional<double> brute_markov(const std::vector<int>& labels, std::size_t i, int w, int from, int to) {
  if (i < static_cast<std::size_t>(w)) return std::nullopt;
  long f = 0, h = 0;
  for (std::size_t j = i - w; j + 1 <= i - 1; ++j) {
    if (labels[j] != from || labels[j + 1] == kUnlabeled) continue;
    ++f;
    if (labels[j + 1] == to) ++h;
  }
  if (f == 0) return std::nullopt;
  return static_cast<double>(h) / static_cast<double>(f);
}

}  // namespace

TEST(Gmm, PlantedClusterAccuracy) {
  const auto p = planted_clusters(1, 3000);
  const auto m = gmm_fit(p.x, 3, 42);
  const auto labels = regime_labels(m, p.x);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += labels[i] == p.label[i];
  EXPECT_GE(static_cast<double>(hit) / labels.size(), 0.95);
}

TEST(Gmm, IdenticalPointsCollapse) {
  const std::vector<FeatureVec> x(300, FeatureVec{1.0, 2.0, 3.0});
  EXPECT_THROW(gmm_fit(x, 3, 1), DataError);
}

TEST(Gmm, TooFewObservationsIsAnError) {
  const auto p = planted_clusters(2, 100);
  EXPECT_THROW(gmm_fit(p.x, 3, 1), DataError);
}

TEST(Gmm, SameSeedIsBitIdentical) {
  const auto p = planted_clusters(3, 2000);
  EXPECT_EQ(gmm_fit(p.x, 3, 9), gmm_fit(p.x, 3, 9));
}

TEST(Gmm, SerialAndParallelFitsAgree) {
  const auto p = planted_clusters(4, 2000);
  GmmOptions serial;
  serial.parallel = false;
  EXPECT_EQ(gmm_fit(p.x, 3, 9), gmm_fit(p.x, 3, 9, serial));
}

TEST(Gmm, WeightsOnSimplexAndOrdered) {
  const auto p = planted_clusters(5, 2000);
  const auto m = gmm_fit(p.x, 3, 1);
  double s = 0.0;
  for (double w : m.weights) s += w;
  EXPECT_NEAR(s, 1.0, 1e-9);
  EXPECT_LT(m.means[0][0], m.means[1][0]);
  EXPECT_LT(m.means[1][0], m.means[2][0]);
  for (const auto& v : m.variances) {
    for (double x : v) EXPECT_GT(x, 0.0);
  }
}

TEST(Gmm, LogLikelihoodNonDecreasing) {
  const auto p = planted_clusters(6, 2000);
  GmmOptions one;
  one.initializations = 1;
  const auto m = gmm_fit(p.x, 3, 1, one);
  for (std::size_t i = 1; i < m.log_likelihood_trace.size(); ++i) {
    EXPECT_GE(m.log_likelihood_trace[i], m.log_likelihood_trace[i - 1] - 1e-12) << i;
  }
}

TEST(Gmm, LabelsMatchBruteForcePosterior) {
  const auto p = planted_clusters(7, 1000);
  const auto m = gmm_fit(p.x, 3, 3);
  const auto labels = regime_labels(m, p.x);
  for (std::size_t i = 0; i < p.x.size(); ++i) EXPECT_EQ(labels[i], brute_label(m, p.x[i])) << i;
}

TEST(Gmm, PointAtComponentMeanTakesItsLabel) {
  const auto p = planted_clusters(8, 2000);
  const auto m = gmm_fit(p.x, 3, 3);
  for (int j = 0; j < 3; ++j) {
    FeatureVec raw;
    for (int d = 0; d < kFeatureDim; ++d) raw[d] = m.center[d] + m.means[j][d] * m.scale[d];
    EXPECT_EQ(regime_labels(m, std::vector<FeatureVec>{raw})[0], j);
  }
}

TEST(Gmm, PosteriorTieGoesToLowerIndex) {
  RegimeModel m;
  m.k = 3;
  m.means = {{-1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {5.0, 0.0, 0.0}};
  m.variances.assign(3, FeatureVec{1.0, 1.0, 1.0});
  m.weights = {0.4, 0.4, 0.2};
  m.center = {0.0, 0.0, 0.0};
  m.scale = {1.0, 1.0, 1.0};
  EXPECT_EQ(regime_labels(m, std::vector<FeatureVec>{{0.0, 0.0, 0.0}})[0], 0);
}

TEST(Gmm, EstepSerialEqualsParallel) {
  const auto p = planted_clusters(9, 5000);
  const auto m = gmm_fit(p.x, 3, 3);
  std::vector<FeatureVec> z;
  for (const auto& x : p.x) z.push_back(m.standardize(x));
  std::vector<double> ra(z.size() * 3), rb(z.size() * 3), la(z.size()), lb(z.size());
  gmm_estep(m, z, ra, la);
  gmm_estep_serial(m, z, rb, lb);
  EXPECT_EQ(ra, rb);
  EXPECT_EQ(la, lb);
}

TEST(Markov, ConstantLabel) {
  const std::vector<int> l(300, 1);
  const auto p11 = markov_transition_prob(l, 200, 1, 1);
  const auto p12 = markov_transition_prob(l, 200, 1, 2);
  EXPECT_EQ(*p11[250], 1.0);
  EXPECT_EQ(*p12[250], 0.0);
}

TEST(Markov, Alternating) {
  std::vector<int> l(300);
  for (std::size_t i = 0; i < l.size(); ++i) l[i] = static_cast<int>(i % 2);
  EXPECT_EQ(*markov_transition_prob(l, 200, 0, 1)[299], 1.0);
}

TEST(Markov, MatchesBruteForcePairCounts) {
  Rng r(17);
  std::vector<int> l(300);
  for (auto& v : l) v = static_cast<int>(r.below(4)) - 1;  // includes unlabeled
  for (int from = 0; from < 3; ++from) {
    for (int to = 0; to < 3; ++to) {
      const auto p = markov_transition_prob(l, 50, from, to);
      for (std::size_t i = 0; i < l.size(); ++i) {
        const auto want = brute_markov(l, i, 50, from, to);
        ASSERT_EQ(p[i].has_value(), want.has_value()) << i;
        if (want) {
          ASSERT_EQ(*p[i], *want) << i;
        }
      }
    }
  }
}

TEST(Markov, WindowBelowTenIsAnError) {
  const std::vector<int> l(50, 0);
  EXPECT_THROW(markov_transition_prob(l, 9, 0, 1), std::invalid_argument);
}

TEST(Regimes, WellSeparatedChainRecovered) {
  Instrument inst;
  SynthSpec s;
  s.n_days = 250;
  s.seed = 4;
  s.volume_sigma = 0.3;
  RegimeSpec r;
  // Short spells keep the rolling volume z informative.
  r.transition = {{0.6, 0.2, 0.2}, {0.2, 0.6, 0.2}, {0.2, 0.2, 0.6}};
  r.mean = {-12.0, 0.0, 12.0};
  r.vol_mult = {0.3, 3.0, 0.3};
  r.volume_mult = {1.0, 3.0, 1.0};
  s.regimes = r;
  const auto corpus = gen_regime_days(s, inst);
  std::vector<Bar> bars;
  std::vector<int> truth;
  for (std::size_t d = 0; d < corpus.days.size(); ++d) {
    bars.insert(bars.end(), corpus.days[d].bars.begin(), corpus.days[d].bars.end());
    truth.insert(truth.end(), corpus.labels[d].begin(), corpus.labels[d].end());
  }
  const auto f = regime_features(bars, 50, inst.tick_size);
  std::vector<FeatureVec> defined;
  for (const auto& x : f) {
    if (x) defined.push_back(*x);
  }
  const auto m = gmm_fit(defined, 3, 11);
  const auto labels = regime_labels(m, f);
  std::size_t n = 0, hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kUnlabeled) continue;
    ++n;
    hit += labels[i] == truth[i];
  }
  EXPECT_GE(static_cast<double>(hit) / static_cast<double>(n), 0.95);
}
