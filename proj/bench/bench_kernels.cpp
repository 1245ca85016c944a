// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include "falsify/gmm.hpp"
#include "falsify/pipeline.hpp"
#include "falsify/rng.hpp"
#include "falsify/stats.hpp"
#include "falsify/synth.hpp"

using namespace falsify;

namespace {

SynthSpec null_spec(int days) {
  SynthSpec s;
  s.n_days = days;
  s.days_per_year = 125;
  s.seed = 11;
  return s;
}

struct PermutationFixture {
  std::vector<TradingDay> days;
  std::vector<TradeRecord> trades;
  ExitSpec exit{ExitKind::Horizon, 6, {}, {}, {}};

  PermutationFixture() {
    const Instrument inst;
    days = gen_null_days(null_spec(250), inst);
    Rng rng(5);
    for (const auto& d : days) {
      const SignalEvent ev{Family::VOL_SPIKE, d.date, 10 + static_cast<int>(rng.below(50)),
                           rng.uniform() < 0.5 ? Direction::Long : Direction::Short, {}};
      const auto res = simulate(std::span(&ev, 1), d, exit, FrictionModel{}, inst);
      trades.insert(trades.end(), res.trades.begin(), res.trades.end());
    }
  }
};

const PermutationFixture& permutation_fixture() {
  static const PermutationFixture f;
  return f;
}

void BM_Permutation(benchmark::State& state, bool parallel) {
  const auto& f = permutation_fixture();
  const PermutationSegment seg{f.trades, f.days, f.exit};
  PermutationOptions opt;
  opt.iterations = 1000;
  opt.seed = 3;
  for (auto _ : state) {
    const double p = parallel ? permutation_test(std::span(&seg, 1), FrictionModel{}, Instrument{}, opt)
                              : permutation_test_serial(std::span(&seg, 1), FrictionModel{}, Instrument{}, opt);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK_CAPTURE(BM_Permutation, openmp, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Permutation, serial, false)->Unit(benchmark::kMillisecond);

struct EstepFixture {
  RegimeModel model;
  std::vector<FeatureVec> z;

  EstepFixture() {
    SynthSpec s = null_spec(500);
    s.regimes = reference_regimes();
    const auto corpus = gen_regime_days(s, Instrument{});
    std::vector<Bar> bars;
    for (const auto& d : corpus.days) bars.insert(bars.end(), d.bars.begin(), d.bars.end());
    std::vector<FeatureVec> x;
    for (const auto& f : regime_features(bars, 50, 0.25)) {
      if (f) x.push_back(*f);
    }
    model = gmm_fit(x, 3, 1);
    for (const auto& v : x) z.push_back(model.standardize(v));
  }
};

void BM_Estep(benchmark::State& state, bool parallel) {
  static const EstepFixture f;
  std::vector<double> resp(f.z.size() * 3), ll(f.z.size());
  for (auto _ : state) {
    if (parallel) {
      gmm_estep(f.model, f.z, resp, ll);
    } else {
      gmm_estep_serial(f.model, f.z, resp, ll);
    }
    benchmark::DoNotOptimize(ll.data());
  }
}
BENCHMARK_CAPTURE(BM_Estep, openmp, true)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Estep, serial, false)->Unit(benchmark::kMicrosecond);

void BM_SynthNull(benchmark::State& state, bool parallel) {
  const auto spec = null_spec(500);
  for (auto _ : state) {
    auto days = parallel ? gen_null_days(spec, Instrument{}) : gen_null_days_serial(spec, Instrument{});
    benchmark::DoNotOptimize(days.data());
  }
}
BENCHMARK_CAPTURE(BM_SynthNull, openmp, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_SynthNull, serial, false)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
