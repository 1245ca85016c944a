#include "falsify/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "falsify/error.hpp"
#include "falsify/features.hpp"
#include "falsify/gmm.hpp"
#include "falsify/rng.hpp"

namespace falsify {

namespace {

using namespace std::chrono;

// Per-bar inputs to the day kernel.
struct DayPlan {
  std::vector<double> drift;        // points added to each bar's close - open
  std::vector<double> vol_mult;     // scales the bar's noise
  std::vector<std::int64_t> volume;
};

// Generates one day's bars relative to an open of zero ticks. Depends only on
// `seed` and the plan, so days can be generated in any order.
std::vector<Bar> day_kernel(const SynthSpec& spec, const Instrument& instrument, Date date, const DayPlan& plan,
                            std::uint64_t seed) {
  Rng rng(seed);
  const int nbars = spec.session.nominal_bars();
  const double sub_sd = spec.vol_per_bar / std::sqrt(static_cast<double>(spec.substeps));
  std::vector<Bar> bars(nbars);
  double price = 0.0;  // points, continuous
  Ticks prev_close{0};
  for (int i = 0; i < nbars; ++i) {
    Bar b;
    b.ts = spec.session.bar_time(date, i);
    b.open = prev_close;
    b.high = b.open;
    b.low = b.open;
    const double step_drift = plan.drift[i] / spec.substeps;
    for (int k = 0; k < spec.substeps; ++k) {
      price += step_drift + sub_sd * plan.vol_mult[i] * rng.normal();
      const Ticks p(static_cast<std::int64_t>(std::llround(price / instrument.tick_size)));
      b.high = std::max(b.high, p);
      b.low = std::min(b.low, p);
      b.close = p;
    }
    b.volume = plan.volume[i];
    prev_close = b.close;
    bars[i] = b;
  }
  return bars;
}

std::vector<std::int64_t> day_volumes(const SynthSpec& spec, std::span<const double> volume_mult,
                                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::int64_t> out(volume_mult.size());
  const double s = spec.volume_sigma;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = spec.base_volume * volume_mult[i] * std::exp(s * rng.normal() - 0.5 * s * s);
    out[i] = std::max<std::int64_t>(1, std::llround(v));
  }
  return out;
}

// Shift each relative day by the previous close plus a gap drawn from the
// day's own stream; link prior closes for RTH.
void stitch(std::vector<TradingDay>& days, const SynthSpec& spec, const Instrument& instrument) {
  Ticks prev = instrument.to_ticks(std::round(spec.start_price / instrument.tick_size) * instrument.tick_size);
  for (std::size_t d = 0; d < days.size(); ++d) {
    Rng rng(derive_seed(spec.seed, "gap", d));
    const Ticks gap(static_cast<std::int64_t>(std::llround(spec.gap_vol * rng.normal() / instrument.tick_size)));
    const Ticks offset = prev + gap;
    for (auto& b : days[d].bars) {
      b.open += offset;
      b.high += offset;
      b.low += offset;
      b.close += offset;
    }
    if (spec.session.name == Session::RTH && d > 0) days[d].prior_rth_close = prev;
    prev = days[d].bars.back().close;
  }
}

struct Plans {
  std::vector<Date> dates;
  std::vector<DayPlan> plans;
  std::vector<std::vector<int>> labels;
};

Plans base_plans(const SynthSpec& spec, bool parallel = true) {
  spec.validate();
  Plans p;
  p.dates = synthetic_calendar(spec.start_year, spec.days_per_year, spec.n_days);
  const int nbars = spec.session.nominal_bars();
  p.plans.resize(spec.n_days);
  p.labels.assign(spec.n_days, std::vector<int>(nbars, 0));

  if (spec.regimes) {
    const auto& r = *spec.regimes;
    Rng chain(derive_seed(spec.seed, "regime-chain"));
    int state = r.initial;
    for (int d = 0; d < spec.n_days; ++d) {
      for (int i = 0; i < nbars; ++i) {
        if (d > 0 || i > 0) {
          const double u = chain.uniform();
          double acc = 0.0;
          int next = r.k() - 1;
          for (int j = 0; j < r.k(); ++j) {
            acc += r.transition[state][j];
            if (u < acc) {
              next = j;
              break;
            }
          }
          state = next;
        }
        p.labels[d][i] = state;
      }
    }
  }

  const auto n = static_cast<std::ptrdiff_t>(spec.n_days);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t d = 0; d < n; ++d) {
    auto& plan = p.plans[d];
    plan.drift.assign(nbars, 0.0);
    plan.vol_mult.assign(nbars, 1.0);
    std::vector<double> vmult(nbars, 1.0);
    if (spec.regimes) {
      for (int i = 0; i < nbars; ++i) {
        const int s = p.labels[d][i];
        plan.drift[i] = spec.regimes->mean[s];
        plan.vol_mult[i] = spec.regimes->vol_mult[s];
        vmult[i] = spec.regimes->volume_mult[s];
      }
    }
    plan.volume = day_volumes(spec, vmult, derive_seed(spec.seed, "volume", static_cast<std::uint64_t>(d)));
  }
  return p;
}

std::vector<TradingDay> realise(const SynthSpec& spec, const Instrument& instrument, const Plans& p,
                                bool parallel) {
  std::vector<TradingDay> days(spec.n_days);
  const auto n = static_cast<std::ptrdiff_t>(spec.n_days);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t d = 0; d < n; ++d) {
    auto& day = days[d];
    day.date = p.dates[d];
    day.session = spec.session;
    day.complete = true;
    day.bars = day_kernel(spec, instrument, p.dates[d], p.plans[d],
                          derive_seed(spec.seed, "price", static_cast<std::uint64_t>(d)));
  }
  stitch(days, spec, instrument);
  return days;
}

void add_drift(DayPlan& plan, int signal_bar, const DriftSpec& drift) {
  const double per_bar = sign(drift.direction) * drift.magnitude / drift.horizon;
  for (int b = signal_bar + 1; b <= signal_bar + drift.horizon; ++b) plan.drift[b] += per_bar;
}

}  // namespace

RegimeSpec reference_regimes() {
  RegimeSpec r;
  r.transition = {{0.90, 0.03, 0.07}, {0.40, 0.20, 0.40}, {0.07, 0.03, 0.90}};
  r.mean = {-5.0, 0.0, 5.0};
  r.vol_mult = {0.4, 3.0, 0.4};
  r.volume_mult = {1.0, 3.0, 0.5};
  return r;
}

void RegimeSpec::validate() const {
  const auto n = transition.size();
  if (n == 0 || mean.size() != n || vol_mult.size() != n || volume_mult.size() != n) {
    throw std::invalid_argument("regime spec: inconsistent component counts");
  }
  for (const auto& row : transition) {
    if (row.size() != n) throw std::invalid_argument("regime spec: transition matrix must be square");
    double s = 0.0;
    for (double v : row) {
      if (v < 0.0) throw std::invalid_argument("regime spec: negative transition probability");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("regime spec: transition rows must sum to 1");
  }
  if (initial < 0 || initial >= static_cast<int>(n)) throw std::invalid_argument("regime spec: bad initial state");
}

void SynthSpec::validate() const {
  if (n_days < 0) throw std::invalid_argument("synth: n_days must be >= 0");
  if (!(vol_per_bar > 0.0)) throw std::invalid_argument("synth: vol_per_bar must be > 0");
  if (days_per_year < 1 || days_per_year > 260) throw std::invalid_argument("synth: days_per_year in [1, 260]");
  if (substeps < 1) throw std::invalid_argument("synth: substeps must be >= 1");
  if (regimes) regimes->validate();
  if (drift && drift->horizon < 1) throw std::invalid_argument("synth: drift horizon must be >= 1");
}

std::vector<Date> synthetic_calendar(int start_year, int days_per_year, int n_days) {
  std::vector<Date> out;
  out.reserve(n_days);
  int year_ = start_year;
  while (static_cast<int>(out.size()) < n_days) {
    sys_days d{year{year_} / January / 1};
    int taken = 0;
    while (taken < days_per_year && static_cast<int>(out.size()) < n_days) {
      const weekday wd{d};
      if (wd != Saturday && wd != Sunday) {
        out.emplace_back(d);
        ++taken;
      }
      d += days{1};
    }
    ++year_;
  }
  return out;
}

std::vector<TradingDay> gen_null_days(const SynthSpec& spec, const Instrument& instrument) {
  if (spec.drift) throw std::invalid_argument("gen_null_days: spec carries drift");
  return realise(spec, instrument, base_plans(spec), true);
}

std::vector<TradingDay> gen_null_days_serial(const SynthSpec& spec, const Instrument& instrument) {
  if (spec.drift) throw std::invalid_argument("gen_null_days: spec carries drift");
  return realise(spec, instrument, base_plans(spec, false), false);
}

EdgeCorpus gen_edge_days(const SynthSpec& spec, const Instrument& instrument) {
  if (!spec.drift) throw std::invalid_argument("gen_edge_days: spec has no drift");
  const auto& drift = *spec.drift;
  auto p = base_plans(spec);
  const int nbars = spec.session.nominal_bars();
  const int last = nbars - 1;
  EdgeCorpus out;

  auto plant = [&](int d, int s) {
    if (s + drift.horizon > last) {
      ++out.skipped;
      return;
    }
    add_drift(p.plans[d], s, drift);
    out.planted.push_back(SignalEvent{Family::CONFLUENCE_RTH, p.dates[d], s, drift.direction, {{"planted", 1.0}}});
  };

  if (drift.placement == Placement::Random) {
    const int hi = last - drift.horizon;
    for (int d = 0; d < spec.n_days; ++d) {
      Rng rng(derive_seed(spec.seed, "plant", static_cast<std::uint64_t>(d)));
      std::vector<int> slots;
      const int span_ = hi - drift.min_bar + 1;
      const int want = std::min(drift.events_per_day, std::max(span_, 0));
      while (static_cast<int>(slots.size()) < want) {
        const int s = drift.min_bar + static_cast<int>(rng.below(static_cast<std::uint64_t>(span_)));
        if (std::find(slots.begin(), slots.end(), s) == slots.end()) slots.push_back(s);
      }
      std::sort(slots.begin(), slots.end());
      for (int s : slots) {
        plant(d, s);
        const double boosted = static_cast<double>(p.plans[d].volume[s]) * drift.volume_boost;
        p.plans[d].volume[s] = std::max<std::int64_t>(1, std::llround(boosted));
      }
    }
  } else {
    if (!spec.regimes) throw std::invalid_argument("gen_edge_days: confluence placement needs regimes");
    // Qualifying bars from the true labels and generated volumes; neither
    // depends on the drift being planted.
    std::vector<Bar> stream;
    std::vector<int> labels;
    stream.reserve(static_cast<std::size_t>(spec.n_days) * nbars);
    for (int d = 0; d < spec.n_days; ++d) {
      for (int i = 0; i < nbars; ++i) {
        Bar b;
        b.volume = p.plans[d].volume[i];
        stream.push_back(b);
        labels.push_back(p.labels[d][i]);
      }
    }
    const auto vz = volume_zscore(stream, drift.volume_window);
    const auto pt = markov_transition_prob(labels, drift.transition_window, kActiveFlow, kBullishDrift);
    for (int d = 0; d < spec.n_days; ++d) {
      for (int i = 0; i < nbars; ++i) {
        const std::size_t k = static_cast<std::size_t>(d) * nbars + i;
        if (labels[k] != kActiveFlow) continue;
        if (!pt[k] || !(*pt[k] > drift.transition_threshold)) continue;
        if (!vz[k] || !(*vz[k] > drift.volume_z_threshold)) continue;
        plant(d, i);
      }
    }
  }
  out.days = realise(spec, instrument, p, true);
  return out;
}

RegimeCorpus gen_regime_days(const SynthSpec& spec, const Instrument& instrument) {
  if (!spec.regimes) throw std::invalid_argument("gen_regime_days: spec has no regimes");
  auto p = base_plans(spec);
  RegimeCorpus out;
  out.days = realise(spec, instrument, p, true);
  out.labels = std::move(p.labels);
  return out;
}

std::vector<EconEvent> synthetic_event_calendar(const std::vector<Date>& dates, std::uint64_t seed) {
  std::vector<EconEvent> out;
  Rng rng(derive_seed(seed, "calendar"));
  auto at = [](Date d, int h, int m) { return local_days{d} + hours{h} + minutes{m}; };
  for (std::size_t i = 0; i < dates.size(); ++i) {
    const Date d = dates[i];
    const unsigned dom = static_cast<unsigned>(d.day());
    if (i % 30 == 17) out.push_back({at(d, 14, 0), EventKind::FOMC, Impact::HIGH, "USD"});
    if (dom >= 10 && dom <= 14 && weekday{sys_days{d}} == Wednesday) {
      out.push_back({at(d, 8, 30), EventKind::CPI, Impact::HIGH, "USD"});
    }
    if (dom <= 7 && weekday{sys_days{d}} == Friday) {
      out.push_back({at(d, 8, 30), EventKind::NFP, Impact::HIGH, "USD"});
    }
    if (dom >= 24 && dom <= 30 && weekday{sys_days{d}} == Friday) {
      out.push_back({at(d, 10, 0), EventKind::PCE, Impact::HIGH, "USD"});
    }
    if (rng.uniform() < 0.2) out.push_back({at(d, 11, 0), EventKind::OTHER, Impact::MEDIUM, "USD"});
    if (rng.uniform() < 0.1) out.push_back({at(d, 10, 30), EventKind::CPI, Impact::HIGH, "EUR"});
  }
  std::stable_sort(out.begin(), out.end(), [](const EconEvent& a, const EconEvent& b) { return a.ts < b.ts; });
  return out;
}

}  // namespace falsify
