#include "falsify/pipeline.hpp"

#include <fmt/format.h>

#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>

#include "falsify/error.hpp"
#include "falsify/features.hpp"
#include "falsify/gmm.hpp"
#include "falsify/rng.hpp"
#include "json.hpp"

namespace falsify {

namespace {

namespace fs = std::filesystem;

constexpr int kRegimeVolumeWindow = 50;
constexpr int kTransitionWindow = 200;
constexpr int kAtrWindow = 14;
constexpr int kRegimeCount = 3;

std::int64_t day_key(Date d) { return std::chrono::sys_days{d}.time_since_epoch().count(); }

int min_horizon(const ExitSpec& e) { return e.kind == ExitKind::Clock ? 1 : e.horizon; }

using DayGenerator = std::function<std::vector<SignalEvent>(std::size_t, const TradingDay&)>;

std::vector<TradeRecord> simulate_target(std::span<const TradingDay> target, const ExitSpec& exit,
                                         const RunConfig& cfg, const DayGenerator& gen) {
  std::vector<TradeRecord> out;
  const auto friction = cfg.friction();
  for (std::size_t i = 0; i < target.size(); ++i) {
    const auto events = gen(i, target[i]);
    if (events.empty()) continue;
    auto res = simulate(events, target[i], exit, friction, cfg.instrument);
    out.insert(out.end(), res.trades.begin(), res.trades.end());
  }
  return out;
}

std::vector<SignalEvent> only(std::vector<SignalEvent> events, Family f) {
  std::erase_if(events, [f](const SignalEvent& e) { return e.family != f; });
  return events;
}

std::vector<Bar> flatten(std::span<const TradingDay> days) {
  std::vector<Bar> out;
  for (const auto& d : days) out.insert(out.end(), d.bars.begin(), d.bars.end());
  return out;
}

std::size_t bars_before_target(std::span<const TradingDay> history, std::span<const TradingDay> target) {
  if (target.size() > history.size()) throw std::logic_error("target is not a suffix of history");
  std::size_t n = 0;
  for (std::size_t i = 0; i + target.size() < history.size(); ++i) n += history[i].bars.size();
  return n;
}

// Stateless: events depend only on the target day.
FitFn stateless(const RunConfig& cfg, std::function<std::vector<SignalEvent>(const GridPoint&, const TradingDay&)> gen) {
  return [&cfg, gen](std::span<const TradingDay>) -> Evaluator {
    return [&cfg, gen](const GridPoint& gp, std::span<const TradingDay>, std::span<const TradingDay> target) {
      return simulate_target(target, gp.exit, cfg, [&](std::size_t, const TradingDay& d) { return gen(gp, d); });
    };
  };
}

// Stream-level regime inputs for one history, computed once and shared by
// every grid point evaluated on it.
struct StreamFeatures {
  std::vector<int> labels;
  OptionalSeries to_bullish;
  OptionalSeries volume_z;
  OptionalSeries atr;
};

class StreamCache {
 public:
  std::shared_ptr<const StreamFeatures> get(std::span<const TradingDay> history,
                                            const std::function<StreamFeatures()>& compute) {
    const Key key{history.size(), day_key(history.front().date), day_key(history.back().date)};
    std::lock_guard lock(mutex_);
    for (const auto& [k, v] : entries_) {
      if (k == key) return v;
    }
    auto v = std::make_shared<const StreamFeatures>(compute());
    entries_.emplace_back(key, v);
    return v;
  }

 private:
  using Key = std::tuple<std::size_t, std::int64_t, std::int64_t>;
  std::mutex mutex_;
  std::vector<std::pair<Key, std::shared_ptr<const StreamFeatures>>> entries_;
};

std::shared_ptr<const RegimeModel> fit_regimes(std::span<const Bar> bars, const RunConfig& cfg, Family f, int year) {
  const auto feats = regime_features(bars, kRegimeVolumeWindow, cfg.instrument.tick_size);
  std::vector<FeatureVec> defined;
  defined.reserve(feats.size());
  for (const auto& x : feats) {
    if (x) defined.push_back(*x);
  }
  const auto seed = derive_seed(cfg.seed, fmt::format("gmm/{}", to_string(f)), static_cast<std::uint64_t>(year));
  return std::make_shared<const RegimeModel>(gmm_fit(defined, kRegimeCount, seed));
}

StreamFeatures stream_features(std::span<const Bar> bars, const RegimeModel& model, const RunConfig& cfg,
                               bool with_confluence_inputs) {
  StreamFeatures sf;
  sf.labels = regime_labels(model, regime_features(bars, kRegimeVolumeWindow, cfg.instrument.tick_size));
  if (with_confluence_inputs) {
    sf.to_bullish = markov_transition_prob(sf.labels, kTransitionWindow, kActiveFlow, kBullishDrift);
    sf.volume_z = volume_zscore(bars, kRegimeVolumeWindow);
    sf.atr = rolling_stat(bars, {kAtrWindow, RollingStatistic::Atr}, cfg.instrument.tick_size);
  }
  return sf;
}

FitFn confluence_fit(const RunConfig& cfg) {
  return [&cfg](std::span<const TradingDay> train) -> Evaluator {
    const auto bars = flatten(train);
    const auto model = fit_regimes(bars, cfg, Family::CONFLUENCE_RTH, train.back().year());
    std::vector<double> atr_values;
    for (const auto& a : rolling_stat(bars, {kAtrWindow, RollingStatistic::Atr}, cfg.instrument.tick_size)) {
      if (a) atr_values.push_back(*a);
    }
    const double baseline = atr_values.empty() ? 0.0 : quantile(atr_values, 0.5);
    auto cache = std::make_shared<StreamCache>();
    return [&cfg, model, baseline, cache](const GridPoint& gp, std::span<const TradingDay> history,
                                          std::span<const TradingDay> target) {
      const auto sf = cache->get(history, [&] { return stream_features(flatten(history), *model, cfg, true); });
      ConfluenceParams params;
      params.transition_threshold = param_or(gp.params, "transition_threshold", params.transition_threshold);
      params.volume_z_threshold = param_or(gp.params, "volume_z", params.volume_z_threshold);
      params.pullback_points = param_or(gp.params, "pullback_points", params.pullback_points);
      params.exit_bar = gp.exit.horizon;
      std::vector<std::size_t> offsets(target.size());
      std::size_t pos = bars_before_target(history, target);
      for (std::size_t i = 0; i < target.size(); ++i) {
        offsets[i] = pos;
        pos += target[i].bars.size();
      }
      return simulate_target(target, gp.exit, cfg, [&](std::size_t i, const TradingDay& d) {
        const std::size_t o = offsets[i];
        const std::size_t n = d.bars.size();
        ConfluenceInputs in{std::span(sf->labels).subspan(o, n), std::span(sf->to_bullish).subspan(o, n),
                            std::span(sf->volume_z).subspan(o, n), std::span(sf->atr).subspan(o, n), baseline};
        return confluence_rth_signals(d, in, params, cfg.instrument, min_horizon(gp.exit));
      });
    };
  };
}

FitFn london_fit(const RunConfig& cfg) {
  return [&cfg](std::span<const TradingDay> train) -> Evaluator {
    const auto model = fit_regimes(flatten(train), cfg, Family::LONDON_B, train.back().year());
    auto cache = std::make_shared<StreamCache>();
    return [&cfg, model, cache](const GridPoint& gp, std::span<const TradingDay> history,
                                std::span<const TradingDay> target) {
      const auto sf = cache->get(history, [&] { return stream_features(flatten(history), *model, cfg, false); });
      std::size_t pos = bars_before_target(history, target);
      std::vector<std::size_t> offsets(target.size());
      for (std::size_t i = 0; i < target.size(); ++i) {
        offsets[i] = pos;
        pos += target[i].bars.size();
      }
      return simulate_target(target, gp.exit, cfg, [&](std::size_t i, const TradingDay& d) {
        return london_b_signals(d, std::span(sf->labels).subspan(offsets[i], d.bars.size()), min_horizon(gp.exit));
      });
    };
  };
}

// Kalman velocity known at each RTH open: the preceding ASIA session's
// closes when present, otherwise the prior RTH day's closes and today's open.
std::shared_ptr<const std::map<std::int64_t, double>> gap_velocities(const DataSet& data, const Instrument& instrument) {
  auto out = std::make_shared<std::map<std::int64_t, double>>();
  std::map<std::int64_t, const TradingDay*> asia;
  for (const auto& d : data.asia) asia[day_key(d.date)] = &d;
  for (std::size_t k = 0; k < data.rth.size(); ++k) {
    const auto& day = data.rth[k];
    const std::int64_t key = day_key(day.date);
    const std::int64_t prev_key = k > 0 ? day_key(data.rth[k - 1].date) : key - 7;
    std::vector<double> closes;
    auto it = asia.lower_bound(key);
    if (it != asia.begin()) {
      --it;
      if (it->first >= prev_key) closes = closes_in_points(it->second->bars, instrument);
    }
    if (closes.empty() && k > 0) {
      closes = closes_in_points(data.rth[k - 1].bars, instrument);
      closes.push_back(instrument.to_points(day.bars.front().open));
    }
    if (closes.empty()) continue;
    (*out)[key] = kalman_velocity(closes, KalmanParams{}).velocity.back();
  }
  return out;
}

FitFn gap_fit(const DataSet& data, const RunConfig& cfg, GapVariant variant) {
  const auto velocities = gap_velocities(data, cfg.instrument);
  return stateless(cfg, [&cfg, velocities, variant](const GridPoint& gp, const TradingDay& d) {
    const auto v = velocities->find(day_key(d.date));
    if (v == velocities->end()) return std::vector<SignalEvent>{};
    GapParams params;
    const int hm = static_cast<int>(param_or(gp.params, "entry_hhmm", 930));
    params.entry_time = hhmm(hm / 100, hm % 100);
    params.kalman_threshold = param_or(gp.params, "kalman_threshold", params.kalman_threshold);
    params.min_gap_points = param_or(gp.params, "min_gap_points", params.min_gap_points);
    return gap_signals(d, day_primitives(d), variant, params, v->second, cfg.instrument, min_horizon(gp.exit));
  });
}

FitFn volume_fit(const RunConfig& cfg, Family family) {
  const auto kind = family == Family::VOL_SPIKE ? VolumeKind::Spike : VolumeKind::DryUp;
  return [&cfg, kind, family](std::span<const TradingDay> train) -> Evaluator {
    auto cuts = std::make_shared<std::vector<std::pair<ParamPoint, VolumeCutoffs>>>();
    const auto* fc = cfg.family(family);
    std::vector<ParamPoint> points = fc && !fc->params.empty() ? fc->params : std::vector<ParamPoint>{{}};
    for (const auto& p : points) {
      const int window = static_cast<int>(param_or(p, "window", 20));
      cuts->emplace_back(p, volume_cutoffs(train, window, param_or(p, "tail", 0.1)));
    }
    return [&cfg, kind, cuts](const GridPoint& gp, std::span<const TradingDay>, std::span<const TradingDay> target) {
      const VolumeCutoffs* c = nullptr;
      for (const auto& [p, v] : *cuts) {
        if (p == gp.params) c = &v;
      }
      if (!c) throw std::logic_error("volume cutoffs missing for grid point");
      const int window = static_cast<int>(param_or(gp.params, "window", 20));
      return simulate_target(target, gp.exit, cfg, [&](std::size_t, const TradingDay& d) {
        return volume_signature_signals(d, kind, *c, window, min_horizon(gp.exit));
      });
    };
  };
}

FitFn vvg_fit(const DataSet& data, const RunConfig& cfg, VvgMode mode) {
  auto metrics = std::make_shared<std::map<std::int64_t, VvgMetrics>>();
  for (const auto& m : vvg_metrics(data.rth, cfg.instrument)) (*metrics)[day_key(m.date)] = m;
  return [&cfg, metrics, mode](std::span<const TradingDay> train) -> Evaluator {
    std::vector<VvgMetrics> training;
    for (const auto& d : train) {
      const auto it = metrics->find(day_key(d.date));
      if (it != metrics->end()) training.push_back(it->second);
    }
    const auto terciles = vvg_terciles(training);
    return [&cfg, metrics, mode, terciles](const GridPoint& gp, std::span<const TradingDay>,
                                           std::span<const TradingDay> target) {
      return simulate_target(target, gp.exit, cfg, [&](std::size_t, const TradingDay& d) {
        const auto it = metrics->find(day_key(d.date));
        if (it == metrics->end()) return std::vector<SignalEvent>{};
        const VvgMetrics one[] = {it->second};
        const bool flagged = vvg_flags(one, terciles).front();
        return vvg_strategy_signals(d, day_primitives(d), flagged, mode, VvgParams{}, min_horizon(gp.exit));
      });
    };
  };
}

FitFn event_fit(const DataSet& data, const RunConfig& cfg) {
  auto by_day = std::make_shared<std::map<std::int64_t, std::vector<EconEvent>>>();
  const auto rth = SessionSpec::rth();
  for (const auto& e : data.events) (*by_day)[day_key(rth.session_date(e.ts))].push_back(e);
  return stateless(cfg, [&cfg, by_day](const GridPoint& gp, const TradingDay& d) {
    const auto it = by_day->find(day_key(d.date));
    if (it == by_day->end()) return std::vector<SignalEvent>{};
    const int offset = static_cast<int>(param_or(gp.params, "offset", kMinEventOffset));
    return event_drift_signals(d, it->second, offset, cfg.instrument, min_horizon(gp.exit));
  });
}

FitFn ou_fit_fn(const RunConfig& cfg) {
  return [&cfg](std::span<const TradingDay> train) -> Evaluator {
    std::vector<double> closes;
    for (const auto& d : train) {
      const auto c = closes_in_points(d.bars, cfg.instrument);
      closes.insert(closes.end(), c.begin(), c.end());
    }
    const auto fit = std::make_shared<const OuFit>(ou_fit(closes));
    return [&cfg, fit](const GridPoint& gp, std::span<const TradingDay>, std::span<const TradingDay> target) {
      const double max_hl = param_or(gp.params, "max_half_life", 78);
      if (!fit->valid() || *fit->half_life > max_hl) return std::vector<TradeRecord>{};
      const double threshold = param_or(gp.params, "threshold", 2.0);
      return simulate_target(target, gp.exit, cfg, [&](std::size_t, const TradingDay& d) {
        return ou_reversion_signals(d, *fit, threshold, cfg.instrument, 0.5, min_horizon(gp.exit)).events;
      });
    };
  };
}

const std::vector<TradingDay>& session_days(const DataSet& data, Family f) {
  switch (family_session(f)) {
    case Session::ASIA: return data.asia;
    case Session::LONDON: return data.london;
    default: return data.rth;
  }
}

std::string fold_line(const FoldResult& f) {
  const auto& ty = f.fold.train_years;
  const std::string train = ty.size() == 1 ? fmt::format("{}", ty.front()) : fmt::format("{}-{}", ty.front(), ty.back());
  return fmt::format("train {} -> test {}: {} | {} | train T {} (n {}) | test n {}", train, f.fold.test_year,
                     format_params(f.chosen.params), f.chosen.exit.label(), format_t(f.train_t), f.train_n,
                     f.test_trades.size());
}

std::string chosen_params(const WalkForwardResult& wf) {
  std::vector<std::string> seen;
  for (const auto& f : wf.folds) {
    const auto s = format_params(f.chosen.params) + " / " + f.chosen.exit.label();
    if (std::find(seen.begin(), seen.end(), s) == seen.end()) seen.push_back(s);
  }
  std::string out;
  for (const auto& s : seen) out += (out.empty() ? "" : "; ") + s;
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Session family_session(Family f) {
  if (f == Family::ASIA_EXPANSION) return Session::ASIA;
  if (f == Family::LONDON_B) return Session::LONDON;
  return Session::RTH;
}

DataSet load_dataset(const DataPaths& paths, const Instrument& instrument, const fs::path& base) {
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() || base.empty() ? fs::path(p) : base / p; };
  DataSet d;
  auto load = [&](const std::string& p, const SessionSpec& s) {
    if (p.empty()) return std::vector<TradingDay>{};
    return complete_days(parse_bar_file(resolve(p).string(), s, instrument).days);
  };
  d.rth = load(paths.rth, SessionSpec::rth());
  d.asia = load(paths.asia, SessionSpec::asia());
  d.london = load(paths.london, SessionSpec::london());
  if (!paths.events.empty()) d.events = parse_event_calendar_file(resolve(paths.events).string(), true);
  return d;
}

SynthDataSet synth_dataset(const SynthSpec& spec, const Instrument& instrument, bool all_sessions) {
  SynthDataSet out;
  if (spec.drift) {
    auto c = gen_edge_days(spec, instrument);
    out.data.rth = std::move(c.days);
    out.planted = std::move(c.planted);
  } else if (spec.regimes) {
    auto c = gen_regime_days(spec, instrument);
    out.data.rth = std::move(c.days);
    out.rth_labels = std::move(c.labels);
  } else {
    out.data.rth = gen_null_days(spec, instrument);
  }
  if (!all_sessions) return out;

  SynthSpec asia = spec;
  asia.session = SessionSpec::asia();
  asia.seed = derive_seed(spec.seed, "asia");
  asia.vol_per_bar = 0.5 * spec.vol_per_bar;
  asia.drift.reset();
  asia.regimes.reset();
  out.data.asia = gen_null_days(asia, instrument);

  SynthSpec london = asia;
  london.session = SessionSpec::london();
  london.seed = derive_seed(spec.seed, "london");
  london.vol_per_bar = spec.vol_per_bar * std::sqrt(3.0);
  out.data.london = gen_null_days(london, instrument);

  std::vector<Date> dates;
  for (const auto& d : out.data.rth) dates.push_back(d.date);
  out.data.events = synthetic_event_calendar(dates, spec.seed);
  std::erase_if(out.data.events, [](const EconEvent& e) {
    return e.impact != Impact::HIGH || e.currency != "USD" || e.kind == EventKind::OTHER ||
           !SessionSpec::rth().contains(clock_of(e.ts));
  });
  return out;
}

FitFn family_fit(Family family, const DataSet& data, const RunConfig& cfg) {
  const Instrument& inst = cfg.instrument;
  switch (family) {
    case Family::ORB_LONG:
    case Family::ORB_SHORT:
    case Family::ORB_PULLBACK:
      return stateless(cfg, [&inst, family](const GridPoint& gp, const TradingDay& d) {
        OrbParams p;
        p.pullback_points = param_or(gp.params, "pullback_points", p.pullback_points);
        p.stop_points = param_or(gp.params, "stop_points", p.stop_points);
        const auto variant = family == Family::ORB_PULLBACK ? OrbVariant::Pullback : OrbVariant::Immediate;
        return only(orb_signals(d, day_primitives(d), variant, p, inst, min_horizon(gp.exit)), family);
      });
    case Family::ASIA_EXPANSION:
      return stateless(cfg, [](const GridPoint& gp, const TradingDay& d) {
        return asia_expansion_signals(d, param_or(gp.params, "multiple", 2.0), 20, min_horizon(gp.exit));
      });
    case Family::LIQUIDITY_GRAB_FADE:
    case Family::LIQUIDITY_GRAB_CONT:
      return stateless(cfg, [&inst, family](const GridPoint& gp, const TradingDay& d) {
        GrabParams p;
        const int lb = static_cast<int>(param_or(gp.params, "lookback", 0));
        if (lb > 0) p.lookback = lb;
        const auto mode = family == Family::LIQUIDITY_GRAB_FADE ? GrabMode::Fade : GrabMode::Continuation;
        return liquidity_grab_signals(d, mode, p, inst, min_horizon(gp.exit));
      });
    case Family::GAP_FILL_FADE: return gap_fit(data, cfg, GapVariant::FillFade);
    case Family::GAP_CONT_SHORT: return gap_fit(data, cfg, GapVariant::ContinuationShort);
    case Family::VOL_SPIKE:
    case Family::VOL_DRYUP: return volume_fit(cfg, family);
    case Family::VVG_REVERSAL: return vvg_fit(data, cfg, VvgMode::Reversal);
    case Family::VVG_CONTINUATION: return vvg_fit(data, cfg, VvgMode::Continuation);
    case Family::VVG_CLOSE_FADE: return vvg_fit(data, cfg, VvgMode::CloseFade);
    case Family::EVENT_DRIFT: return event_fit(data, cfg);
    case Family::OU_REVERSION: return ou_fit_fn(cfg);
    case Family::CONFLUENCE_RTH: return confluence_fit(cfg);
    case Family::LONDON_B: return london_fit(cfg);
  }
  throw std::logic_error("unhandled family");
}

FamilyOutcome run_family(const DataSet& data, const RunConfig& cfg, Family family, const RunOptions& options) {
  const auto* fc = cfg.family(family);
  if (!fc) throw ConfigError(fmt::format("family {} has no declared grid", to_string(family)));
  const auto& days = session_days(data, family);
  if (days.empty()) {
    throw DataError(fmt::format("family {} needs {} data and none was loaded", to_string(family),
                                to_string(family_session(family))));
  }
  FamilyOutcome out;
  out.family = family;
  WalkForwardOptions wopts;
  wopts.years = cfg.years;
  wopts.parallel = options.parallel;
  out.walk_forward = walk_forward(days, family_fit(family, data, cfg), fc->params, fc->exits, cfg.instrument, wopts);
  const auto& wf = out.walk_forward;

  GateConfig gate = cfg.gate_for(family);
  std::optional<double> p;
  const bool want_p = gate.permutation_applicable && !wf.oos_trades.empty();
  bool compute_p = want_p;
  if (want_p && cfg.lazy_permutation) {
    GateConfig others = gate;
    others.permutation_applicable = false;
    compute_p = validate(summary_metrics(wf.oos_trades, cfg.instrument), others).overall;
  }
  if (compute_p) {
    std::vector<PermutationSegment> segments;
    for (const auto& f : wf.folds) {
      if (!f.test_trades.empty()) segments.push_back({f.test_trades, f.test_days, f.chosen.exit});
    }
    PermutationOptions po;
    po.iterations = cfg.permutation_iterations;
    po.seed = derive_seed(cfg.seed, fmt::format("permutation/{}", to_string(family)));
    p = options.parallel ? permutation_test(segments, cfg.friction(), cfg.instrument, po)
                         : permutation_test_serial(segments, cfg.friction(), cfg.instrument, po);
  }
  out.report = make_report(std::string(to_string(family)), std::string(to_string(family)), chosen_params(wf),
                           wf.oos_trades, cfg.instrument, gate, p, config_hash(cfg), cfg.seed);
  for (const auto& f : wf.folds) out.report.fold_lines.push_back(fold_line(f));
  return out;
}

std::vector<FamilyOutcome> run_families(const DataSet& data, const RunConfig& cfg, std::span<const Family> families,
                                        const RunOptions& options) {
  for (Family f : families) {
    if (!cfg.family(f)) throw ConfigError(fmt::format("family {} has no declared grid", to_string(f)));
    if (session_days(data, f).empty()) {
      throw DataError(fmt::format("family {} needs {} data and none was loaded", to_string(f),
                                  to_string(family_session(f))));
    }
  }
  std::vector<FamilyOutcome> out;
  for (Family f : families) out.push_back(run_family(data, cfg, f, options));
  return out;
}

void write_run_directory(const fs::path& dir, const RunConfig& cfg, std::span<const FamilyOutcome> outcomes) {
  fs::create_directories(dir / "reports");
  fs::create_directories(dir / "trades");
  write_file(dir / "config.json", dump_config(cfg));
  std::vector<RunReport> reports;
  for (const auto& o : outcomes) {
    const std::string name(to_string(o.family));
    write_file(dir / "reports" / (name + ".md"), render_report(o.report, ReportFormat::Markdown));
    write_file(dir / "reports" / (name + ".json"), render_report(o.report, ReportFormat::Structured));
    std::ostringstream trades;
    write_trade_log(trades, o.walk_forward.oos_trades, cfg.instrument);
    write_file(dir / "trades" / (name + ".csv"), trades.str());
    reports.push_back(o.report);
  }
  write_file(dir / "summary.md", fmt::format("# Summary\n\nconfig: {}  seed: {}\n\n", config_hash(cfg), cfg.seed) +
                                     render_summary(reports, ReportFormat::Markdown));
  write_file(dir / "summary.json", render_summary(reports, ReportFormat::Structured));
}

std::string regenerate_report(const fs::path& run_dir, Family family, const RunConfig& cfg) {
  const std::string name(to_string(family));
  std::istringstream trades_in(read_file(run_dir / "trades" / (name + ".csv")));
  const auto trades = parse_trade_log(trades_in, cfg.instrument);
  const auto meta = nlohmann::json::parse(read_file(run_dir / "reports" / (name + ".json")));
  std::optional<double> p;
  if (!meta.at("permutation_p").is_null()) p = meta.at("permutation_p").get<double>();
  auto report = make_report(meta.at("family").get<std::string>(), meta.at("variant").get<std::string>(),
                            meta.at("params").get<std::string>(), trades, cfg.instrument, cfg.gate_for(family), p,
                            meta.at("config_hash").get<std::string>(), meta.at("seed").get<std::uint64_t>());
  report.fold_lines = meta.at("folds").get<std::vector<std::string>>();
  return render_report(report, ReportFormat::Markdown);
}

}  // namespace falsify
