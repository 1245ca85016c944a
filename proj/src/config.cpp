#include "falsify/config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>
#include <sstream>

#include "falsify/error.hpp"
#include "falsify/hash.hpp"
#include "json.hpp"

namespace falsify {

namespace {

using nlohmann::ordered_json;

ExitSpec horizon(int h) { return ExitSpec{ExitKind::Horizon, h, {}, {}, {}}; }
ExitSpec stop_horizon(int h, double stop) { return ExitSpec{ExitKind::StopHorizon, h, stop, {}, {}}; }

std::vector<ExitSpec> horizons(std::initializer_list<int> hs) {
  std::vector<ExitSpec> out;
  for (int h : hs) out.push_back(horizon(h));
  return out;
}

std::vector<ParamPoint> one_key(const std::string& key, std::initializer_list<double> values) {
  std::vector<ParamPoint> out;
  for (double v : values) out.push_back({{key, v}});
  return out;
}

std::string clock_text(ClockTime t) { return fmt::format("{:02}:{:02}", t.count() / 60, t.count() % 60); }

ClockTime parse_clock(const std::string& text, const std::string& key) {
  int h = 0, m = 0;
  char colon = 0;
  std::istringstream in(text);
  if (!(in >> h >> colon >> m) || colon != ':' || h < 0 || h > 23 || m < 0 || m > 59) {
    throw ConfigError(fmt::format("{}: bad clock time '{}'", key, text));
  }
  return hhmm(h, m);
}

ordered_json exit_json(const ExitSpec& e) {
  ordered_json j;
  j["kind"] = std::string(to_string(e.kind));
  j["horizon"] = e.horizon;
  if (e.stop_points) j["stop_points"] = *e.stop_points;
  if (e.limit_offset_points) j["limit_offset_points"] = *e.limit_offset_points;
  if (e.clock) j["clock"] = clock_text(*e.clock);
  return j;
}

ordered_json gate_json(const GateConfig& g) {
  ordered_json j;
  j["t_min"] = g.t_min;
  j["n_min"] = g.n_min;
  j["p_max"] = g.p_max;
  j["permutation_applicable"] = g.permutation_applicable;
  j["year_min_trades"] = g.year_min_trades;
  return j;
}

// Typed accessor that reports the full key path.
template <typename T>
T get(const ordered_json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(fmt::format("missing key '{}{}'", path, key));
  try {
    return j.at(key).get<T>();
  } catch (const ordered_json::exception&) {
    throw ConfigError(fmt::format("key '{}{}' has the wrong type", path, key));
  }
}

template <typename T>
T get_or(const ordered_json& j, const std::string& key, const std::string& path, T fallback) {
  return j.contains(key) ? get<T>(j, key, path) : fallback;
}

GateConfig parse_gate(const ordered_json& j, const std::string& path, const GateConfig& base) {
  if (!j.is_object()) throw ConfigError(fmt::format("'{}' must be an object", path));
  GateConfig g = base;
  g.t_min = get_or<double>(j, "t_min", path, g.t_min);
  g.n_min = get_or<std::size_t>(j, "n_min", path, g.n_min);
  g.p_max = get_or<double>(j, "p_max", path, g.p_max);
  g.permutation_applicable = get_or<bool>(j, "permutation_applicable", path, g.permutation_applicable);
  g.year_min_trades = get_or<std::size_t>(j, "year_min_trades", path, g.year_min_trades);
  return g;
}

ExitSpec parse_exit(const ordered_json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(fmt::format("'{}' must be an object", path));
  ExitSpec e;
  const auto kind_text = get<std::string>(j, "kind", path);
  const auto kind = parse_exit_kind(kind_text);
  if (!kind) throw ConfigError(fmt::format("{}kind: unknown exit kind '{}'", path, kind_text));
  e.kind = *kind;
  e.horizon = get_or<int>(j, "horizon", path, 1);
  if (j.contains("stop_points")) e.stop_points = get<double>(j, "stop_points", path);
  if (j.contains("limit_offset_points")) e.limit_offset_points = get<double>(j, "limit_offset_points", path);
  if (j.contains("clock")) e.clock = parse_clock(get<std::string>(j, "clock", path), path + "clock");
  try {
    e.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(fmt::format("{}: {}", path, ex.what()));
  }
  return e;
}

}  // namespace

bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.instrument.symbol == b.instrument.symbol && a.instrument.tick_size == b.instrument.tick_size &&
         a.instrument.friction_points == b.instrument.friction_points && a.data == b.data &&
         a.families == b.families && a.gate == b.gate && a.years == b.years && a.seed == b.seed &&
         a.permutation_iterations == b.permutation_iterations && a.lazy_permutation == b.lazy_permutation &&
         a.output_dir == b.output_dir && a.ledger == b.ledger;
}

const FamilyConfig* RunConfig::family(Family f) const {
  for (const auto& fc : families) {
    if (fc.family == f) return &fc;
  }
  return nullptr;
}

GateConfig RunConfig::gate_for(Family f) const {
  const auto* fc = family(f);
  return fc && fc->gate ? *fc->gate : gate;
}

void RunConfig::validate() const {
  if (!(instrument.tick_size > 0.0)) throw ConfigError("instrument.tick_size must be > 0");
  if (instrument.friction_points < 0.0) throw ConfigError("instrument.friction_points must be >= 0");
  if (permutation_iterations < 1000) throw ConfigError("permutation_iterations must be >= 1000");
  std::set<Family> seen;
  for (const auto& fc : families) {
    if (!seen.insert(fc.family).second) {
      throw ConfigError(fmt::format("family {} declared twice", to_string(fc.family)));
    }
    if (fc.exits.empty()) throw ConfigError(fmt::format("families.{}.exits is empty", to_string(fc.family)));
  }
}

std::vector<FamilyConfig> default_family_grids() {
  const ExitSpec london_exit{ExitKind::Clock, kLondonHoldBars, {}, {}, hhmm(8, 30)};
  const ExitSpec close_exit{ExitKind::Clock, 1, {}, {}, hhmm(16, 0)};
  const ExitSpec confluence_limit{ExitKind::PullbackLimit, 13, {}, 25.0, {}};
  return {
      {Family::ORB_LONG, {}, horizons({1, 5, 15}), {}},
      {Family::ORB_SHORT, {}, horizons({1, 5, 15}), {}},
      {Family::ORB_PULLBACK, {{{"pullback_points", 5.0}, {"stop_points", 20.0}}}, {stop_horizon(5, 20.0), stop_horizon(15, 20.0)}, {}},
      {Family::ASIA_EXPANSION, one_key("multiple", {1.5, 2.0, 2.5}), horizons({1, 6}), {}},
      {Family::LIQUIDITY_GRAB_FADE, one_key("lookback", {0, 12}), horizons({1, 3, 6}), {}},
      {Family::LIQUIDITY_GRAB_CONT, one_key("lookback", {0, 12}), horizons({1, 3, 6}), {}},
      {Family::GAP_FILL_FADE,
       {{{"entry_hhmm", 930}, {"min_gap_points", 5.0}},
        {{"entry_hhmm", 945}, {"min_gap_points", 5.0}},
        {{"entry_hhmm", 1000}, {"min_gap_points", 5.0}}},
       horizons({6, 12}),
       {}},
      {Family::GAP_CONT_SHORT, {{{"kalman_threshold", 2.5}, {"min_gap_points", 0.0}}}, horizons({1, 6, 12}), {}},
      {Family::VOL_SPIKE, {{{"window", 20}, {"tail", 0.1}}}, horizons({1, 3}), {}},
      {Family::VOL_DRYUP, {{{"window", 20}, {"tail", 0.1}}}, horizons({1, 3}), {}},
      {Family::VVG_REVERSAL, {}, horizons({6, 12}), {}},
      {Family::VVG_CONTINUATION, {}, horizons({6, 12}), {}},
      {Family::VVG_CLOSE_FADE, {}, {close_exit}, {}},
      {Family::EVENT_DRIFT, one_key("offset", {6}), horizons({6, 12}), {}},
      {Family::OU_REVERSION, {{{"threshold", 1.5}, {"max_half_life", 78}}, {{"threshold", 2.0}, {"max_half_life", 78}}, {{"threshold", 2.5}, {"max_half_life", 78}}}, horizons({5, 10}), {}},
      {Family::CONFLUENCE_RTH,
       {{{"transition_threshold", 0.15}, {"volume_z", 0.5}, {"pullback_points", 25.0}}},
       {confluence_limit, horizon(13)},
       {}},
      {Family::LONDON_B, {}, {london_exit}, {}},
  };
}

RunConfig default_config() {
  RunConfig c;
  c.families = default_family_grids();
  return c;
}

RunConfig parse_config(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::exception& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;

  const auto inst = j.contains("instrument") ? j.at("instrument") : ordered_json::object();
  c.instrument.symbol = get_or<std::string>(inst, "symbol", "instrument.", c.instrument.symbol);
  c.instrument.tick_size = get_or<double>(inst, "tick_size", "instrument.", c.instrument.tick_size);
  c.instrument.friction_points = get_or<double>(inst, "friction_points", "instrument.", c.instrument.friction_points);

  if (j.contains("data")) {
    const auto& d = j.at("data");
    c.data.rth = get_or<std::string>(d, "rth", "data.", "");
    c.data.asia = get_or<std::string>(d, "asia", "data.", "");
    c.data.london = get_or<std::string>(d, "london", "data.", "");
    c.data.events = get_or<std::string>(d, "events", "data.", "");
  }
  if (j.contains("gate")) c.gate = parse_gate(j.at("gate"), "gate.", c.gate);

  if (!j.contains("families")) throw ConfigError("missing key 'families'");
  const auto& fams = j.at("families");
  if (!fams.is_object()) throw ConfigError("'families' must be an object keyed by family name");
  for (const auto& [name, fj] : fams.items()) {
    const auto f = parse_family(name);
    if (!f) throw ConfigError(fmt::format("families: unknown family '{}'", name));
    const std::string path = "families." + name + ".";
    FamilyConfig fc;
    fc.family = *f;
    if (fj.contains("params")) {
      for (const auto& pj : fj.at("params")) {
        if (!pj.is_object()) throw ConfigError(path + "params entries must be objects");
        ParamPoint p;
        for (const auto& [k, v] : pj.items()) {
          if (!v.is_number()) throw ConfigError(fmt::format("{}params.{} must be a number", path, k));
          p.emplace_back(k, v.get<double>());
        }
        fc.params.push_back(std::move(p));
      }
    }
    if (!fj.contains("exits")) throw ConfigError(fmt::format("missing key '{}exits'", path));
    std::size_t i = 0;
    for (const auto& ej : fj.at("exits")) fc.exits.push_back(parse_exit(ej, fmt::format("{}exits[{}].", path, i++)));
    if (fj.contains("gate")) fc.gate = parse_gate(fj.at("gate"), path + "gate.", c.gate);
    c.families.push_back(std::move(fc));
  }

  if (j.contains("walk_forward") && j.at("walk_forward").contains("years")) {
    c.years = get<std::vector<int>>(j.at("walk_forward"), "years", "walk_forward.");
  }
  c.seed = get_or<std::uint64_t>(j, "seed", "", c.seed);
  c.permutation_iterations = get_or<std::size_t>(j, "permutation_iterations", "", c.permutation_iterations);
  c.lazy_permutation = get_or<bool>(j, "lazy_permutation", "", c.lazy_permutation);
  c.output_dir = get_or<std::string>(j, "output_dir", "", "");
  c.ledger = get_or<std::string>(j, "ledger", "", "");
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  ordered_json j;
  j["instrument"] = {{"symbol", c.instrument.symbol},
                     {"tick_size", c.instrument.tick_size},
                     {"friction_points", c.instrument.friction_points}};
  j["data"] = {{"rth", c.data.rth}, {"asia", c.data.asia}, {"london", c.data.london}, {"events", c.data.events}};
  j["gate"] = gate_json(c.gate);
  ordered_json fams = ordered_json::object();
  for (const auto& fc : c.families) {
    ordered_json fj;
    ordered_json params = ordered_json::array();
    for (const auto& p : fc.params) {
      ordered_json pj = ordered_json::object();
      for (const auto& [k, v] : p) pj[k] = v;
      params.push_back(pj);
    }
    fj["params"] = params;
    ordered_json exits = ordered_json::array();
    for (const auto& e : fc.exits) exits.push_back(exit_json(e));
    fj["exits"] = exits;
    if (fc.gate) fj["gate"] = gate_json(*fc.gate);
    fams[std::string(to_string(fc.family))] = fj;
  }
  j["families"] = fams;
  if (c.years) j["walk_forward"] = {{"years", *c.years}};
  j["seed"] = c.seed;
  j["permutation_iterations"] = c.permutation_iterations;
  j["lazy_permutation"] = c.lazy_permutation;
  j["output_dir"] = c.output_dir;
  j["ledger"] = c.ledger;
  return j.dump(2) + "\n";
}

SynthFile parse_synth_spec(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::exception& e) {
    throw ConfigError(fmt::format("synth spec is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ConfigError("synth spec must be a JSON object");
  SynthFile f;
  SynthSpec& s = f.spec;
  s.n_days = get<int>(j, "n_days", "");
  const auto session = parse_session(get_or<std::string>(j, "session", "", "RTH"));
  if (!session) throw ConfigError("session: unknown session");
  s.session = SessionSpec::of(*session);
  s.vol_per_bar = get_or<double>(j, "vol_per_bar", "", s.vol_per_bar);
  s.seed = get_or<std::uint64_t>(j, "seed", "", s.seed);
  s.start_year = get_or<int>(j, "start_year", "", s.start_year);
  s.days_per_year = get_or<int>(j, "days_per_year", "", s.days_per_year);
  s.start_price = get_or<double>(j, "start_price", "", s.start_price);
  s.gap_vol = get_or<double>(j, "gap_vol", "", s.gap_vol);
  s.base_volume = get_or<double>(j, "base_volume", "", s.base_volume);
  s.volume_sigma = get_or<double>(j, "volume_sigma", "", s.volume_sigma);
  s.substeps = get_or<int>(j, "substeps", "", s.substeps);
  f.all_sessions = get_or<bool>(j, "all_sessions", "", f.all_sessions);
  if (j.contains("regimes")) {
    const auto& r = j.at("regimes");
    if (r.is_string()) {
      if (r.get<std::string>() != "reference") throw ConfigError("regimes: only \"reference\" is a named spec");
      s.regimes = reference_regimes();
    } else {
      RegimeSpec rs;
      rs.transition = get<std::vector<std::vector<double>>>(r, "transition", "regimes.");
      rs.mean = get<std::vector<double>>(r, "mean", "regimes.");
      rs.vol_mult = get<std::vector<double>>(r, "vol_mult", "regimes.");
      rs.volume_mult = get<std::vector<double>>(r, "volume_mult", "regimes.");
      rs.initial = get_or<int>(r, "initial", "regimes.", 0);
      s.regimes = rs;
    }
  }
  if (j.contains("drift")) {
    const auto& d = j.at("drift");
    const std::string path = "drift.";
    DriftSpec ds;
    ds.magnitude = get_or<double>(d, "magnitude", path, ds.magnitude);
    ds.horizon = get_or<int>(d, "horizon", path, ds.horizon);
    ds.events_per_day = get_or<int>(d, "events_per_day", path, ds.events_per_day);
    const auto placement = get_or<std::string>(d, "placement", path, "RANDOM");
    if (placement == "RANDOM") {
      ds.placement = Placement::Random;
    } else if (placement == "CONFLUENCE") {
      ds.placement = Placement::Confluence;
    } else {
      throw ConfigError("drift.placement: expected RANDOM or CONFLUENCE");
    }
    const auto dir = get_or<std::string>(d, "direction", path, "LONG");
    if (dir != "LONG" && dir != "SHORT") throw ConfigError("drift.direction: expected LONG or SHORT");
    ds.direction = dir == "LONG" ? Direction::Long : Direction::Short;
    ds.min_bar = get_or<int>(d, "min_bar", path, ds.min_bar);
    ds.volume_boost = get_or<double>(d, "volume_boost", path, ds.volume_boost);
    ds.transition_threshold = get_or<double>(d, "transition_threshold", path, ds.transition_threshold);
    ds.volume_z_threshold = get_or<double>(d, "volume_z_threshold", path, ds.volume_z_threshold);
    ds.transition_window = get_or<int>(d, "transition_window", path, ds.transition_window);
    ds.volume_window = get_or<int>(d, "volume_window", path, ds.volume_window);
    s.drift = ds;
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return f;
}

std::string dump_synth_spec(const SynthFile& f) {
  const SynthSpec& s = f.spec;
  ordered_json j;
  j["n_days"] = s.n_days;
  j["session"] = std::string(to_string(s.session.name));
  j["vol_per_bar"] = s.vol_per_bar;
  j["seed"] = s.seed;
  j["start_year"] = s.start_year;
  j["days_per_year"] = s.days_per_year;
  j["start_price"] = s.start_price;
  j["gap_vol"] = s.gap_vol;
  j["base_volume"] = s.base_volume;
  j["volume_sigma"] = s.volume_sigma;
  j["substeps"] = s.substeps;
  j["all_sessions"] = f.all_sessions;
  if (s.regimes) {
    j["regimes"] = {{"transition", s.regimes->transition},
                    {"mean", s.regimes->mean},
                    {"vol_mult", s.regimes->vol_mult},
                    {"volume_mult", s.regimes->volume_mult},
                    {"initial", s.regimes->initial}};
  }
  if (s.drift) {
    const auto& d = *s.drift;
    j["drift"] = {{"magnitude", d.magnitude},
                  {"horizon", d.horizon},
                  {"events_per_day", d.events_per_day},
                  {"placement", d.placement == Placement::Random ? "RANDOM" : "CONFLUENCE"},
                  {"direction", d.direction == Direction::Long ? "LONG" : "SHORT"},
                  {"min_bar", d.min_bar},
                  {"volume_boost", d.volume_boost},
                  {"transition_threshold", d.transition_threshold},
                  {"volume_z_threshold", d.volume_z_threshold},
                  {"transition_window", d.transition_window},
                  {"volume_window", d.volume_window}};
  }
  return j.dump();
}

std::string config_hash(const RunConfig& c) { return sha256_hex(dump_config(c)).substr(0, 16); }

}  // namespace falsify
