// falsify: ingest | synth | run | ledger | report

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "falsify/config.hpp"
#include "falsify/error.hpp"
#include "falsify/ledger.hpp"
#include "falsify/pipeline.hpp"

namespace fs = std::filesystem;
using namespace falsify;

namespace {

constexpr int kOk = 0;
constexpr int kDataError = 1;
constexpr int kConfigError = 2;

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

fs::path output_base(const std::string& flag, const RunConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("FALSIFY_OUT"); env && *env) return env;
  return "out";
}

int cmd_ingest(const std::string& file, const std::string& session_name, const std::string& out) {
  const auto session = parse_session(session_name);
  if (!session) throw ConfigError("unknown session '" + session_name + "'");
  const Instrument instrument;
  const auto result = parse_bar_file(file, SessionSpec::of(*session), instrument);
  fmt::print("{} complete, {} incomplete, {} rejected bars\n", result.complete_count(), result.incomplete_count(),
             result.rejected.size());
  for (const auto& r : result.rejected) fmt::print(stderr, "line {}: rejected: {}\n", r.line, r.reason);
  if (!out.empty()) {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw DataError("cannot write " + out);
    write_bars(os, complete_days(result.days), instrument);
  }
  return kOk;
}

int cmd_synth(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
  auto file = parse_synth_spec(read_text(config));
  if (seed) file.spec.seed = *seed;
  const fs::path dir = out.empty() ? fs::path("synth") : fs::path(out);
  fs::create_directories(dir);
  const Instrument instrument;
  const std::string header = "# synth " + dump_synth_spec(file) + "\n";

  auto write_days = [&](const std::string& name, std::span<const TradingDay> days) {
    std::ostringstream os;
    os << header;
    write_bars(os, days, instrument);
    write_text(dir / name, os.str());
  };

  RunConfig run = default_config();
  run.seed = file.spec.seed;
  if (file.spec.session.name != Session::RTH) {
    const auto days = gen_null_days(file.spec, instrument);
    const std::string name = fmt::format("{}.csv", to_string(file.spec.session.name));
    write_days(name, days);
    fmt::print("{} days -> {}\n", days.size(), (dir / name).string());
    return kOk;
  }
  const auto ds = synth_dataset(file.spec, instrument, file.all_sessions);
  write_days("rth.csv", ds.data.rth);
  run.data.rth = "rth.csv";
  if (file.all_sessions) {
    write_days("asia.csv", ds.data.asia);
    write_days("london.csv", ds.data.london);
    std::ostringstream ev;
    ev << header;
    write_event_calendar(ev, ds.data.events);
    write_text(dir / "events.csv", ev.str());
    run.data.asia = "asia.csv";
    run.data.london = "london.csv";
    run.data.events = "events.csv";
  }
  std::ostringstream planted;
  planted << header << "family,date,bar_index,direction,meta\n";
  for (const auto& e : ds.planted) planted << event_record(e) << '\n';
  write_text(dir / "planted.csv", planted.str());
  write_text(dir / "run.json", dump_config(run));
  fmt::print("{} RTH days, {} planted events -> {}\n", ds.data.rth.size(), ds.planted.size(), dir.string());
  return kOk;
}

int cmd_run(const std::string& config_path, const std::string& family, const std::string& out,
            std::optional<std::uint64_t> seed) {
  RunConfig cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  std::vector<Family> families;
  if (family.empty() || family == "all") {
    for (const auto& fc : cfg.families) families.push_back(fc.family);
  } else {
    const auto f = parse_family(family);
    if (!f) throw ConfigError("unknown family '" + family + "'");
    families.push_back(*f);
  }
  for (Family f : families) {
    if (!cfg.family(f)) throw ConfigError(fmt::format("family {} has no declared grid", to_string(f)));
  }
  const auto data = load_dataset(cfg.data, cfg.instrument, fs::path(config_path).parent_path());
  const auto outcomes = run_families(data, cfg, families);
  const fs::path dir = output_base(out, cfg) / config_hash(cfg);
  write_run_directory(dir, cfg, outcomes);
  std::vector<RunReport> reports;
  for (const auto& o : outcomes) reports.push_back(o.report);
  fmt::print("{}\nrun directory: {}\n", render_summary(reports, ReportFormat::Markdown), dir.string());
  return kOk;
}

int cmd_report(const std::string& run_dir, const std::string& family) {
  const fs::path dir(run_dir);
  const RunConfig cfg = load_config(dir / "config.json");
  std::vector<Family> families;
  if (family.empty() || family == "all") {
    for (const auto& fc : cfg.families) {
      if (fs::exists(dir / "trades" / fmt::format("{}.csv", to_string(fc.family)))) families.push_back(fc.family);
    }
  } else {
    const auto f = parse_family(family);
    if (!f) throw ConfigError("unknown family '" + family + "'");
    families.push_back(*f);
  }
  for (Family f : families) {
    const auto text = regenerate_report(dir, f, cfg);
    write_text(dir / "reports" / fmt::format("{}.md", to_string(f)), text);
    fmt::print("{}\n", text);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Falsification engine for intraday OHLCV signals"};
  app.require_subcommand(1);

  std::string config, family, out, file, session = "RTH";
  std::optional<std::uint64_t> seed;

  auto* ingest = app.add_subcommand("ingest", "Parse a bar file and report day completeness");
  ingest->add_option("file", file, "Bar file")->required();
  ingest->add_option("--session", session, "RTH, ASIA or LONDON");
  ingest->add_option("--out", out, "Write complete days to this file");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--config", config, "Synth spec (JSON)")->required();
  synth->add_option("--out", out, "Output directory");
  synth->add_option("--seed-override", seed, "Replace the spec seed");

  auto* run = app.add_subcommand("run", "Walk-forward, gate and report one family or all");
  run->add_option("--config", config, "Run config (JSON)")->required();
  run->add_option("--family", family, "Family name or 'all'");
  run->add_option("--out", out, "Output base directory (default $FALSIFY_OUT or ./out)");
  run->add_option("--seed-override", seed, "Replace the config seed");

  auto* report = app.add_subcommand("report", "Regenerate reports from a run directory's trade logs");
  report->add_option("--out", out, "Run directory")->required();
  report->add_option("--family", family, "Family name or 'all'");

  auto* ledger = app.add_subcommand("ledger", "Decision ledger");
  ledger->require_subcommand(1);
  std::string ledger_file, id, text, status = "OPEN", created_at, supersedes, filter;
  std::vector<std::string> evidence;
  auto* append = ledger->add_subcommand("append", "Append a decision record");
  append->add_option("ledger", ledger_file, "Ledger file")->required();
  append->add_option("--id", id, "D-number")->required();
  append->add_option("--text", text, "Decision statement")->required();
  append->add_option("--status", status, "OPEN or LOCKED");
  append->add_option("--created-at", created_at, "ISO-8601 timestamp")->required();
  append->add_option("--evidence", evidence, "Run ids");
  append->add_option("--supersedes", supersedes, "Id of the record this re-opens");
  auto* list = ledger->add_subcommand("list", "List current records");
  list->add_option("ledger", ledger_file, "Ledger file")->required();
  list->add_option("--status", filter, "OPEN or LOCKED");
  auto* verify = ledger->add_subcommand("verify", "Check the hash chain");
  verify->add_option("ledger", ledger_file, "Ledger file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*ingest) return cmd_ingest(file, session, out);
    if (*synth) return cmd_synth(config, out, seed);
    if (*run) return cmd_run(config, family, out, seed);
    if (*report) return cmd_report(out, family);
    if (*append) {
      const auto st = parse_decision_status(status);
      if (!st) throw ConfigError("status must be OPEN or LOCKED");
      DecisionRecord r{id, text, *st, created_at, evidence, std::nullopt};
      if (!supersedes.empty()) r.supersedes = supersedes;
      ledger_append(ledger_file, r);
      fmt::print("appended {}\n", id);
      return kOk;
    }
    if (*list) {
      std::optional<DecisionStatus> st;
      if (!filter.empty()) {
        st = parse_decision_status(filter);
        if (!st) throw ConfigError("status must be OPEN or LOCKED");
      }
      for (const auto& r : ledger_list(ledger_file, st)) {
        fmt::print("{} [{}] {}{}\n", r.id, to_string(r.status), r.text,
                   r.supersedes ? fmt::format(" (supersedes {})", *r.supersedes) : std::string());
      }
      return kOk;
    }
    if (*verify) {
      const auto v = ledger_verify(ledger_file);
      if (!v.ok) {
        fmt::print(stderr, "error: hash chain broken at {}\n", v.message);
        return kDataError;
      }
      fmt::print("ok: {} records\n", v.records);
      return kOk;
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kDataError;
  }
  return kOk;
}
