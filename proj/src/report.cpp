#include "falsify/report.hpp"

#include <fmt/format.h>

#include <cmath>

#include "json.hpp"

namespace falsify {

namespace {

using nlohmann::ordered_json;

// Avoids "-0.00" for values that round to zero.
double tidy(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double r = std::round(v * scale) / scale;
  return r == 0.0 ? 0.0 : r;
}

ordered_json opt(std::optional<double> v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::string table_header() {
  return "| Variant | N | Mean Net (pts) | T-Stat | Win Rate | Verdict |\n"
         "|---|---:|---:|---:|---:|---|\n";
}

std::string table_row(const RunReport& r) {
  return fmt::format("| {} | {} | {} | {} | {} | {} |\n", r.variant, r.metrics.n, format_points(r.metrics.mean_net),
                     format_t(r.metrics.t_stat), format_rate(r.metrics.win_rate), r.verdict.failure_label);
}

std::string gross_net_header() {
  return "| Signal Family | Gross (pts) | T-Stat (Gross) | Net After Friction (pts) | T-Stat (Net) |\n"
         "|---|---:|---:|---:|---:|\n";
}

std::string gross_net_line(const GrossNetRow& g) {
  return fmt::format("| {} | {} | {} | {} | {}{} |\n", g.family, format_points(g.gross), format_t(g.t_gross),
                     format_points(g.net), format_t(g.t_net), g.flagged ? "*" : "");
}

ordered_json structured(const RunReport& r) {
  ordered_json j;
  j["family"] = r.family;
  j["variant"] = r.variant;
  j["params"] = r.params;
  j["n"] = r.metrics.n;
  j["mean_gross"] = opt(r.metrics.mean_gross);
  j["mean_net"] = opt(r.metrics.mean_net);
  j["t_stat"] = opt(r.metrics.t_stat);
  j["t_stat_gross"] = opt(r.metrics.t_stat_gross);
  j["win_rate"] = opt(r.metrics.win_rate);
  j["profit_factor"] = opt(r.metrics.profit_factor);
  j["sharpe"] = opt(r.metrics.sharpe);
  j["permutation_p"] = opt(r.metrics.permutation_p);
  ordered_json years = ordered_json::array();
  for (const auto& [y, m] : r.metrics.per_year) {
    years.push_back({{"year", y}, {"n", m.n}, {"mean_net", m.mean_net}, {"t_stat", opt(m.t_stat)}});
  }
  j["per_year"] = years;
  j["verdict"] = r.verdict.failure_label;
  j["failed_criteria"] = r.verdict.failed_criteria();
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["folds"] = r.fold_lines;
  return j;
}

}  // namespace

std::string format_points(std::optional<double> v) {
  if (!v) return "n/a";
  return fmt::format("{:+.2f}", tidy(*v, 2));
}

std::string format_t(std::optional<double> v) {
  if (!v) return "n/a";
  return fmt::format("{:.2f}", tidy(*v, 2));
}

std::string format_rate(std::optional<double> v) {
  if (!v) return "n/a";
  return fmt::format("{:.1f}%", tidy(*v * 100.0, 1));
}

GrossNetRow RunReport::gross_vs_net(double t_min) const {
  GrossNetRow g{family, metrics.mean_gross, metrics.t_stat_gross, metrics.mean_net, metrics.t_stat, false};
  const bool strong = (g.t_gross && *g.t_gross >= t_min) || (g.t_net && *g.t_net >= t_min);
  g.flagged = strong && !verdict.overall;
  return g;
}

RunReport make_report(std::string family, std::string variant, std::string params,
                      std::span<const TradeRecord> trades, const Instrument& instrument, const GateConfig& gate,
                      std::optional<double> permutation_p, std::string config_hash, std::uint64_t seed) {
  RunReport r;
  r.family = std::move(family);
  r.variant = std::move(variant);
  r.params = std::move(params);
  r.metrics = summary_metrics(trades, instrument);
  r.metrics.permutation_p = permutation_p;
  r.verdict = validate(r.metrics, gate);
  r.config_hash = std::move(config_hash);
  r.seed = seed;
  return r;
}

std::string render_report(const RunReport& r, ReportFormat format) {
  if (format == ReportFormat::Structured) return structured(r).dump(2) + "\n";
  std::string out = fmt::format("# {}\n\nconfig: {}  seed: {}\n", r.family, r.config_hash, r.seed);
  if (!r.params.empty()) out += fmt::format("params: {}\n", r.params);
  out += "\n" + table_header() + table_row(r);
  out += fmt::format("\npermutation p: {}\n", r.metrics.permutation_p ? fmt::format("{:.4f}", *r.metrics.permutation_p)
                                                                      : std::string("not computed"));
  if (!r.metrics.per_year.empty()) {
    out += "\n| Year | N | Mean Net (pts) | T-Stat |\n|---:|---:|---:|---:|\n";
    for (const auto& [y, m] : r.metrics.per_year) {
      out += fmt::format("| {} | {} | {} | {} |\n", y, m.n, format_points(m.mean_net), format_t(m.t_stat));
    }
  }
  out += "\n" + gross_net_header() + gross_net_line(r.gross_vs_net());
  if (!r.fold_lines.empty()) {
    out += "\nFolds:\n";
    for (const auto& f : r.fold_lines) out += "- " + f + "\n";
  }
  return out;
}

std::string render_summary(std::span<const RunReport> reports, ReportFormat format) {
  if (format == ReportFormat::Structured) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : reports) arr.push_back(structured(r));
    return arr.dump(2) + "\n";
  }
  std::string out = table_header();
  for (const auto& r : reports) out += table_row(r);
  out += "\n" + gross_net_header();
  for (const auto& r : reports) out += gross_net_line(r.gross_vs_net());
  return out;
}

}  // namespace falsify
