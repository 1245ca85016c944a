#pragma once

// Result tables in the layout Variant / N / Mean Net / T / Win rate / Verdict,
// plus the gross-vs-net comparison row.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "falsify/stats.hpp"

namespace falsify {

struct GrossNetRow {
  std::string family;
  std::optional<double> gross;
  std::optional<double> t_gross;
  std::optional<double> net;
  std::optional<double> t_net;
  bool flagged = false;  // |T| >= t_min in some metric but the gate failed
};

struct RunReport {
  std::string family;
  std::string variant;
  std::string params;
  EvalMetrics metrics;
  Verdict verdict;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> fold_lines;  // one per walk-forward fold

  GrossNetRow gross_vs_net(double t_min = 2.0) const;
};

enum class ReportFormat { Markdown, Structured };

RunReport make_report(std::string family, std::string variant, std::string params,
                      std::span<const TradeRecord> trades, const Instrument& instrument, const GateConfig& gate,
                      std::optional<double> permutation_p, std::string config_hash, std::uint64_t seed);

std::string render_report(const RunReport& report, ReportFormat format);
// One row per report, in the given order.
std::string render_summary(std::span<const RunReport> reports, ReportFormat format);

// Fixed two-decimal points with an explicit sign; "n/a" when absent.
std::string format_points(std::optional<double> v);
std::string format_t(std::optional<double> v);
std::string format_rate(std::optional<double> v);

}  // namespace falsify
