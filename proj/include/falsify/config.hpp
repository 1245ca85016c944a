#pragma once

// Run configuration: a single JSON document per run.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "falsify/execution.hpp"
#include "falsify/signals.hpp"
#include "falsify/stats.hpp"
#include "falsify/synth.hpp"
#include "falsify/walk_forward.hpp"

namespace falsify {

struct FamilyConfig {
  Family family = Family::ORB_LONG;
  std::vector<ParamPoint> params;  // empty: the family has no tunable parameters
  std::vector<ExitSpec> exits;
  std::optional<GateConfig> gate;  // overrides the run-level gate

  friend bool operator==(const FamilyConfig&, const FamilyConfig&) = default;
};

// Bar files per session plus the event calendar; empty means not supplied.
struct DataPaths {
  std::string rth;
  std::string asia;
  std::string london;
  std::string events;

  friend bool operator==(const DataPaths&, const DataPaths&) = default;
};

struct RunConfig {
  Instrument instrument;
  DataPaths data;
  std::vector<FamilyConfig> families;
  GateConfig gate;
  std::optional<std::vector<int>> years;  // walk-forward years; default all present
  std::uint64_t seed = 42;
  std::size_t permutation_iterations = 1000;
  // Compute p only when the other four criteria pass.
  bool lazy_permutation = true;
  std::string output_dir;
  std::string ledger;

  FrictionModel friction() const { return FrictionModel{instrument.friction_points}; }
  const FamilyConfig* family(Family f) const;
  GateConfig gate_for(Family f) const;
  // Throws ConfigError.
  void validate() const;

  friend bool operator==(const RunConfig& a, const RunConfig& b);
};

// Every family with its declared grid.
RunConfig default_config();
std::vector<FamilyConfig> default_family_grids();

// Throws ConfigError naming the offending key.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
// Canonical, pretty-printed; parse_config(dump_config(c)) == c.
std::string dump_config(const RunConfig& config);
// First 16 hex digits of SHA-256 over the canonical form.
std::string config_hash(const RunConfig& config);

// Synthetic corpus specification. `regimes` may be the string "reference".
struct SynthFile {
  SynthSpec spec;
  bool all_sessions = true;  // also write ASIA, LONDON and an event calendar
};

SynthFile parse_synth_spec(std::string_view text);
std::string dump_synth_spec(const SynthFile& file);  // single line

}  // namespace falsify
