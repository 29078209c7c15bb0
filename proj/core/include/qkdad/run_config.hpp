#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qkdad/deep_svdd.hpp"
#include "qkdad/qkd_sim.hpp"
#include "qkdad/svdd_baseline.hpp"

namespace qkdad {

/// One `key = value` assignment with its source line (for error messages).
struct KvEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Parses `key = value` lines; `#` starts a comment, blank lines are
/// skipped. Throws ParseError on structurally bad lines.
std::vector<KvEntry> parse_kv(std::istream& in);
std::vector<KvEntry> parse_kv_file(const std::filesystem::path& path);

enum class Verb { Simulate, Train, Eval, Score, Monitor, Histogram };

enum class SimKind { ConfigNormal, ConfigCalib, TsNormal, TsMuted };
SimKind sim_kind_from_string(const std::string& s);  // throws ConfigError
const char* to_string(SimKind kind);

enum class AttackChoice { Auto, Calib, Muted, None };

enum class ModelKind { Deep, Svdd };

/// Fully resolved run settings. Precedence: built-in defaults, then the
/// config file, then command-line flags. Unknown config keys are hard
/// errors; every value is type-checked before any work starts.
struct RunConfig {
  Verb verb = Verb::Simulate;

  // paths
  std::string data_path;
  std::string model_in;
  std::string model_out;
  std::string out_path;
  std::string input_path;  // monitor; empty means stdin
  std::string validation_path;

  // simulate
  SimKind sim_kind = SimKind::TsNormal;
  std::size_t count = 1000;
  std::size_t window_size = 400;

  sim::SimProfile profile;

  // train
  deepsvdd::TrainConfig train;
  ModelKind model_kind = ModelKind::Deep;
  baseline::SvddTrainOptions svdd;

  // eval
  std::size_t trials = 100;
  std::size_t n_per_class = 200;
  AttackChoice attack = AttackChoice::Auto;

  // monitor
  std::string tau_spec = "0";  // a number, or "quantile:q" resolved against validation data
  bool record_mode = false;

  double histogram_bin_ns = 0.1;
};

/// Applies config-file entries onto `config`. Throws ConfigError naming the
/// offending key and line on unknown keys or type mismatches.
void apply_kv_entries(RunConfig& config, const std::vector<KvEntry>& entries);

/// Per-verb required-path validation; throws ConfigError.
void validate_paths(const RunConfig& config);

}  // namespace qkdad
