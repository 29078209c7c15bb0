#include "qkdad/run_config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace qkdad {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void bad_value(const KvEntry& e, const char* expected) {
  throw ConfigError("config line " + std::to_string(e.line) + ": key '" + e.key +
                    "': expected " + expected + ", got '" + e.value + "'");
}

double as_double(const KvEntry& e) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(e.value.c_str(), &end);
  if (e.value.empty() || end != e.value.c_str() + e.value.size() || errno == ERANGE)
    bad_value(e, "a number");
  return v;
}

std::uint64_t as_uint(const KvEntry& e) {
  if (e.value.empty() || e.value[0] == '-') bad_value(e, "a nonnegative integer");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(e.value.c_str(), &end, 10);
  if (end != e.value.c_str() + e.value.size() || errno == ERANGE)
    bad_value(e, "a nonnegative integer");
  return v;
}

bool as_bool(const KvEntry& e) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  bad_value(e, "a boolean (true/false)");
}

std::vector<double> as_double_list(const KvEntry& e) {
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size() || errno == ERANGE)
      bad_value(e, "a comma-separated number list");
    out.push_back(v);
  }
  if (out.empty()) bad_value(e, "a comma-separated number list");
  return out;
}

std::vector<std::size_t> as_dim_list(const KvEntry& e) {
  std::vector<std::size_t> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty() || item[0] == '-') bad_value(e, "a comma-separated dimension list");
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(item.c_str(), &end, 10);
    if (end != item.c_str() + item.size() || errno == ERANGE || v == 0)
      bad_value(e, "a comma-separated dimension list");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) bad_value(e, "a comma-separated dimension list");
  return out;
}

}  // namespace

std::vector<KvEntry> parse_kv(std::istream& in) {
  std::vector<KvEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected 'key = value', got '" + body + "'", line_no);
    KvEntry e;
    e.key = trim(body.substr(0, eq));
    e.value = trim(body.substr(eq + 1));
    e.line = line_no;
    if (e.key.empty()) throw ParseError("empty key", line_no);
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<KvEntry> parse_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  return parse_kv(in);
}

SimKind sim_kind_from_string(const std::string& s) {
  if (s == "config-normal") return SimKind::ConfigNormal;
  if (s == "config-calib") return SimKind::ConfigCalib;
  if (s == "ts-normal") return SimKind::TsNormal;
  if (s == "ts-muted") return SimKind::TsMuted;
  throw ConfigError("unknown simulation kind '" + s +
                    "' (expected config-normal, config-calib, ts-normal, or ts-muted)");
}

const char* to_string(SimKind kind) {
  switch (kind) {
    case SimKind::ConfigNormal: return "config-normal";
    case SimKind::ConfigCalib: return "config-calib";
    case SimKind::TsNormal: return "ts-normal";
    case SimKind::TsMuted: return "ts-muted";
  }
  return "?";
}

void apply_kv_entries(RunConfig& config, const std::vector<KvEntry>& entries) {
  using Applier = std::function<void(RunConfig&, const KvEntry&)>;
  static const std::map<std::string, Applier> schema = {
      // paths
      {"data", [](RunConfig& c, const KvEntry& e) { c.data_path = e.value; }},
      {"model", [](RunConfig& c, const KvEntry& e) { c.model_in = e.value; }},
      {"model_out", [](RunConfig& c, const KvEntry& e) { c.model_out = e.value; }},
      {"out", [](RunConfig& c, const KvEntry& e) { c.out_path = e.value; }},
      {"in", [](RunConfig& c, const KvEntry& e) { c.input_path = e.value; }},
      {"validation_data", [](RunConfig& c, const KvEntry& e) { c.validation_path = e.value; }},

      // shared
      {"seed",
       [](RunConfig& c, const KvEntry& e) {
         const std::uint64_t s = as_uint(e);
         c.profile.seed = s;
         c.train.seed = s;
       }},

      // simulate
      {"kind", [](RunConfig& c, const KvEntry& e) { c.sim_kind = sim_kind_from_string(e.value); }},
      {"n", [](RunConfig& c, const KvEntry& e) { c.count = as_uint(e); }},
      {"window_size", [](RunConfig& c, const KvEntry& e) { c.window_size = as_uint(e); }},

      // profile
      {"gate_mean_ns", [](RunConfig& c, const KvEntry& e) { c.profile.gate_mean_ns = as_double(e); }},
      {"gate_jitter_ns", [](RunConfig& c, const KvEntry& e) { c.profile.gate_jitter_ns = as_double(e); }},
      {"pc_jitter", [](RunConfig& c, const KvEntry& e) { c.profile.pc_jitter = as_double(e); }},
      {"sifted_mean", [](RunConfig& c, const KvEntry& e) { c.profile.sifted_mean = as_double(e); }},
      {"sifted_jitter", [](RunConfig& c, const KvEntry& e) { c.profile.sifted_jitter = as_double(e); }},
      {"ratio_mean", [](RunConfig& c, const KvEntry& e) { c.profile.ratio_mean = as_double(e); }},
      {"ratio_jitter", [](RunConfig& c, const KvEntry& e) { c.profile.ratio_jitter = as_double(e); }},
      {"eff_signal", [](RunConfig& c, const KvEntry& e) { c.profile.eff_signal = as_double(e); }},
      {"eff_decoy", [](RunConfig& c, const KvEntry& e) { c.profile.eff_decoy = as_double(e); }},
      {"eff_vacuum", [](RunConfig& c, const KvEntry& e) { c.profile.eff_vacuum = as_double(e); }},
      {"eff_jitter", [](RunConfig& c, const KvEntry& e) { c.profile.eff_jitter = as_double(e); }},
      {"qber_mean", [](RunConfig& c, const KvEntry& e) { c.profile.qber_mean = as_double(e); }},
      {"qber_jitter", [](RunConfig& c, const KvEntry& e) { c.profile.qber_jitter = as_double(e); }},
      {"pa_mean", [](RunConfig& c, const KvEntry& e) { c.profile.pa_mean = as_double(e); }},
      {"pa_jitter", [](RunConfig& c, const KvEntry& e) { c.profile.pa_jitter = as_double(e); }},
      {"attack_gate_shift_ns",
       [](RunConfig& c, const KvEntry& e) { c.profile.attack_gate_shift_ns = as_double(e); }},
      {"attack_qber_inflation",
       [](RunConfig& c, const KvEntry& e) { c.profile.attack_qber_inflation = as_double(e); }},
      {"muted_centers_ns",
       [](RunConfig& c, const KvEntry& e) { c.profile.muted_centers_ns = as_double_list(e); }},
      {"muted_width_ns", [](RunConfig& c, const KvEntry& e) { c.profile.muted_width_ns = as_double(e); }},
      {"muted_weight", [](RunConfig& c, const KvEntry& e) { c.profile.muted_weight = as_double(e); }},
      {"sort_windows", [](RunConfig& c, const KvEntry& e) { c.profile.sort_windows = as_bool(e); }},
      {"allow_any_window_size",
       [](RunConfig& c, const KvEntry& e) { c.profile.allow_any_window_size = as_bool(e); }},

      // training
      {"nu",
       [](RunConfig& c, const KvEntry& e) {
         const double v = as_double(e);
         c.train.nu = v;
         c.svdd.nu = v;
       }},
      {"lambda", [](RunConfig& c, const KvEntry& e) { c.train.weight_decay = as_double(e); }},
      {"lr", [](RunConfig& c, const KvEntry& e) { c.train.learning_rate = as_double(e); }},
      {"batch_size", [](RunConfig& c, const KvEntry& e) { c.train.batch_size = as_uint(e); }},
      {"epochs", [](RunConfig& c, const KvEntry& e) { c.train.epochs = as_uint(e); }},
      {"radius_update_period",
       [](RunConfig& c, const KvEntry& e) { c.train.radius_update_period = as_uint(e); }},
      {"arch", [](RunConfig& c, const KvEntry& e) { c.train.architecture = as_dim_list(e); }},
      {"norm",
       [](RunConfig& c, const KvEntry& e) {
         try {
           c.train.norm_mode = norm_mode_from_string(e.value);
           c.svdd.norm_mode = c.train.norm_mode;
         } catch (const ConfigError&) {
           bad_value(e, "minmax or zscore");
         }
       }},
      {"model_kind",
       [](RunConfig& c, const KvEntry& e) {
         if (e.value == "deep")
           c.model_kind = ModelKind::Deep;
         else if (e.value == "svdd")
           c.model_kind = ModelKind::Svdd;
         else
           bad_value(e, "deep or svdd");
       }},
      {"kernel",
       [](RunConfig& c, const KvEntry& e) {
         try {
           c.svdd.kernel.kind = baseline::kernel_kind_from_string(e.value);
         } catch (const ConfigError&) {
           bad_value(e, "linear or rbf");
         }
       }},
      {"gamma",
       [](RunConfig& c, const KvEntry& e) {
         if (e.value == "auto") {
           c.svdd.kernel.gamma = 0.0;  // resolved from data at fit time
           return;
         }
         const double v = as_double(e);
         if (!(v > 0.0)) bad_value(e, "a positive number or 'auto'");
         c.svdd.kernel.gamma = v;
       }},
      {"svdd_iters", [](RunConfig& c, const KvEntry& e) { c.svdd.max_iters = as_uint(e); }},

      // eval
      {"trials", [](RunConfig& c, const KvEntry& e) { c.trials = as_uint(e); }},
      {"n_per_class", [](RunConfig& c, const KvEntry& e) { c.n_per_class = as_uint(e); }},
      {"attack",
       [](RunConfig& c, const KvEntry& e) {
         if (e.value == "auto")
           c.attack = AttackChoice::Auto;
         else if (e.value == "calib")
           c.attack = AttackChoice::Calib;
         else if (e.value == "muted")
           c.attack = AttackChoice::Muted;
         else if (e.value == "none")
           c.attack = AttackChoice::None;
         else
           bad_value(e, "auto, calib, muted, or none");
       }},

      // monitor / histogram
      {"tau", [](RunConfig& c, const KvEntry& e) { c.tau_spec = e.value; }},
      {"records", [](RunConfig& c, const KvEntry& e) { c.record_mode = as_bool(e); }},
      {"bin_ns", [](RunConfig& c, const KvEntry& e) { c.histogram_bin_ns = as_double(e); }},
  };

  for (const KvEntry& e : entries) {
    const auto it = schema.find(e.key);
    if (it == schema.end())
      throw ConfigError("config line " + std::to_string(e.line) + ": unknown key '" + e.key +
                        "'");
    it->second(config, e);
  }
}

void validate_paths(const RunConfig& config) {
  auto require = [](const std::string& path, const char* what) {
    if (path.empty()) throw ConfigError(std::string("missing required path: ") + what);
  };
  switch (config.verb) {
    case Verb::Simulate:
      require(config.out_path, "--out");
      break;
    case Verb::Train:
      require(config.data_path, "--data");
      require(config.model_out, "--model-out");
      break;
    case Verb::Eval:
      require(config.model_in, "--model");
      require(config.out_path, "--out");
      break;
    case Verb::Score:
      require(config.model_in, "--model");
      require(config.data_path, "--data");
      break;
    case Verb::Monitor:
      require(config.model_in, "--model");
      break;
    case Verb::Histogram:
      require(config.data_path, "--data");
      require(config.out_path, "--out");
      break;
  }
}

}  // namespace qkdad
