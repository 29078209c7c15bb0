// qkdad command-line tool: simulate | train | eval | score | monitor | histogram.
// Exit codes: 0 clean, 1 usage/config error, 2 anomalies detected, 3 runtime/data error.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qkdad/eval.hpp"
#include "qkdad/io.hpp"
#include "qkdad/model.hpp"
#include "qkdad/monitor.hpp"
#include "qkdad/run_config.hpp"

namespace {

using namespace qkdad;

std::string profile_digest(const sim::SimProfile& p) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    h ^= bits;
    h *= 1099511628211ULL;
  };
  mix(p.gate_mean_ns);
  mix(p.gate_jitter_ns);
  for (double v : p.pc_mean) mix(v);
  mix(p.pc_jitter);
  mix(p.sifted_mean);
  mix(p.sifted_jitter);
  mix(p.ratio_mean);
  mix(p.ratio_jitter);
  mix(p.eff_signal);
  mix(p.eff_decoy);
  mix(p.eff_vacuum);
  mix(p.eff_jitter);
  mix(p.qber_mean);
  mix(p.qber_jitter);
  mix(p.pa_mean);
  mix(p.pa_jitter);
  mix(p.attack_gate_shift_ns);
  mix(p.attack_qber_inflation);
  for (double v : p.muted_centers_ns) mix(v);
  mix(p.muted_width_ns);
  mix(p.muted_weight);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run_simulate(const RunConfig& cfg) {
  Dataset ds;
  switch (cfg.sim_kind) {
    case SimKind::ConfigNormal:
      ds = featurize_records(sim::gen_config_normal(cfg.count, cfg.profile));
      break;
    case SimKind::ConfigCalib:
      ds = featurize_records(sim::gen_config_calibration_attack(cfg.count, cfg.profile));
      break;
    case SimKind::TsNormal:
      ds = featurize_windows(
          sim::gen_timestamps_normal(cfg.count, cfg.window_size, cfg.profile));
      break;
    case SimKind::TsMuted:
      ds = featurize_windows(
          sim::gen_timestamps_muted_attack(cfg.count, cfg.window_size, cfg.profile));
      break;
  }
  ds.provenance = std::string("qkdad simulate kind=") + to_string(cfg.sim_kind) +
                  " n=" + std::to_string(cfg.count) +
                  " seed=" + std::to_string(cfg.profile.seed) + " profile=" +
                  profile_digest(cfg.profile);
  write_dataset(std::filesystem::path(cfg.out_path), ds);
  std::cout << "wrote " << ds.rows() << " x " << ds.dim() << " dataset to " << cfg.out_path
            << '\n';
  return 0;
}

int run_train(const RunConfig& cfg) {
  const Dataset ds = read_dataset(std::filesystem::path(cfg.data_path));
  if (ds.labeled())
    throw ConfigError("train: training data must be unlabeled normal telemetry "
                      "(labeled test sets are for eval)");
  if (ds.rows() == 0) throw DataError("train: dataset has no rows");

  AnyModel model;
  if (cfg.model_kind == ModelKind::Deep) {
    deepsvdd::TrainConfig tc = cfg.train;
    if (tc.architecture.empty()) tc.architecture = deepsvdd::default_architecture(ds.dim());
    deepsvdd::DeepSvddModel m = deepsvdd::train(ds.features, tc);
    std::cout << "trained deep model: epochs=" << m.loss_trace.size()
              << " final_loss=" << format_double(m.loss_trace.back())
              << " radius=" << format_double(m.sphere.radius) << '\n';
    model = std::move(m);
  } else {
    baseline::SvddDualModel m = baseline::svdd_train(ds.features, cfg.svdd);
    std::cout << "trained svdd baseline: steps=" << m.objective_trace.size() - 1
              << " dual_objective=" << format_double(m.objective_trace.back())
              << " r2=" << format_double(m.r_squared) << '\n';
    model = std::move(m);
  }
  write_model(std::filesystem::path(cfg.model_out), model);
  std::cout << "wrote model to " << cfg.model_out << '\n';
  return 0;
}

// family of the evaluation attack, resolved against the model's input width
bool uses_config_records(const RunConfig& cfg, std::size_t dim) {
  switch (cfg.attack) {
    case AttackChoice::Calib: return true;
    case AttackChoice::Muted: return false;
    default: return dim == sim::TelemetryRecord::kFeatureCount;
  }
}

int run_eval(const RunConfig& cfg) {
  const AnyModel model = read_model(std::filesystem::path(cfg.model_in));
  const std::size_t dim = model_input_dim(model);
  const bool config_family = uses_config_records(cfg, dim);
  const bool null_attack = cfg.attack == AttackChoice::None;

  if (!config_family && dim != 100 && dim != 225 && dim != 400 && !cfg.profile.allow_any_window_size)
    throw ConfigError("eval: model input dim " + std::to_string(dim) +
                      " is not a supported window size (set allow_any_window_size)");

  eval::TrialSetGenerator generator = [&](std::uint64_t trial_seed) {
    sim::SimProfile p = cfg.profile;
    p.seed = trial_seed;
    if (config_family) {
      sim::SimProfile pa = p;
      if (null_attack) {
        pa.attack_gate_shift_ns = 0.0;
        pa.attack_qber_inflation = 0.0;
      }
      const Dataset normals = featurize_records(sim::gen_config_normal(cfg.n_per_class, p));
      const Dataset attacks =
          featurize_records(sim::gen_config_calibration_attack(cfg.n_per_class, pa));
      return mix_test_set(normals, attacks, trial_seed);
    }
    sim::SimProfile pa = p;
    if (null_attack) pa.muted_weight = 0.0;
    const Dataset normals =
        featurize_windows(sim::gen_timestamps_normal(cfg.n_per_class, dim, p));
    const Dataset attacks =
        featurize_windows(sim::gen_timestamps_muted_attack(cfg.n_per_class, dim, pa));
    return mix_test_set(normals, attacks, trial_seed);
  };

  eval::BatchScorer scorer = [&](const Matrix& rows) { return model_score_batch(model, rows); };

  const eval::TrialStats stats =
      eval::repeated_eval(scorer, generator, cfg.trials, cfg.profile.seed);

  std::ofstream out(cfg.out_path);
  if (!out) throw DataError("cannot open for writing: " + cfg.out_path);
  const char* attack_name = null_attack ? "none" : (config_family ? "calib" : "muted");
  out << "# qkdad eval model=" << cfg.model_in << " attack=" << attack_name
      << " trials=" << cfg.trials << " n_per_class=" << cfg.n_per_class
      << " seed=" << cfg.profile.seed << " profile=" << profile_digest(cfg.profile) << '\n';
  out << "trial,auc_percent\n";
  for (std::size_t i = 0; i < stats.auc_percent.size(); ++i)
    out << i << ',' << format_double(stats.auc_percent[i]) << '\n';
  out << "mean," << format_double(stats.mean_percent) << '\n';
  out << "variance," << format_double(stats.variance_percent_sq) << '\n';
  out.flush();
  if (!out) throw DataError("write failed: " + cfg.out_path);

  std::cout << "eval: " << cfg.trials << " trials, mean AUC " << stats.mean_percent
            << "% variance " << stats.variance_percent_sq << '\n';
  return 0;
}

int run_score(const RunConfig& cfg) {
  const AnyModel model = read_model(std::filesystem::path(cfg.model_in));
  const Dataset ds = read_dataset(std::filesystem::path(cfg.data_path));
  const std::vector<double> scores = model_score_batch(model, ds.features);

  if (cfg.out_path.empty()) {
    for (double s : scores) std::cout << format_double(s) << '\n';
  } else {
    std::ofstream out(cfg.out_path);
    if (!out) throw DataError("cannot open for writing: " + cfg.out_path);
    for (double s : scores) out << format_double(s) << '\n';
    out.flush();
    if (!out) throw DataError("write failed: " + cfg.out_path);
  }
  return 0;
}

double resolve_tau(const RunConfig& cfg, const AnyModel& model) {
  const std::string& spec = cfg.tau_spec;
  if (spec.rfind("quantile:", 0) == 0) {
    const std::string qs = spec.substr(9);
    char* end = nullptr;
    const double q = std::strtod(qs.c_str(), &end);
    if (qs.empty() || end != qs.c_str() + qs.size() || !(q > 0.0) || q > 1.0)
      throw ConfigError("tau: bad quantile '" + qs + "' (expected a value in (0, 1])");
    if (cfg.validation_path.empty())
      throw ConfigError("tau: quantile threshold needs --validation normal data");
    const Dataset val = read_dataset(std::filesystem::path(cfg.validation_path));
    std::vector<double> scores = model_score_batch(model, val.features);
    if (scores.empty()) throw DataError("tau: validation data is empty");
    std::sort(scores.begin(), scores.end());
    std::size_t k = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(scores.size()) - 1e-9));
    if (k < 1) k = 1;
    if (k > scores.size()) k = scores.size();
    return scores[k - 1];
  }
  char* end = nullptr;
  const double tau = std::strtod(spec.c_str(), &end);
  if (spec.empty() || end != spec.c_str() + spec.size())
    throw ConfigError("tau: expected a number or quantile:q, got '" + spec + "'");
  return tau;
}

int run_monitor(const RunConfig& cfg) {
  const AnyModel model = read_model(std::filesystem::path(cfg.model_in));

  MonitorOptions opts;
  opts.tau = resolve_tau(cfg, model);
  // a record-width model implies record mode; timestamp windows are wider
  opts.record_mode =
      cfg.record_mode || model_input_dim(model) == sim::TelemetryRecord::kFeatureCount;
  opts.sort_window = cfg.profile.sort_windows;

  MonitorResult result;
  if (cfg.input_path.empty()) {
    result = qkdad::run_monitor(model, std::cin, std::cout, std::cerr, opts);
  } else {
    std::ifstream in(cfg.input_path);
    if (!in) throw DataError("cannot open: " + cfg.input_path);
    result = qkdad::run_monitor(model, in, std::cout, std::cerr, opts);
  }
  std::cerr << "qkdad: monitor: " << result.windows << " windows, " << result.anomalies
            << " anomalous, " << result.malformed << " malformed lines\n";
  return result.anomalies > 0 ? 2 : 0;
}

int run_histogram(const RunConfig& cfg) {
  const Dataset ds = read_dataset(std::filesystem::path(cfg.data_path));
  if (ds.rows() == 0) throw DataError("histogram: dataset has no rows");
  std::vector<sim::TimestampWindow> windows(ds.rows());
  for (std::size_t r = 0; r < ds.rows(); ++r)
    windows[r].timestamps = ds.features.row_copy(r);
  const std::vector<std::uint64_t> counts = sim::histogram(windows, cfg.histogram_bin_ns);

  std::uint64_t total = 0;
  for (std::uint64_t c : counts) total += c;

  std::ofstream out(cfg.out_path);
  if (!out) throw DataError("cannot open for writing: " + cfg.out_path);
  out << "# qkdad histogram data=" << cfg.data_path << " bin_ns="
      << format_double(cfg.histogram_bin_ns) << " total=" << total << '\n';
  out << "bin_start_ns,count\n";
  for (std::size_t k = 0; k < counts.size(); ++k)
    out << format_double(static_cast<double>(k) * cfg.histogram_bin_ns) << ',' << counts[k]
        << '\n';
  out.flush();
  if (!out) throw DataError("write failed: " + cfg.out_path);
  std::cout << "wrote " << counts.size() << " bins (" << total << " timestamps) to "
            << cfg.out_path << '\n';
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"QKD telemetry anomaly detection toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file");

  // locals for every flag; only flags the user actually passed are applied,
  // so the file -> flag precedence stays exact
  std::string kind, arch, norm, model_kind, kernel, gamma, attack, tau;
  std::uint64_t n = 0, window_size = 0, seed = 0, batch_size = 0, epochs = 0, period = 0,
                svdd_iters = 0, trials = 0, n_per_class = 0;
  double nu = 0, lambda = 0, lr = 0, bin_ns = 0;
  std::string out, data, model_in, model_out, input_path, validation;
  bool use_stdin = false, records = false;

  CLI::App* sim = app.add_subcommand("simulate", "generate synthetic telemetry datasets");
  sim->add_option("--kind", kind, "config-normal | config-calib | ts-normal | ts-muted");
  sim->add_option("--n", n, "records or windows to generate");
  sim->add_option("--out", out, "output dataset path");
  sim->add_option("--window-size", window_size, "timestamps per window (100/225/400)");
  sim->add_option("--seed", seed, "master seed");

  CLI::App* train = app.add_subcommand("train", "train a detector on normal telemetry");
  train->add_option("--data", data, "training dataset (unlabeled normals)");
  train->add_option("--model-out", model_out, "output model path");
  train->add_option("--nu", nu, "boundary tolerance in (0, 1]");
  train->add_option("--lambda", lambda, "weight decay");
  train->add_option("--lr", lr, "learning rate");
  train->add_option("--batch-size", batch_size, "mini-batch size");
  train->add_option("--epochs", epochs, "training epochs");
  train->add_option("--radius-update-period", period, "epochs between radius refreshes");
  train->add_option("--arch", arch, "comma-separated layer dims, e.g. 400,128,64,32");
  train->add_option("--norm", norm, "minmax | zscore");
  train->add_option("--seed", seed, "training seed");
  train->add_option("--model-kind", model_kind, "deep | svdd");
  train->add_option("--kernel", kernel, "svdd kernel: linear | rbf");
  train->add_option("--gamma", gamma, "rbf bandwidth, or 'auto'");
  train->add_option("--svdd-iters", svdd_iters, "svdd solver iteration budget");

  CLI::App* eval_cmd = app.add_subcommand("eval", "repeated-trial AUC evaluation");
  eval_cmd->add_option("--model", model_in, "model path");
  eval_cmd->add_option("--trials", trials, "independent test trials");
  eval_cmd->add_option("--out", out, "result file path");
  eval_cmd->add_option("--n-per-class", n_per_class, "samples per class per trial");
  eval_cmd->add_option("--attack", attack, "auto | calib | muted | none");
  eval_cmd->add_option("--seed", seed, "master seed");

  CLI::App* score = app.add_subcommand("score", "score a dataset with a trained model");
  score->add_option("--model", model_in, "model path");
  score->add_option("--data", data, "dataset path");
  score->add_option("--out", out, "scores path (default stdout)");

  CLI::App* monitor = app.add_subcommand("monitor", "stream monitoring with alerts");
  monitor->add_option("--model", model_in, "model path");
  monitor->add_flag("--stdin", use_stdin, "read from standard input (default)");
  monitor->add_option("--in", input_path, "read from a file instead of stdin");
  monitor->add_option("--tau", tau, "alert threshold: a number or quantile:q");
  monitor->add_flag("--records", records, "one CSV telemetry record per line");
  monitor->add_option("--validation", validation, "normal data for quantile thresholds");

  CLI::App* hist = app.add_subcommand("histogram", "bin timestamps for plotting");
  hist->add_option("--data", data, "timestamp dataset path");
  hist->add_option("--out", out, "bin-count file path");
  hist->add_option("--bin-ns", bin_ns, "bin width in ns (default 0.1)");

  for (CLI::App* sub : {sim, train, eval_cmd, score, monitor, hist})
    sub->add_option("--config", config_path, "key = value configuration file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  RunConfig cfg;
  if (app.got_subcommand(sim)) cfg.verb = Verb::Simulate;
  if (app.got_subcommand(train)) cfg.verb = Verb::Train;
  if (app.got_subcommand(eval_cmd)) cfg.verb = Verb::Eval;
  if (app.got_subcommand(score)) cfg.verb = Verb::Score;
  if (app.got_subcommand(monitor)) cfg.verb = Verb::Monitor;
  if (app.got_subcommand(hist)) cfg.verb = Verb::Histogram;

  if (!config_path.empty()) {
    try {
      apply_kv_entries(cfg, parse_kv_file(config_path));
    } catch (const qkdad::ParseError& e) {
      throw ConfigError(std::string("config file: ") + e.what());
    }
  }

  // command-line flags win over the config file; route through the same
  // appliers so type checks and coupled fields stay identical
  std::vector<KvEntry> flag_entries;
  auto add_if = [&](const CLI::Option* opt, const std::string& key, const std::string& value) {
    if (opt && opt->count() > 0) flag_entries.push_back({key, value, 0});
  };
  CLI::App* active = app.get_subcommands().front();
  auto opt_of = [&](const char* name) { return active->get_option_no_throw(name); };

  add_if(opt_of("--kind"), "kind", kind);
  add_if(opt_of("--n"), "n", std::to_string(n));
  add_if(opt_of("--window-size"), "window_size", std::to_string(window_size));
  add_if(opt_of("--seed"), "seed", std::to_string(seed));
  add_if(opt_of("--nu"), "nu", format_double(nu));
  add_if(opt_of("--lambda"), "lambda", format_double(lambda));
  add_if(opt_of("--lr"), "lr", format_double(lr));
  add_if(opt_of("--batch-size"), "batch_size", std::to_string(batch_size));
  add_if(opt_of("--epochs"), "epochs", std::to_string(epochs));
  add_if(opt_of("--radius-update-period"), "radius_update_period", std::to_string(period));
  add_if(opt_of("--arch"), "arch", arch);
  add_if(opt_of("--norm"), "norm", norm);
  add_if(opt_of("--model-kind"), "model_kind", model_kind);
  add_if(opt_of("--kernel"), "kernel", kernel);
  add_if(opt_of("--gamma"), "gamma", gamma);
  add_if(opt_of("--svdd-iters"), "svdd_iters", std::to_string(svdd_iters));
  add_if(opt_of("--trials"), "trials", std::to_string(trials));
  add_if(opt_of("--n-per-class"), "n_per_class", std::to_string(n_per_class));
  add_if(opt_of("--attack"), "attack", attack);
  add_if(opt_of("--tau"), "tau", tau);
  add_if(opt_of("--bin-ns"), "bin_ns", format_double(bin_ns));
  apply_kv_entries(cfg, flag_entries);

  // paths and flags that are not config keys
  auto set_if = [&](const char* name, std::string& dst, const std::string& src) {
    const CLI::Option* opt = opt_of(name);
    if (opt && opt->count() > 0) dst = src;
  };
  set_if("--out", cfg.out_path, out);
  set_if("--data", cfg.data_path, data);
  set_if("--model", cfg.model_in, model_in);
  set_if("--model-out", cfg.model_out, model_out);
  set_if("--in", cfg.input_path, input_path);
  set_if("--validation", cfg.validation_path, validation);
  if (opt_of("--records") && active->count("--records") > 0) cfg.record_mode = true;
  if (opt_of("--stdin") && active->count("--stdin") > 0) cfg.input_path.clear();

  validate_paths(cfg);

  switch (cfg.verb) {
    case Verb::Simulate: return run_simulate(cfg);
    case Verb::Train: return run_train(cfg);
    case Verb::Eval: return run_eval(cfg);
    case Verb::Score: return run_score(cfg);
    case Verb::Monitor: return run_monitor(cfg);
    case Verb::Histogram: return run_histogram(cfg);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const qkdad::ConfigError& e) {
    std::cerr << "qkdad: config error: " << e.what() << '\n';
    return 1;
  } catch (const qkdad::StreamError& e) {
    std::cerr << "qkdad: stream error: " << e.what() << '\n';
    return 3;
  } catch (const qkdad::Error& e) {
    std::cerr << "qkdad: error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "qkdad: unexpected error: " << e.what() << '\n';
    return 3;
  }
}
