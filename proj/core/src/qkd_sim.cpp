#include "qkdad/qkd_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "qkdad/rng.hpp"

namespace qkdad::sim {

namespace {

// substream ids; normal and attack streams are independent even when the
// attack magnitudes are zeroed
constexpr std::uint64_t kStreamConfigNormal = 0x51;
constexpr std::uint64_t kStreamConfigAttack = 0x52;
constexpr std::uint64_t kStreamTsNormal = 0x53;
constexpr std::uint64_t kStreamTsMuted = 0x54;

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

double clip01(double v) { return clip(v, 0.0, 1.0); }

// clip into [0, cycle); the upper end is exclusive
double clip_cycle(double v) {
  return clip(v, 0.0, std::nextafter(kCycleNs, 0.0));
}

// Field draw order is fixed; changing it changes every downstream stream.
TelemetryRecord draw_record(Rng& rng, const SimProfile& p, double gate_shift,
                            double qber_inflation) {
  TelemetryRecord r;
  r.gate_timing_ns = clip_cycle(rng.normal(p.gate_mean_ns + gate_shift, p.gate_jitter_ns));
  for (std::size_t i = 0; i < r.pc_settings.size(); ++i)
    r.pc_settings[i] = rng.normal(p.pc_mean[i], p.pc_jitter);
  r.sifted_key_count = std::max(0.0, std::round(rng.normal(p.sifted_mean, p.sifted_jitter)));
  r.signal_decoy_detection_ratio = std::max(0.0, rng.normal(p.ratio_mean, p.ratio_jitter));
  r.det_eff_signal = clip01(rng.normal(p.eff_signal, p.eff_jitter));
  r.det_eff_decoy = clip01(rng.normal(p.eff_decoy, p.eff_jitter));
  r.det_eff_vacuum = clip01(rng.normal(p.eff_vacuum, p.eff_jitter));
  // gate desynchronization raises the error rate on the two rectilinear bases
  r.qber_basis_h = clip01(rng.normal(p.qber_mean + qber_inflation, p.qber_jitter));
  r.qber_basis_v = clip01(rng.normal(p.qber_mean + qber_inflation, p.qber_jitter));
  r.qber_basis_d = clip01(rng.normal(p.qber_mean, p.qber_jitter));
  r.qber_basis_a = clip01(rng.normal(p.qber_mean, p.qber_jitter));
  r.qber_overall =
      0.25 * (r.qber_basis_h + r.qber_basis_v + r.qber_basis_d + r.qber_basis_a);
  r.privacy_amp_factor = clip(rng.normal(p.pa_mean, p.pa_jitter), 1e-12, 1.0);
  return r;
}

std::vector<TelemetryRecord> gen_config_records(std::size_t n, const SimProfile& p,
                                                std::uint64_t stream, double gate_shift,
                                                double qber_inflation) {
  if (n == 0) throw DataError("config generator: record count must be positive");
  p.validate();
  Rng rng = Rng::substream(p.seed, stream);
  std::vector<TelemetryRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(draw_record(rng, p, gate_shift, qber_inflation));
  return out;
}

void check_window_size(std::size_t window_size, const SimProfile& p) {
  if (p.allow_any_window_size) {
    if (window_size == 0) throw ConfigError("timestamp generator: window size must be positive");
    return;
  }
  if (window_size != 100 && window_size != 225 && window_size != 400)
    throw ConfigError("timestamp generator: window size " + std::to_string(window_size) +
                      " not in {100, 225, 400} (set allow_any_window_size to override)");
}

std::vector<TimestampWindow> gen_windows(std::size_t n_windows, std::size_t window_size,
                                         const SimProfile& p, std::uint64_t stream,
                                         double mixture_weight) {
  if (n_windows == 0) throw DataError("timestamp generator: window count must be positive");
  check_window_size(window_size, p);
  p.validate();

  Rng rng = Rng::substream(p.seed, stream);
  std::vector<TimestampWindow> out;
  out.reserve(n_windows);
  for (std::size_t w = 0; w < n_windows; ++w) {
    TimestampWindow win;
    win.timestamps.reserve(window_size);
    for (std::size_t k = 0; k < window_size; ++k) {
      double t;
      if (mixture_weight > 0.0 && rng.uniform() < mixture_weight) {
        const std::size_t c = static_cast<std::size_t>(rng.below(p.muted_centers_ns.size()));
        // truncated normal by rejection; the centers sit well inside the
        // cycle so this rarely loops
        do {
          t = rng.normal(p.muted_centers_ns[c], p.muted_width_ns);
        } while (t < 0.0 || t >= kCycleNs);
      } else {
        t = rng.uniform(0.0, kCycleNs);
      }
      win.timestamps.push_back(t);
    }
    if (p.sort_windows) std::sort(win.timestamps.begin(), win.timestamps.end());
    out.push_back(std::move(win));
  }
  return out;
}

}  // namespace

std::array<double, TelemetryRecord::kFeatureCount> TelemetryRecord::features() const {
  return {gate_timing_ns,
          pc_settings[0],
          pc_settings[1],
          pc_settings[2],
          pc_settings[3],
          sifted_key_count,
          signal_decoy_detection_ratio,
          det_eff_signal,
          det_eff_decoy,
          det_eff_vacuum,
          qber_basis_h,
          qber_basis_v,
          qber_basis_d,
          qber_basis_a,
          qber_overall,
          privacy_amp_factor};
}

bool TelemetryRecord::invariants_hold() const {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  return gate_timing_ns >= 0.0 && gate_timing_ns < kCycleNs && sifted_key_count >= 0.0 &&
         signal_decoy_detection_ratio >= 0.0 && in01(det_eff_signal) && in01(det_eff_decoy) &&
         in01(det_eff_vacuum) && in01(qber_basis_h) && in01(qber_basis_v) &&
         in01(qber_basis_d) && in01(qber_basis_a) && in01(qber_overall) &&
         privacy_amp_factor > 0.0 && privacy_amp_factor <= 1.0;
}

void SimProfile::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string("profile: ") + name + " must be positive");
  };
  positive(gate_jitter_ns, "gate_jitter_ns");
  positive(pc_jitter, "pc_jitter");
  positive(sifted_jitter, "sifted_jitter");
  positive(ratio_jitter, "ratio_jitter");
  positive(eff_jitter, "eff_jitter");
  positive(qber_jitter, "qber_jitter");
  positive(pa_jitter, "pa_jitter");
  positive(muted_width_ns, "muted_width_ns");
  if (gate_mean_ns < 0.0 || gate_mean_ns >= kCycleNs)
    throw ConfigError("profile: gate_mean_ns outside [0, 100)");
  if (muted_weight < 0.0 || muted_weight > 1.0)
    throw ConfigError("profile: muted_weight outside [0, 1]");
  if (muted_centers_ns.empty()) throw ConfigError("profile: muted_centers_ns is empty");
  for (double c : muted_centers_ns) {
    if (c < 0.0 || c >= kCycleNs)
      throw ConfigError("profile: muted center " + std::to_string(c) + " outside [0, 100)");
  }
}

std::vector<TelemetryRecord> gen_config_normal(std::size_t n, const SimProfile& profile) {
  return gen_config_records(n, profile, kStreamConfigNormal, 0.0, 0.0);
}

std::vector<TelemetryRecord> gen_config_calibration_attack(std::size_t n,
                                                           const SimProfile& profile) {
  if (profile.attack_gate_shift_ns == 0.0) {
    static bool warned = false;
    if (!warned) {
      warned = true;
      std::cerr << "qkdad: warning: calibration attack with zero gate shift; "
                   "records match the normal distribution\n";
    }
  }
  return gen_config_records(n, profile, kStreamConfigAttack, profile.attack_gate_shift_ns,
                            profile.attack_qber_inflation);
}

std::vector<TimestampWindow> gen_timestamps_normal(std::size_t n_windows,
                                                   std::size_t window_size,
                                                   const SimProfile& profile) {
  return gen_windows(n_windows, window_size, profile, kStreamTsNormal, 0.0);
}

std::vector<TimestampWindow> gen_timestamps_muted_attack(std::size_t n_windows,
                                                         std::size_t window_size,
                                                         const SimProfile& profile) {
  if (profile.muted_weight == 0.0) {
    static bool warned = false;
    if (!warned) {
      warned = true;
      std::cerr << "qkdad: warning: muted attack with zero mixture weight; "
                   "windows match the normal distribution\n";
    }
  }
  return gen_windows(n_windows, window_size, profile, kStreamTsMuted, profile.muted_weight);
}

std::vector<std::uint64_t> histogram(const std::vector<TimestampWindow>& windows,
                                     double bin_ns) {
  if (!(bin_ns > 0.0)) throw ConfigError("histogram: bin width must be positive");
  const double bins_exact = kCycleNs / bin_ns;
  const double bins_rounded = std::round(bins_exact);
  if (bins_rounded < 1.0 || std::abs(bins_exact - bins_rounded) > 1e-9)
    throw ConfigError("histogram: bin width must divide the 100 ns cycle");
  const std::size_t n_bins = static_cast<std::size_t>(bins_rounded);

  std::vector<std::uint64_t> counts(n_bins, 0);
  for (const TimestampWindow& w : windows) {
    for (double t : w.timestamps) {
      if (!(t >= 0.0) || t >= kCycleNs)
        throw DataError("histogram: timestamp " + std::to_string(t) +
                        " outside [0, 100) ns");
      std::size_t idx = static_cast<std::size_t>(t / bin_ns);
      if (idx >= n_bins) idx = n_bins - 1;  // guards the floating edge at the cycle end
      counts[idx] += 1;
    }
  }
  return counts;
}

}  // namespace qkdad::sim
