#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qkdad/error.hpp"

namespace qkdad::sim {

/// Detection timestamps repeat within this cycle; every generated timestamp
/// lies in [0, kCycleNs).
inline constexpr double kCycleNs = 100.0;

/// One block of operational telemetry from the calibration and
/// post-processing stages. Flattened field order is fixed; see features().
struct TelemetryRecord {
  double gate_timing_ns = 0.0;            // detector gate delay within the cycle
  std::array<double, 4> pc_settings{};    // polarization-controller voltages
  double sifted_key_count = 0.0;          // integer-valued, stored as double
  double signal_decoy_detection_ratio = 0.0;
  double det_eff_signal = 0.0;
  double det_eff_decoy = 0.0;
  double det_eff_vacuum = 0.0;
  double qber_basis_h = 0.0;
  double qber_basis_v = 0.0;
  double qber_basis_d = 0.0;
  double qber_basis_a = 0.0;
  double qber_overall = 0.0;
  double privacy_amp_factor = 1.0;

  static constexpr std::size_t kFeatureCount = 16;

  /// Flattened feature vector in the canonical order: gate timing, the four
  /// PC settings, sifted count, signal/decoy ratio, the three detection
  /// efficiencies, the four basis QBERs, overall QBER, privacy amplification
  /// factor. This order is a file-format contract; do not reorder.
  std::array<double, kFeatureCount> features() const;

  bool invariants_hold() const;
};

/// A fixed-size batch of detector timestamps within one cycle.
struct TimestampWindow {
  std::vector<double> timestamps;  // each in [0, kCycleNs), sorted when configured

  std::size_t size() const { return timestamps.size(); }
};

/// Everything the synthetic generators need: nominal operating points,
/// spreads, and the statistical signatures of the two simulated attacks.
/// All magnitudes are tunable; none are measurements.
struct SimProfile {
  std::uint64_t seed = 1;

  // secure-operation nominals
  double gate_mean_ns = 50.0;
  double gate_jitter_ns = 0.5;
  std::array<double, 4> pc_mean{2.10, -1.30, 0.70, 3.40};
  double pc_jitter = 0.05;
  double sifted_mean = 5000.0;
  double sifted_jitter = 250.0;
  double ratio_mean = 2.0;
  double ratio_jitter = 0.08;
  double eff_signal = 0.20;
  double eff_decoy = 0.10;
  double eff_vacuum = 0.01;
  double eff_jitter = 0.005;
  double qber_mean = 0.02;
  double qber_jitter = 0.004;
  double pa_mean = 0.50;
  double pa_jitter = 0.03;

  // calibration-attack signature: desynchronized gates shift the recorded
  // gate timing and observably raise the error rate on two bases
  double attack_gate_shift_ns = 1.5;
  double attack_qber_inflation = 0.03;

  // muted-attack signature: a fraction of detector responses concentrates
  // in narrow regions of the cycle instead of spreading uniformly
  std::vector<double> muted_centers_ns{20.0, 60.0};
  double muted_width_ns = 0.3;
  double muted_weight = 0.35;

  bool sort_windows = true;
  bool allow_any_window_size = false;

  /// Throws ConfigError when spreads, weights, or centers are unusable.
  void validate() const;
};

/// Telemetry records drawn i.i.d. around the secure-operation nominals.
std::vector<TelemetryRecord> gen_config_normal(std::size_t n, const SimProfile& profile);

/// As gen_config_normal, but with the gate timing shifted and two basis
/// QBERs inflated per the profile's calibration-attack parameters. Warns on
/// stderr when both attack magnitudes are zero (records then match the
/// normal distribution exactly).
std::vector<TelemetryRecord> gen_config_calibration_attack(std::size_t n,
                                                           const SimProfile& profile);

/// Windows of timestamps i.i.d. Uniform[0, 100); sorted ascending when the
/// profile says so. window_size must be 100, 225, or 400 unless
/// profile.allow_any_window_size is set.
std::vector<TimestampWindow> gen_timestamps_normal(std::size_t n_windows,
                                                   std::size_t window_size,
                                                   const SimProfile& profile);

/// Muted-attack windows: each timestamp comes from the truncated-normal
/// mixture at the profile centers with probability muted_weight, otherwise
/// from Uniform[0, 100). Weight zero reproduces the normal generator's
/// distribution (and warns, as the attack is degenerate).
std::vector<TimestampWindow> gen_timestamps_muted_attack(std::size_t n_windows,
                                                         std::size_t window_size,
                                                         const SimProfile& profile);

/// Counts of all timestamps across windows in [k*bin_ns, (k+1)*bin_ns) bins
/// covering one cycle. bin_ns must divide the cycle length. The bin sum
/// always equals the total timestamp count.
std::vector<std::uint64_t> histogram(const std::vector<TimestampWindow>& windows,
                                     double bin_ns);

}  // namespace qkdad::sim
