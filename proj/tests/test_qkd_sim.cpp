#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qkdad/qkd_sim.hpp"

using namespace qkdad;
using namespace qkdad::sim;

namespace {

bool records_equal(const TelemetryRecord& a, const TelemetryRecord& b) {
  return a.features() == b.features();
}

double window_mean(const TimestampWindow& w) {
  double s = 0.0;
  for (double t : w.timestamps) s += t;
  return s / static_cast<double>(w.size());
}

// Kolmogorov-Smirnov statistic of a sorted window against Uniform[0, 100)
double ks_uniform(const TimestampWindow& w) {
  const double n = static_cast<double>(w.size());
  double d = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double f = w.timestamps[i] / kCycleNs;
    d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - f));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

}  // namespace

TEST_CASE("config generators are deterministic per seed and stream-isolated") {
  SimProfile profile;
  profile.seed = 42;
  const auto a = gen_config_normal(50, profile);
  const auto b = gen_config_normal(50, profile);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(records_equal(a[i], b[i]));

  profile.seed = 43;
  const auto c = gen_config_normal(50, profile);
  CHECK_FALSE(records_equal(a[0], c[0]));

  // attack stream is independent of the normal stream even when degenerate
  profile.seed = 42;
  SimProfile null_attack = profile;
  null_attack.attack_gate_shift_ns = 0.0;
  null_attack.attack_qber_inflation = 0.0;
  const auto d = gen_config_calibration_attack(50, null_attack);
  CHECK_FALSE(records_equal(a[0], d[0]));
}

TEST_CASE("gen_config_normal: QBER and gate statistics sit at the nominals") {
  SimProfile profile;
  profile.seed = 7;
  const auto records = gen_config_normal(1000, profile);
  REQUIRE(records.size() == 1000);

  double qber_sum = 0.0, gate_sum = 0.0;
  for (const auto& r : records) {
    CHECK(r.invariants_hold());
    qber_sum += r.qber_overall;
    gate_sum += r.gate_timing_ns;
  }
  CHECK(std::abs(qber_sum / 1000.0 - 0.02) < 0.003);
  CHECK(std::abs(gate_sum / 1000.0 - profile.gate_mean_ns) < 0.1);
}

TEST_CASE("gen_config_normal: zero count is an error") {
  SimProfile profile;
  CHECK_THROWS_AS(gen_config_normal(0, profile), DataError);
  CHECK_THROWS_AS(gen_timestamps_normal(0, 400, profile), DataError);
}

TEST_CASE("calibration attack shifts the gate timing by the profile delta") {
  SimProfile profile;
  profile.seed = 11;
  const std::size_t n = 2000;
  const auto normal = gen_config_normal(n, profile);
  const auto attack = gen_config_calibration_attack(n, profile);

  double mean_n = 0.0, mean_a = 0.0, qber_n = 0.0, qber_a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(attack[i].invariants_hold());
    mean_n += normal[i].gate_timing_ns;
    mean_a += attack[i].gate_timing_ns;
    qber_n += normal[i].qber_basis_h;
    qber_a += attack[i].qber_basis_h;
  }
  mean_n /= n;
  mean_a /= n;
  // two-sample mean difference within 3 sigma of the shift
  const double bound = 3.0 * profile.gate_jitter_ns * std::sqrt(2.0 / n);
  CHECK(std::abs((mean_a - mean_n) - profile.attack_gate_shift_ns) < bound);
  CHECK(qber_a / n - qber_n / n > 0.02);  // inflation on the rectilinear bases
}

TEST_CASE("gen_timestamps_normal: range, sorting, and moments") {
  SimProfile profile;
  profile.seed = 13;
  const auto windows = gen_timestamps_normal(50, 400, profile);
  REQUIRE(windows.size() == 50);
  for (const auto& w : windows) {
    REQUIRE(w.size() == 400);
    CHECK(std::is_sorted(w.timestamps.begin(), w.timestamps.end()));
    CHECK(w.timestamps.front() >= 0.0);
    CHECK(w.timestamps.back() < 100.0);
    // mean of 400 uniforms stays within 3 sigma of 50
    CHECK(std::abs(window_mean(w) - 50.0) < 4.5);
  }
}

TEST_CASE("gen_timestamps_normal: windows pass a 1% KS test 95% of the time") {
  SimProfile profile;
  profile.seed = 17;
  const auto windows = gen_timestamps_normal(100, 400, profile);
  const double critical = 1.63 / std::sqrt(400.0);  // 1% significance
  std::size_t passing = 0;
  for (const auto& w : windows) {
    if (ks_uniform(w) < critical) ++passing;
  }
  CHECK(passing >= 95);
}

TEST_CASE("gen_timestamps_normal: unsorted mode is available for ablation") {
  SimProfile profile;
  profile.seed = 19;
  profile.sort_windows = false;
  const auto windows = gen_timestamps_normal(20, 100, profile);
  std::size_t sorted_count = 0;
  for (const auto& w : windows) {
    if (std::is_sorted(w.timestamps.begin(), w.timestamps.end())) ++sorted_count;
  }
  CHECK(sorted_count < windows.size());
}

TEST_CASE("window sizes outside {100, 225, 400} need the override flag") {
  SimProfile profile;
  CHECK_THROWS_AS(gen_timestamps_normal(1, 50, profile), ConfigError);
  profile.allow_any_window_size = true;
  const auto windows = gen_timestamps_normal(1, 50, profile);
  CHECK(windows.front().size() == 50);
}

TEST_CASE("muted attack: degenerate mixture concentrates at the center") {
  SimProfile profile;
  profile.seed = 23;
  profile.muted_weight = 1.0;
  profile.muted_centers_ns = {50.0};
  profile.muted_width_ns = 1e-9;
  const auto windows = gen_timestamps_muted_attack(5, 100, profile);
  for (const auto& w : windows) {
    for (double t : w.timestamps) CHECK(std::abs(t - 50.0) < 1e-6);
  }
}

TEST_CASE("muted attack: default profile shows strong histogram peaks") {
  SimProfile profile;
  profile.seed = 29;
  const auto attacked = gen_timestamps_muted_attack(10, 400, profile);  // 4000 counts
  const auto counts = sim::histogram(attacked, 0.1);
  REQUIRE(counts.size() == 1000);
  std::uint64_t total = 0, peak = 0;
  for (std::uint64_t c : counts) {
    total += c;
    peak = std::max(peak, c);
  }
  CHECK(total == 4000);
  const double mean_bin = static_cast<double>(total) / 1000.0;
  CHECK(static_cast<double>(peak) >= 5.0 * mean_bin);

  // the attacked distribution must still cover the full cycle
  CHECK(attacked.front().timestamps.front() < 10.0);
  CHECK(attacked.front().timestamps.back() > 90.0);
}

TEST_CASE("normal histograms stay flat at the same scale") {
  SimProfile profile;
  profile.seed = 29;
  const auto normal = gen_timestamps_normal(10, 400, profile);  // 4000 counts
  const auto counts = sim::histogram(normal, 0.1);
  std::uint64_t peak = 0;
  for (std::uint64_t c : counts) peak = std::max(peak, c);
  // mean bin occupancy is 4; the spec's Poisson-tail bound
  CHECK(peak <= 15);
  CHECK(static_cast<double>(peak) <= 3.0 * 4.0);
}

TEST_CASE("muted attack: invalid centers and weights are config errors") {
  SimProfile profile;
  profile.muted_centers_ns = {120.0};
  CHECK_THROWS_AS(gen_timestamps_muted_attack(1, 100, profile), ConfigError);
  profile.muted_centers_ns = {20.0};
  profile.muted_weight = 1.5;
  CHECK_THROWS_AS(gen_timestamps_muted_attack(1, 100, profile), ConfigError);
  profile.muted_weight = 0.5;
  profile.muted_width_ns = 0.0;
  CHECK_THROWS_AS(gen_timestamps_muted_attack(1, 100, profile), ConfigError);
}

TEST_CASE("histogram: conservation and bin placement") {
  SimProfile profile;
  profile.seed = 31;
  const auto windows = gen_timestamps_normal(7, 225, profile);
  const auto counts = sim::histogram(windows, 0.1);
  REQUIRE(counts.size() == 1000);
  std::uint64_t total = 0;
  for (std::uint64_t c : counts) total += c;
  CHECK(total == 7 * 225);

  TimestampWindow w;
  w.timestamps.assign(100, 0.05);
  const auto single = sim::histogram({w}, 0.1);
  CHECK(single[0] == 100);
  std::uint64_t rest = 0;
  for (std::size_t i = 1; i < single.size(); ++i) rest += single[i];
  CHECK(rest == 0);
}

TEST_CASE("histogram: bin width must be positive and divide the cycle") {
  CHECK_THROWS_AS(sim::histogram({}, 0.0), ConfigError);
  CHECK_THROWS_AS(sim::histogram({}, -0.1), ConfigError);
  CHECK_THROWS_AS(sim::histogram({}, 0.3), ConfigError);   // 100/0.3 is not integral
  CHECK(sim::histogram({}, 0.25).size() == 400);
  CHECK(sim::histogram({}, 100.0).size() == 1);
}

TEST_CASE("histogram: out-of-cycle values are rejected, not misbinned") {
  TimestampWindow w;
  w.timestamps = {5.0, -1.0};
  CHECK_THROWS_AS(sim::histogram({w}, 0.1), DataError);
  w.timestamps = {5.0, 100.0};
  CHECK_THROWS_AS(sim::histogram({w}, 0.1), DataError);
  w.timestamps = {5.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(sim::histogram({w}, 0.1), DataError);
}
