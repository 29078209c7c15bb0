#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "qkdad/dataset.hpp"
#include "qkdad/deep_svdd.hpp"
#include "qkdad/io.hpp"
#include "qkdad/qkd_sim.hpp"
#include "qkdad/rng.hpp"
#include "qkdad/svdd_baseline.hpp"

using namespace qkdad;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = 0.0,
                     double hi = 1.0) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

sim::TelemetryRecord sentinel_record() {
  sim::TelemetryRecord r;
  r.gate_timing_ns = 1.0;
  r.pc_settings = {2.0, 3.0, 4.0, 5.0};
  r.sifted_key_count = 6.0;
  r.signal_decoy_detection_ratio = 7.0;
  r.det_eff_signal = 8.0;
  r.det_eff_decoy = 9.0;
  r.det_eff_vacuum = 10.0;
  r.qber_basis_h = 11.0;
  r.qber_basis_v = 12.0;
  r.qber_basis_d = 13.0;
  r.qber_basis_a = 14.0;
  r.qber_overall = 15.0;
  r.privacy_amp_factor = 16.0;
  return r;
}

deepsvdd::DeepSvddModel tiny_deep_model() {
  const Matrix data = random_matrix(48, 5, 7);
  deepsvdd::TrainConfig cfg;
  cfg.architecture = {5, 6, 3};
  cfg.epochs = 6;
  cfg.batch_size = 16;
  cfg.seed = 8;
  return deepsvdd::train(data, cfg);
}

baseline::SvddDualModel tiny_svdd_model() {
  const Matrix data = random_matrix(20, 3, 9);
  baseline::SvddTrainOptions opts;
  opts.nu = 0.25;
  opts.max_iters = 5000;
  return baseline::svdd_train(data, opts);
}

}  // namespace

TEST_CASE("featurize_records: one record flattens to one row in canonical order") {
  const Dataset ds = featurize_records({sentinel_record()});
  REQUIRE(ds.rows() == 1);
  REQUIRE(ds.dim() == sim::TelemetryRecord::kFeatureCount);
  // golden order: gate, pc x4, sifted, ratio, eff x3, qber x4, overall, pa
  for (std::size_t c = 0; c < ds.dim(); ++c)
    CHECK(ds.features(0, c) == static_cast<double>(c + 1));
  CHECK_THROWS_AS(featurize_records({}), DataError);
}

TEST_CASE("featurize_windows: shape, copy semantics, and the three sizes") {
  sim::SimProfile profile;
  profile.seed = 11;
  for (std::size_t size : {100ul, 225ul, 400ul}) {
    const auto windows = sim::gen_timestamps_normal(10, size, profile);
    const Dataset ds = featurize_windows(windows);
    CHECK(ds.rows() == 10);
    CHECK(ds.dim() == size);
    for (std::size_t c = 0; c < size; ++c)
      CHECK(ds.features(3, c) == windows[3].timestamps[c]);
  }

  std::vector<sim::TimestampWindow> ragged(2);
  ragged[0].timestamps.assign(100, 1.0);
  ragged[1].timestamps.assign(225, 1.0);
  CHECK_THROWS_AS(featurize_windows(ragged), ShapeError);
  CHECK_THROWS_AS(featurize_windows({}), DataError);
}

TEST_CASE("fit_normalizer: min-max maps the fitted range onto [0, 1]") {
  Matrix train(3, 1);
  train(0, 0) = 0.0;
  train(1, 0) = 50.0;
  train(2, 0) = 100.0;
  const NormStats stats = fit_normalizer(train, NormMode::MinMax);
  const Matrix out = apply_normalizer(stats, train);
  CHECK(out(0, 0) == 0.0);
  CHECK(out(1, 0) == 0.5);
  CHECK(out(2, 0) == 1.0);

  // values outside the fitted range are deliberately not clipped
  const std::vector<double> far{150.0};
  CHECK(apply_normalizer(stats, far)[0] == 1.5);
}

TEST_CASE("fit_normalizer: constant features map to 0.5 (minmax) and 0 (zscore)") {
  Matrix train(4, 2);
  for (std::size_t r = 0; r < 4; ++r) {
    train(r, 0) = 7.0;
    train(r, 1) = static_cast<double>(r);
  }
  const NormStats mm = fit_normalizer(train, NormMode::MinMax);
  const std::vector<double> x{7.0, 2.0};
  CHECK(apply_normalizer(mm, x)[0] == 0.5);

  const NormStats zs = fit_normalizer(train, NormMode::ZScore);
  CHECK(apply_normalizer(zs, x)[0] == 0.0);
  CHECK(std::isfinite(apply_normalizer(zs, x)[1]));
}

TEST_CASE("normalizer: apply then invert is the identity within 1e-12") {
  const Matrix train = random_matrix(50, 6, 21, -30.0, 70.0);
  for (NormMode mode : {NormMode::MinMax, NormMode::ZScore}) {
    const NormStats stats = fit_normalizer(train, mode);
    const Matrix queries = random_matrix(20, 6, 22, -30.0, 70.0);
    for (std::size_t i = 0; i < queries.rows(); ++i) {
      const std::span<const double> x(queries.row(i), 6);
      const auto round = invert_normalizer(stats, apply_normalizer(stats, x));
      for (std::size_t c = 0; c < 6; ++c) CHECK(std::abs(round[c] - x[c]) < 1e-12);
    }
  }
}

TEST_CASE("mix_test_set: exact balance and deterministic shuffle") {
  Dataset normal;
  normal.features = random_matrix(500, 4, 31);
  Dataset anomalous;
  anomalous.features = random_matrix(500, 4, 32);

  const Dataset mixed = mix_test_set(normal, anomalous, 77);
  REQUIRE(mixed.rows() == 1000);
  std::size_t positives = 0;
  for (int l : mixed.labels) positives += static_cast<std::size_t>(l);
  CHECK(positives == 500);

  const Dataset again = mix_test_set(normal, anomalous, 77);
  CHECK(mixed.features == again.features);
  CHECK(mixed.labels == again.labels);

  const Dataset other = mix_test_set(normal, anomalous, 78);
  CHECK_FALSE(mixed.features == other.features);
}

TEST_CASE("mix_test_set: truncates to the smaller class") {
  Dataset normal;
  normal.features = random_matrix(700, 3, 41);
  Dataset anomalous;
  anomalous.features = random_matrix(500, 3, 42);
  const Dataset mixed = mix_test_set(normal, anomalous, 1);
  CHECK(mixed.rows() == 1000);

  Dataset wrong;
  wrong.features = random_matrix(10, 4, 43);
  CHECK_THROWS_AS(mix_test_set(normal, wrong, 1), ShapeError);
  Dataset empty;
  empty.features = Matrix(0, 3);
  CHECK_THROWS_AS(mix_test_set(normal, empty, 1), DataError);
}

TEST_CASE("dataset files: write -> read -> write reproduces bytes exactly") {
  Dataset ds;
  ds.features = random_matrix(25, 7, 51, -5.0, 5.0);
  ds.provenance = "unit-test dataset";
  // exercise awkward values
  ds.features(0, 0) = 0.1;
  ds.features(0, 1) = 1e-300;
  ds.features(0, 2) = -123456789.123456789;

  std::ostringstream first;
  write_dataset(first, ds);
  std::istringstream in(first.str());
  const Dataset back = read_dataset(in);
  CHECK(back.features == ds.features);
  CHECK(back.provenance == ds.provenance);
  CHECK_FALSE(back.labeled());

  std::ostringstream second;
  write_dataset(second, back);
  CHECK(first.str() == second.str());
}

TEST_CASE("dataset files: labels survive the round trip") {
  Dataset ds;
  ds.features = random_matrix(10, 3, 61);
  ds.labels = {0, 1, 1, 0, 1, 0, 0, 1, 1, 0};
  ds.provenance = "labeled";
  std::ostringstream out;
  write_dataset(out, ds);
  std::istringstream in(out.str());
  const Dataset back = read_dataset(in);
  CHECK(back.labels == ds.labels);
}

TEST_CASE("dataset files: malformed input carries a line number") {
  auto read_str = [](const std::string& text) {
    std::istringstream in(text);
    return read_dataset(in);
  };
  CHECK_THROWS_AS(read_str("# p\nf0,banana\n1,2\n"), ParseError);
  CHECK_THROWS_AS(read_str("# p\nf0,f1\n1,nope\n"), ParseError);
  CHECK_THROWS_AS(read_str("# p\nf0,f1\n1\n"), ParseError);
  CHECK_THROWS_AS(read_str("# p\nf0,f1,label\n1,2,7\n"), ParseError);
  CHECK_THROWS_AS(read_str(""), ParseError);

  try {
    read_str("# p\nf0,f1\n1,2\n3,bad\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("model files: deep container round-trips byte for byte") {
  const deepsvdd::DeepSvddModel model = tiny_deep_model();
  std::ostringstream first;
  write_model(first, AnyModel(model));

  std::istringstream in(first.str());
  const AnyModel back = read_model(in);
  REQUIRE(std::holds_alternative<deepsvdd::DeepSvddModel>(back));
  const auto& m = std::get<deepsvdd::DeepSvddModel>(back);
  CHECK(m.params.layer_dims == model.params.layer_dims);
  for (std::size_t l = 0; l < m.params.weights.size(); ++l)
    CHECK(m.params.weights[l] == model.params.weights[l]);
  CHECK(m.sphere.center == model.sphere.center);
  CHECK(m.sphere.radius == model.sphere.radius);
  CHECK(m.normalizer == model.normalizer);
  CHECK(m.loss_trace == model.loss_trace);
  CHECK(m.config.nu == model.config.nu);
  CHECK(m.config.seed == model.config.seed);

  std::ostringstream second;
  write_model(second, back);
  CHECK(first.str() == second.str());
}

TEST_CASE("model files: svdd container round-trips byte for byte") {
  const baseline::SvddDualModel model = tiny_svdd_model();
  std::ostringstream first;
  write_model(first, AnyModel(model));
  std::istringstream in(first.str());
  const AnyModel back = read_model(in);
  REQUIRE(std::holds_alternative<baseline::SvddDualModel>(back));
  const auto& m = std::get<baseline::SvddDualModel>(back);
  CHECK(m.alpha == model.alpha);
  CHECK(m.r_squared == model.r_squared);
  CHECK(m.alpha_quad == model.alpha_quad);
  CHECK(m.train == model.train);
  CHECK(m.normalizer == model.normalizer);

  std::ostringstream second;
  write_model(second, back);
  CHECK(first.str() == second.str());

  // scores survive the round trip bitwise
  const Matrix queries = random_matrix(5, 3, 71);
  const auto a = baseline::svdd_score_batch(model, queries);
  const auto b = baseline::svdd_score_batch(m, queries);
  CHECK(a == b);
}

TEST_CASE("model files: magic and version rejection") {
  auto read_str = [](const std::string& text) {
    std::istringstream in(text);
    return read_model(in);
  };
  CHECK_THROWS_AS(read_str("JUNK\nkind deep\n"), FormatError);
  CHECK_THROWS_AS(read_str("QKDAD2\nkind deep\n"), FormatError);
  CHECK_THROWS_AS(read_str("QKDAD1\nkind banana\n"), FormatError);
  CHECK_THROWS_AS(read_str(""), FormatError);
}

TEST_CASE("model files: truncation at any point is a typed error, never a crash") {
  const deepsvdd::DeepSvddModel model = tiny_deep_model();
  std::ostringstream out;
  write_model(out, AnyModel(model));
  const std::string full = out.str();

  for (std::size_t cut = 0; cut + 1 < full.size(); cut += 37) {
    std::istringstream in(full.substr(0, cut));
    CHECK_THROWS_AS(read_model(in), Error);
  }
  // trailing garbage is rejected too
  std::istringstream in(full + "extra");
  CHECK_THROWS_AS(read_model(in), FormatError);
}

TEST_CASE("model files: random byte mutations never crash the reader") {
  const deepsvdd::DeepSvddModel model = tiny_deep_model();
  std::ostringstream out;
  write_model(out, AnyModel(model));
  const std::string full = out.str();

  Rng rng(81);
  std::size_t survived = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::string mutated = full;
    const std::size_t flips = 1 + rng.below(4);
    for (std::size_t f = 0; f < flips; ++f)
      mutated[rng.below(mutated.size())] = static_cast<char>(rng.below(256));
    std::istringstream in(mutated);
    try {
      (void)read_model(in);
      ++survived;  // a mutation may leave the file readable; that is fine
    } catch (const Error&) {
    }
  }
  CHECK(survived <= 200);
}

TEST_CASE("normalizer statistics come from training rows only") {
  const Matrix train = random_matrix(64, 4, 91);
  deepsvdd::TrainConfig cfg;
  cfg.architecture = {4, 6, 3};
  cfg.epochs = 3;
  cfg.seed = 92;
  const deepsvdd::DeepSvddModel model = deepsvdd::train(train, cfg);
  CHECK(model.normalizer == fit_normalizer(train, NormMode::MinMax));

  // scoring wild out-of-range data cannot touch the fitted stats
  const Matrix wild = random_matrix(16, 4, 93, -1e6, 1e6);
  (void)deepsvdd::score_batch(model, wild);
  CHECK(model.normalizer == fit_normalizer(train, NormMode::MinMax));
}
