#include "qkdad/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <vector>

namespace qkdad {

namespace {

// hard caps applied before any allocation driven by file contents
constexpr std::size_t kMaxDims = 1000000;
constexpr std::size_t kMaxLayers = 64;
constexpr std::size_t kMaxElements = 20000000;
constexpr std::size_t kMaxTraceLen = 1000000;

double parse_double_token(const std::string& token, const char* what) {
  if (token.empty()) throw FormatError(std::string(what) + ": empty number");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || errno == ERANGE)
    throw FormatError(std::string(what) + ": bad number '" + token + "'");
  if (!std::isfinite(v))
    throw FormatError(std::string(what) + ": non-finite number '" + token + "'");
  return v;
}

std::uint64_t parse_count_token(const std::string& token, std::uint64_t max_value,
                                const char* what) {
  if (token.empty() || token[0] == '-')
    throw FormatError(std::string(what) + ": bad count '" + token + "'");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(token.c_str(), &end, 10);
  if (end != token.c_str() + token.size() || errno == ERANGE)
    throw FormatError(std::string(what) + ": bad count '" + token + "'");
  if (v > max_value)
    throw FormatError(std::string(what) + ": count " + token + " exceeds limit " +
                      std::to_string(max_value));
  return v;
}

/// Whitespace-delimited token stream for the model container.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next(const char* what) {
    std::string token;
    if (!(in_ >> token)) throw FormatError(std::string(what) + ": unexpected end of file");
    return token;
  }

  void expect(const char* literal) {
    const std::string token = next(literal);
    if (token != literal)
      throw FormatError(std::string("expected '") + literal + "', found '" + token + "'");
  }

  double number(const char* what) { return parse_double_token(next(what), what); }

  std::uint64_t count(std::uint64_t max_value, const char* what) {
    return parse_count_token(next(what), max_value, what);
  }

  bool at_end() {
    std::string token;
    return !(in_ >> token);
  }

 private:
  std::istream& in_;
};

void write_values(std::ostream& out, const double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out << ' ';
    out << format_double(v[i]);
  }
  out << '\n';
}

void read_values(TokenReader& r, double* v, std::size_t n, const char* what) {
  for (std::size_t i = 0; i < n; ++i) v[i] = r.number(what);
}

void write_normalizer(std::ostream& out, const NormStats& stats) {
  out << "norm " << to_string(stats.mode) << ' ' << stats.dim() << '\n';
  write_values(out, stats.a.data(), stats.a.size());
  write_values(out, stats.b.data(), stats.b.size());
}

NormStats read_normalizer(TokenReader& r, std::size_t expected_dim) {
  r.expect("norm");
  NormStats stats;
  const std::string mode = r.next("normalizer mode");
  if (mode == "minmax")
    stats.mode = NormMode::MinMax;
  else if (mode == "zscore")
    stats.mode = NormMode::ZScore;
  else
    throw FormatError("unknown normalizer mode '" + mode + "'");
  const std::size_t d = r.count(kMaxDims, "normalizer dim");
  if (d != expected_dim) throw FormatError("normalizer dimension does not match model");
  stats.a.resize(d);
  stats.b.resize(d);
  read_values(r, stats.a.data(), d, "normalizer stats");
  read_values(r, stats.b.data(), d, "normalizer stats");
  return stats;
}

void write_deep(std::ostream& out, const deepsvdd::DeepSvddModel& m) {
  out << "kind deep\n";
  out << "leaky_slope " << format_double(m.params.leaky_slope) << '\n';
  out << "arch " << m.params.layer_dims.size();
  for (std::size_t d : m.params.layer_dims) out << ' ' << d;
  out << '\n';
  out << "weights " << m.params.weights.size() << '\n';
  for (const Matrix& w : m.params.weights) {
    out << "layer " << w.rows() << ' ' << w.cols() << '\n';
    for (std::size_t r = 0; r < w.rows(); ++r) write_values(out, w.row(r), w.cols());
  }
  out << "center " << m.sphere.center.size() << '\n';
  write_values(out, m.sphere.center.data(), m.sphere.center.size());
  out << "radius " << format_double(m.sphere.radius) << '\n';
  write_normalizer(out, m.normalizer);
  out << "config nu " << format_double(m.config.nu) << " lambda "
      << format_double(m.config.weight_decay) << " lr "
      << format_double(m.config.learning_rate) << " batch " << m.config.batch_size
      << " epochs " << m.config.epochs << " period " << m.config.radius_update_period
      << " seed " << m.config.seed << '\n';
  out << "loss_trace " << m.loss_trace.size() << '\n';
  if (!m.loss_trace.empty()) write_values(out, m.loss_trace.data(), m.loss_trace.size());
  out << "end\n";
}

deepsvdd::DeepSvddModel read_deep(TokenReader& r) {
  deepsvdd::DeepSvddModel m;

  r.expect("leaky_slope");
  m.params.leaky_slope = r.number("leaky_slope");

  r.expect("arch");
  const std::size_t n_dims = r.count(kMaxLayers, "arch size");
  if (n_dims < 2) throw FormatError("arch: need at least two dimensions");
  m.params.layer_dims.resize(n_dims);
  for (std::size_t i = 0; i < n_dims; ++i) {
    m.params.layer_dims[i] = r.count(kMaxDims, "arch dim");
    if (m.params.layer_dims[i] == 0) throw FormatError("arch: zero dimension");
  }

  r.expect("weights");
  const std::size_t n_layers = r.count(kMaxLayers, "layer count");
  if (n_layers != n_dims - 1)
    throw FormatError("layer count does not match architecture");
  for (std::size_t l = 0; l < n_layers; ++l) {
    r.expect("layer");
    const std::size_t rows = r.count(kMaxDims, "layer rows");
    const std::size_t cols = r.count(kMaxDims, "layer cols");
    if (rows != m.params.layer_dims[l + 1] || cols != m.params.layer_dims[l])
      throw FormatError("layer shape does not match architecture");
    if (rows * cols > kMaxElements) throw FormatError("layer too large");
    Matrix w(rows, cols);
    read_values(r, w.data(), rows * cols, "weights");
    m.params.weights.push_back(std::move(w));
  }

  r.expect("center");
  const std::size_t p = r.count(kMaxDims, "center size");
  if (p != m.params.layer_dims.back())
    throw FormatError("center length does not match network output");
  m.sphere.center.resize(p);
  read_values(r, m.sphere.center.data(), p, "center");

  r.expect("radius");
  m.sphere.radius = r.number("radius");
  if (m.sphere.radius < 0.0) throw FormatError("radius must be nonnegative");

  m.normalizer = read_normalizer(r, m.params.layer_dims.front());

  r.expect("config");
  r.expect("nu");
  m.config.nu = r.number("config nu");
  r.expect("lambda");
  m.config.weight_decay = r.number("config lambda");
  r.expect("lr");
  m.config.learning_rate = r.number("config lr");
  r.expect("batch");
  m.config.batch_size = r.count(kMaxElements, "config batch");
  r.expect("epochs");
  m.config.epochs = r.count(kMaxElements, "config epochs");
  r.expect("period");
  m.config.radius_update_period = r.count(kMaxElements, "config period");
  r.expect("seed");
  m.config.seed = r.count(std::numeric_limits<std::uint64_t>::max(), "config seed");
  m.config.architecture = m.params.layer_dims;
  m.config.norm_mode = m.normalizer.mode;
  try {
    m.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("config echo invalid: ") + e.what());
  }

  r.expect("loss_trace");
  const std::size_t trace_len = r.count(kMaxTraceLen, "loss trace length");
  m.loss_trace.resize(trace_len);
  read_values(r, m.loss_trace.data(), trace_len, "loss trace");

  r.expect("end");
  return m;
}

void write_svdd(std::ostream& out, const baseline::SvddDualModel& m) {
  out << "kind svdd\n";
  out << "kernel " << baseline::to_string(m.kernel.kind);
  if (m.kernel.kind == baseline::KernelKind::Rbf) out << ' ' << format_double(m.kernel.gamma);
  out << '\n';
  out << "nu " << format_double(m.nu) << '\n';
  out << "n " << m.train.rows() << " dim " << m.train.cols() << '\n';
  out << "alpha " << m.alpha.size() << '\n';
  write_values(out, m.alpha.data(), m.alpha.size());
  out << "r2 " << format_double(m.r_squared) << '\n';
  out << "quad " << format_double(m.alpha_quad) << '\n';
  out << "train\n";
  for (std::size_t i = 0; i < m.train.rows(); ++i)
    write_values(out, m.train.row(i), m.train.cols());
  write_normalizer(out, m.normalizer);
  out << "end\n";
}

baseline::SvddDualModel read_svdd(TokenReader& r) {
  baseline::SvddDualModel m;

  r.expect("kernel");
  const std::string kind = r.next("kernel kind");
  if (kind == "linear") {
    m.kernel.kind = baseline::KernelKind::Linear;
  } else if (kind == "rbf") {
    m.kernel.kind = baseline::KernelKind::Rbf;
    m.kernel.gamma = r.number("kernel gamma");
    if (!(m.kernel.gamma > 0.0)) throw FormatError("rbf gamma must be positive");
  } else {
    throw FormatError("unknown kernel '" + kind + "'");
  }

  r.expect("nu");
  m.nu = r.number("nu");
  if (!(m.nu > 0.0) || m.nu > 1.0) throw FormatError("nu out of range");

  r.expect("n");
  const std::size_t n = r.count(kMaxElements, "training point count");
  r.expect("dim");
  const std::size_t d = r.count(kMaxDims, "training dim");
  if (n == 0 || d == 0) throw FormatError("empty training block");
  if (n * d > kMaxElements) throw FormatError("training block too large");

  r.expect("alpha");
  const std::size_t n_alpha = r.count(kMaxElements, "alpha count");
  if (n_alpha != n) throw FormatError("alpha count does not match training points");
  m.alpha.resize(n);
  read_values(r, m.alpha.data(), n, "alpha");

  r.expect("r2");
  m.r_squared = r.number("r2");
  if (m.r_squared < 0.0) throw FormatError("r2 must be nonnegative");
  r.expect("quad");
  m.alpha_quad = r.number("quad");

  r.expect("train");
  m.train = Matrix(n, d);
  read_values(r, m.train.data(), n * d, "training vectors");

  m.normalizer = read_normalizer(r, d);

  r.expect("end");
  return m;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  if (ds.dim() == 0) throw DataError("write_dataset: dataset has no features");
  if (ds.labeled() && ds.labels.size() != ds.rows())
    throw ShapeError("write_dataset: label count does not match rows");

  out << "# " << ds.provenance << '\n';
  for (std::size_t c = 0; c < ds.dim(); ++c) {
    if (c) out << ',';
    out << 'f' << c;
  }
  if (ds.labeled()) out << ",label";
  out << '\n';

  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < ds.dim(); ++c) {
      if (c) out << ',';
      out << format_double(ds.features(r, c));
    }
    if (ds.labeled()) out << ',' << ds.labels[r];
    out << '\n';
  }
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  write_dataset(out, ds);
  out.flush();
  if (!out) throw DataError("write failed: " + path.string());
}

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;

  // leading comment lines; the first carries the provenance note
  bool have_header = false;
  bool labeled = false;
  std::size_t dim = 0;
  bool have_provenance = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!have_provenance) {
        std::size_t start = 1;
        if (start < line.size() && line[start] == ' ') ++start;
        ds.provenance = line.substr(start);
        have_provenance = true;
      }
      continue;
    }
    // header row
    const auto fields = split_csv(line);
    std::size_t n_features = fields.size();
    if (!fields.empty() && fields.back() == "label") {
      labeled = true;
      n_features -= 1;
    }
    if (n_features == 0) throw ParseError("header has no feature columns", line_no);
    if (n_features > kMaxDims) throw ParseError("header has too many columns", line_no);
    for (std::size_t c = 0; c < n_features; ++c) {
      const std::string expected = "f" + std::to_string(c);
      if (fields[c] != expected)
        throw ParseError("bad header column '" + fields[c] + "' (expected '" + expected + "')",
                         line_no);
    }
    dim = n_features;
    have_header = true;
    break;
  }
  if (!have_header) throw ParseError("missing header row", line_no ? line_no : 1);

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t n_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::size_t expected = dim + (labeled ? 1 : 0);
    if (fields.size() != expected)
      throw ParseError("row has " + std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(expected),
                       line_no);
    for (std::size_t c = 0; c < dim; ++c) {
      try {
        values.push_back(parse_double_token(fields[c], "row value"));
      } catch (const FormatError& e) {
        throw ParseError(e.what(), line_no);
      }
    }
    if (labeled) {
      const std::string& f = fields[dim];
      if (f == "0")
        labels.push_back(0);
      else if (f == "1")
        labels.push_back(1);
      else
        throw ParseError("bad label '" + f + "' (expected 0 or 1)", line_no);
    }
    ++n_rows;
  }

  ds.features = Matrix(n_rows, dim);
  for (std::size_t i = 0; i < values.size(); ++i) ds.features.data()[i] = values[i];
  ds.labels = std::move(labels);
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  return read_dataset(in);
}

void write_model(std::ostream& out, const AnyModel& model) {
  out << "QKDAD1\n";
  if (const auto* deep = std::get_if<deepsvdd::DeepSvddModel>(&model))
    write_deep(out, *deep);
  else
    write_svdd(out, std::get<baseline::SvddDualModel>(model));
}

void write_model(const std::filesystem::path& path, const AnyModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  write_model(out, model);
  out.flush();
  if (!out) throw DataError("write failed: " + path.string());
}

AnyModel read_model(std::istream& in) {
  TokenReader r(in);
  const std::string magic = r.next("magic");
  if (magic != "QKDAD1") {
    if (magic.rfind("QKDAD", 0) == 0)
      throw FormatError("unsupported container version '" + magic + "'");
    throw FormatError("not a model container (bad magic)");
  }
  r.expect("kind");
  const std::string kind = r.next("model kind");

  AnyModel model;
  if (kind == "deep")
    model = read_deep(r);
  else if (kind == "svdd")
    model = read_svdd(r);
  else
    throw FormatError("unknown model kind '" + kind + "'");

  if (!r.at_end()) throw FormatError("trailing data after container end");
  return model;
}

AnyModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  return read_model(in);
}

}  // namespace qkdad
