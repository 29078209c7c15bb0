#include "qkdad/monitor.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "qkdad/io.hpp"

namespace qkdad {

namespace {

bool parse_strict_double(const std::string& token, double& out) {
  if (token.empty()) return false;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || errno == ERANGE || !std::isfinite(v)) return false;
  out = v;
  return true;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

}  // namespace

MonitorResult run_monitor(const AnyModel& model, std::istream& in, std::ostream& out,
                          std::ostream& log, const MonitorOptions& options) {
  const std::size_t width = model_input_dim(model);
  MonitorResult result;

  std::vector<double> window;
  window.reserve(width);
  Matrix one(1, width);

  auto check_budget = [&](bool final_check) {
    if (result.malformed == 0) return;
    if (!final_check && result.lines < 100) return;
    if (static_cast<double>(result.malformed) >
        options.max_malformed_fraction * static_cast<double>(result.lines))
      throw StreamError("monitor: " + std::to_string(result.malformed) + " of " +
                        std::to_string(result.lines) + " input lines malformed");
  };

  auto emit_window = [&] {
    if (options.sort_window && !options.record_mode)
      std::sort(window.begin(), window.end());
    one.set_row(0, window.data());
    const double score = model_score_batch(model, one)[0];
    const bool anomalous = score > options.tau;
    out << result.windows << ", " << format_double(score) << ", "
        << (anomalous ? "anomalous" : "normal") << '\n';
    result.windows += 1;
    if (anomalous) result.anomalies += 1;
    window.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    const std::string body = trim(line);
    if (body.empty()) continue;
    result.lines += 1;

    if (options.record_mode) {
      std::vector<double> fields;
      fields.reserve(width);
      bool ok = true;
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = body.find(',', start);
        const std::string token =
            trim(comma == std::string::npos ? body.substr(start)
                                            : body.substr(start, comma - start));
        double v;
        if (!parse_strict_double(token, v)) {
          ok = false;
          break;
        }
        fields.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (!ok || fields.size() != width) {
        result.malformed += 1;
        log << "qkdad: monitor: skipping malformed record line " << result.lines << '\n';
      } else {
        window = std::move(fields);
        emit_window();
      }
    } else {
      double v;
      if (!parse_strict_double(body, v)) {
        result.malformed += 1;
        log << "qkdad: monitor: skipping malformed value line " << result.lines << '\n';
      } else {
        window.push_back(v);
        if (window.size() == width) emit_window();
      }
    }
    check_budget(false);
  }
  check_budget(true);
  return result;
}

}  // namespace qkdad
