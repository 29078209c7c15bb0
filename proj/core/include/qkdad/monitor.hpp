#pragma once

#include <cstdint>
#include <iosfwd>

#include "qkdad/model.hpp"

namespace qkdad {

struct MonitorOptions {
  double tau = 0.0;          // alert threshold on the anomaly score
  bool record_mode = false;  // false: one timestamp per line; true: one CSV record per line
  bool sort_window = true;   // timestamp mode only; matches dataset construction
  double max_malformed_fraction = 0.01;
};

struct MonitorResult {
  std::size_t windows = 0;
  std::size_t anomalies = 0;
  std::size_t lines = 0;
  std::size_t malformed = 0;
};

/// Single-pass stream monitor. Timestamp mode fills non-overlapping windows
/// of model_input_dim values (one value per line), sorts, and scores each;
/// record mode treats every line as one comma-separated feature row. Each
/// completed window emits `index, score, verdict` on `out`. Malformed lines
/// are logged to `log`, skipped, and counted; exceeding the malformed
/// budget (checked once 100 lines have been seen, and again at end of
/// stream) raises StreamError. A trailing partial window is discarded.
MonitorResult run_monitor(const AnyModel& model, std::istream& in, std::ostream& out,
                          std::ostream& log, const MonitorOptions& options);

}  // namespace qkdad
