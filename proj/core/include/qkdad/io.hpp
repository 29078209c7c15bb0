#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "qkdad/dataset.hpp"
#include "qkdad/model.hpp"

namespace qkdad {

/// Text dataset format: one `#` provenance line, a header `f0,...,fD-1`
/// (plus `,label` when labeled), then one comma-separated row per sample.
/// Floats are written with 17 significant digits, so write -> read -> write
/// reproduces the file byte for byte.
void write_dataset(std::ostream& out, const Dataset& ds);
void write_dataset(const std::filesystem::path& path, const Dataset& ds);

/// Throws ParseError (with line number) on malformed input.
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

/// Versioned model container. First line is the magic `QKDAD1`; readers
/// reject other versions. Carries the model kind, architecture or kernel,
/// all coefficients in row-major order, the sphere, the normalizer, and a
/// config echo. Same 17-digit round-trip guarantee as datasets.
void write_model(std::ostream& out, const AnyModel& model);
void write_model(const std::filesystem::path& path, const AnyModel& model);

/// Throws FormatError on anything structurally wrong (bad magic, unknown
/// version or kind, truncation, implausible sizes, unparsable numbers).
AnyModel read_model(std::istream& in);
AnyModel read_model(const std::filesystem::path& path);

/// %.17g rendering used by every writer in the toolkit.
std::string format_double(double v);

}  // namespace qkdad
