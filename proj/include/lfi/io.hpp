#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lfi/him.hpp"
#include "lfi/models/lotka_volterra.hpp"
#include "lfi/tensor.hpp"

namespace lfi {

// All floats are written with enough digits to round-trip exactly, so a
// rewrite of a parsed file is byte-identical.
std::string format_double(double v);

// Series CSV with header `t,prey,predator`, one row per recorded time.
void write_series_csv(std::ostream& os, const Series& s);
void write_series_csv(const std::string& path, const Series& s);
Series read_series_csv(std::istream& is);
Series read_series_csv(const std::string& path);

// Numeric table. An optional single header line is detected by its first
// field not parsing as a number and is skipped on read. Ragged rows are a
// ConfigError.
nd::Tensor read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const nd::Tensor& m,
                      const std::string& header = "");

// Classification CSV: feature columns then one final label column whose
// values are -1 or +1 exactly.
struct LabeledTable {
  nd::Tensor features;  // [N, F]
  std::vector<double> labels;
};
LabeledTable read_classification_csv(const std::string& path);

// Creates the directory (and parents) if missing; errors if the path exists
// and is not a directory.
void ensure_dir(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace lfi
