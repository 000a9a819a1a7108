#include "lfi/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lfi/errors.hpp"

namespace lfi {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

static std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

static bool parse_double(const std::string& s, double* out) {
  const char* p = s.c_str();
  char* end = nullptr;
  *out = std::strtod(p, &end);
  if (end == p) return false;
  while (*end == ' ' || *end == '\t') ++end;
  return *end == '\0';
}

void write_series_csv(std::ostream& os, const Series& s) {
  os << "t,prey,predator\n";
  for (int i = 0; i < s.size(); ++i)
    os << format_double(s.times[static_cast<std::size_t>(i)]) << ','
       << format_double(s.prey[static_cast<std::size_t>(i)]) << ','
       << format_double(s.predator[static_cast<std::size_t>(i)]) << '\n';
}

void write_series_csv(const std::string& path, const Series& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  write_series_csv(os, s);
}

Series read_series_csv(std::istream& is) {
  Series s;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    double t;
    if (first && !parse_double(f[0], &t)) {
      first = false;
      continue;  // header
    }
    first = false;
    if (f.size() != 3) throw ConfigError("series csv: expected 3 columns, got " +
                                         std::to_string(f.size()));
    double prey, pred;
    if (!parse_double(f[0], &t) || !parse_double(f[1], &prey) || !parse_double(f[2], &pred))
      throw ConfigError("series csv: non-numeric field in line: " + line);
    s.times.push_back(t);
    s.prey.push_back(prey);
    s.predator.push_back(pred);
  }
  return s;
}

Series read_series_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open: " + path);
  return read_series_csv(is);
}

nd::Tensor read_matrix_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    std::vector<double> row(f.size());
    bool numeric = true;
    for (std::size_t j = 0; j < f.size(); ++j)
      if (!parse_double(f[j], &row[j])) {
        numeric = false;
        break;
      }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw ConfigError(path + ": non-numeric field in line: " + line);
    }
    first = false;
    if (!rows.empty() && row.size() != rows[0].size())
      throw ConfigError(path + ": ragged row (" + std::to_string(row.size()) + " fields, expected " +
                        std::to_string(rows[0].size()) + ")");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(path + ": no data rows");
  nd::Tensor m({static_cast<int>(rows.size()), static_cast<int>(rows[0].size())});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m.at(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return m;
}

void write_matrix_csv(const std::string& path, const nd::Tensor& m, const std::string& header) {
  if (m.rank() != 2) throw ContractViolation("write_matrix_csv: rank-2 tensor required");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  if (!header.empty()) os << header << '\n';
  for (int i = 0; i < m.shape[0]; ++i) {
    for (int j = 0; j < m.shape[1]; ++j) {
      if (j) os << ',';
      os << format_double(m.at(i, j));
    }
    os << '\n';
  }
}

LabeledTable read_classification_csv(const std::string& path) {
  nd::Tensor m = read_matrix_csv(path);
  if (m.shape[1] < 2) throw ConfigError(path + ": need at least one feature column and a label");
  LabeledTable t;
  int f = m.shape[1] - 1;
  t.features = nd::Tensor({m.shape[0], f});
  t.labels.resize(static_cast<std::size_t>(m.shape[0]));
  for (int i = 0; i < m.shape[0]; ++i) {
    for (int j = 0; j < f; ++j) t.features.at(i, j) = m.at(i, j);
    double y = m.at(i, f);
    if (y != 1.0 && y != -1.0)
      throw ConfigError(path + ": label must be -1 or +1, got " + format_double(y) + " in row " +
                        std::to_string(i));
    t.labels[static_cast<std::size_t>(i)] = y;
  }
  return t;
}

void ensure_dir(const std::string& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(path, ec)) {
    if (!fs::is_directory(path, ec)) throw ConfigError(path + " exists and is not a directory");
    return;
  }
  if (!fs::create_directories(path, ec) || ec)
    throw ConfigError("cannot create directory " + path + ": " + ec.message());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  os << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace lfi
