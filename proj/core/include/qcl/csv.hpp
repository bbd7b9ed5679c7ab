#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace qcl {

// Deterministic CSV writer: fixed %.17g formatting, '#' comment lines
// documenting each column.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open output file: " + path);
  }

  void comment(const std::string& line) { out_ << "# " << line << "\n"; }

  void header(const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i)
      out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
  }

  void row(const std::vector<double>& values) {
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
      out_ << buf << (i + 1 < values.size() ? "," : "\n");
    }
  }

  void row_mixed(const std::string& first, const std::vector<double>& values) {
    out_ << first << (values.empty() ? "\n" : ",");
    row(values);
  }

 private:
  std::ofstream out_;
};

}  // namespace qcl
