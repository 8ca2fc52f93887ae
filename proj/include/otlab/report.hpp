#pragma once

#include <string>
#include <vector>

namespace otlab::report {

/// Shortest round-trip decimal form of a double ("%.17g" trimmed); NaN and
/// infinities print as nan, inf, -inf.
std::string format_double(double v);

/// CSV table with a leading "# key=value" provenance line.
class CsvTable {
 public:
  CsvTable(std::string provenance, std::vector<std::string> columns);
  void add_row(const std::vector<double>& values);
  void add_row(const std::vector<std::string>& values);
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::string provenance_;
  std::vector<std::string> columns_;
  std::vector<std::string> lines_;
};

struct Series {
  std::string label;
  std::vector<double> x, y;
  bool dashed = false;
};

/// Minimal log-log SVG plot. Non-positive samples are skipped.
struct LogLogPlot {
  std::string title;
  std::string x_label, y_label;
  std::string provenance;  ///< written into an XML comment
  std::vector<Series> series;

  std::string svg() const;
  void write(const std::string& path) const;
};

void write_text(const std::string& path, const std::string& text);

}  // namespace otlab::report
