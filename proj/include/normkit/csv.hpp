#pragma once

#include <string>
#include <variant>
#include <vector>

namespace normkit {

/// Shortest round-trip decimal form (std::to_chars); the one formatter
/// used for every numeric output so CSV and JSON agree byte-for-byte on
/// the numbers.
std::string format_double(double v);

using Cell = std::variant<std::string, double, long long>;

std::string format_cell(const Cell& c);

/// Column-ordered result table with CSV (RFC 4180 quoting) and JSON
/// (array of row objects) emitters carrying identical numeric content.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<Cell> row);
  std::size_t row_count() const { return rows_.size(); }

  /// Lexicographic sort over the formatted cells. Sweep aggregation calls
  /// this before writing so parallel execution order cannot leak into the
  /// output.
  void sort_rows();

  std::string to_csv() const;
  std::string to_json() const;

  /// format: "csv" or "json".
  void write_file(const std::string& path, const std::string& format) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

}  // namespace normkit
