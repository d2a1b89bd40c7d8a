#include "normkit/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace normkit {

namespace {

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

std::string csv_escape(const std::string& s) {
  if (!needs_quoting(s)) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out += ch;
  }
  out += '"';
  return out;
}

std::string json_escape(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += ch;
    }
  }
  out += '"';
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_cell(const Cell& c) {
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  if (std::holds_alternative<double>(c)) return format_double(std::get<double>(c));
  return std::to_string(std::get<long long>(c));
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != header_.size())
    throw std::invalid_argument("Table::add_row: expected " + std::to_string(header_.size()) +
                                " cells, got " + std::to_string(row.size()));
  rows_.push_back(std::move(row));
}

void Table::sort_rows() {
  std::stable_sort(rows_.begin(), rows_.end(),
                   [](const std::vector<Cell>& a, const std::vector<Cell>& b) {
                     for (std::size_t i = 0; i < a.size(); ++i) {
                       const std::string fa = format_cell(a[i]);
                       const std::string fb = format_cell(b[i]);
                       if (fa != fb) return fa < fb;
                     }
                     return false;
                   });
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(header_[i]);
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(format_cell(row[i]));
    }
    out += '\n';
  }
  return out;
}

std::string Table::to_json() const {
  std::string out = "[";
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    out += r ? ",\n{" : "\n{";
    for (std::size_t i = 0; i < rows_[r].size(); ++i) {
      if (i) out += ',';
      out += json_escape(header_[i]);
      out += ':';
      const Cell& c = rows_[r][i];
      if (std::holds_alternative<std::string>(c))
        out += json_escape(std::get<std::string>(c));
      else if (std::holds_alternative<double>(c) && !std::isfinite(std::get<double>(c)))
        out += json_escape(format_cell(c));  // inf/nan are not JSON numbers
      else
        out += format_cell(c);
    }
    out += '}';
  }
  out += "\n]\n";
  return out;
}

void Table::write_file(const std::string& path, const std::string& format) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("Table::write_file: cannot open " + path);
  out << (format == "json" ? to_json() : to_csv());
  if (!out) throw std::runtime_error("Table::write_file: write failed for " + path);
}

}  // namespace normkit
