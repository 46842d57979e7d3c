#include "qsllab/csv.hpp"

#include <charconv>
#include <cmath>

#include "qsllab/error.hpp"

namespace qsllab::csv {

std::string format_number(double v) {
  if (!std::isfinite(v)) throw InvariantError("non-finite value in CSV output");
  if (v == 0.0) v = 0.0;  // drops the sign of -0
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v,
                               std::chars_format::general, 12);
  return std::string(buf, r.ptr);
}

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw ParameterError("CSV table needs at least one column");
}

void Table::add_row(std::vector<double> values) {
  if (values.size() != header_.size()) {
    throw DimensionError("CSV row width does not match the header");
  }
  rows_.push_back(std::move(values));
}

std::string Table::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i > 0) out += ',';
    out += header_[i];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace qsllab::csv
