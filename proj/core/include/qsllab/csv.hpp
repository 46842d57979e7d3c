#pragma once

#include <string>
#include <vector>

namespace qsllab::csv {

// Shortest general-format rendering with 12 significant digits; -0 prints
// as 0.
std::string format_number(double v);

// Comma-separated table with LF line endings.
class Table {
 public:
  explicit Table(std::vector<std::string> header);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<double>& row(std::size_t i) const { return rows_.at(i); }

  void add_row(std::vector<double> values);
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace qsllab::csv
