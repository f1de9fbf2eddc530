#pragma once

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace mfoc {

using CsvCell = std::variant<long long, double, std::string>;

/// CSV body builder with deterministic number formatting (%.17g doubles), so
/// identical values always serialize to identical bytes.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) body_ << ',';
      body_ << header[i];
    }
    body_ << '\n';
    columns_ = header.size();
  }

  void row(const std::vector<CsvCell>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) body_ << ',';
      body_ << format(cells[i]);
    }
    body_ << '\n';
  }

  std::string str() const { return body_.str(); }
  std::size_t columns() const { return columns_; }

  static std::string format(const CsvCell& c) {
    if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
    char buf[40];
    if (std::holds_alternative<long long>(c)) {
      std::snprintf(buf, sizeof(buf), "%lld", std::get<long long>(c));
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(c));
    }
    return buf;
  }

 private:
  std::ostringstream body_;
  std::size_t columns_ = 0;
};

}  // namespace mfoc
