#pragma once

#include "mfoc/model.hpp"
#include "mfoc/pmp.hpp"
#include "mfoc/population.hpp"
#include "mfoc/types.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mfoc {

/// Structured key-value run configuration. One `key = value` pair per line,
/// '#' comments; values are numbers, bare strings, numeric lists
/// `[a, b, ...]`, or atom lists `[{x: [..], y: [..], w: v}, ...]`.
class Config {
 public:
  struct AtomSpec {
    std::vector<double> x, y;
    double w = 1.0;
  };

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const;
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  long long integer(const std::string& key) const;
  long long integer_or(const std::string& key, long long fallback) const;
  std::string str(const std::string& key) const;
  std::string str_or(const std::string& key, const std::string& fallback) const;
  std::vector<double> list(const std::string& key) const;
  std::vector<AtomSpec> atoms(const std::string& key) const;

  /// Raw text of every key, in file order, for the manifest echo.
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void set(const std::string& key, const std::string& raw);

 private:
  const std::string& raw(const std::string& key) const;
  std::map<std::string, std::string> values_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Builders from the canonical config sections.
std::shared_ptr<Model> make_model(const Config& cfg);
TimeGrid make_time_grid(const Config& cfg);
PopulationSpec make_population(const Config& cfg);
SolverConfig make_solver_config(const Config& cfg);

}  // namespace mfoc
