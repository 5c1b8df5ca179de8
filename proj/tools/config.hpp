#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qtp/detector.hpp"
#include "qtp/field.hpp"
#include "toml.hpp"

namespace qtp::cli {

/// Invalid or incomplete experiment configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Read-tracking view of a TOML document. Accessors take dotted paths;
/// finish() rejects every key that was never read.
class Config {
 public:
  explicit Config(toml::table root) : root_(std::move(root)) {}
  static Config load(const std::string& path);

  bool has(const std::string& path) const;
  double number(const std::string& path);
  double number_or(const std::string& path, double fallback);
  long long integer(const std::string& path);
  long long integer_or(const std::string& path, long long fallback);
  std::string string(const std::string& path);
  std::string string_or(const std::string& path, const std::string& fallback);
  bool boolean_or(const std::string& path, bool fallback);
  std::vector<double> numbers(const std::string& path);
  /// Accepts a list or a {min, max, points} table.
  std::vector<double> axis(const std::string& path);

  void finish() const;
  nlohmann::json to_json() const;

 private:
  const toml::node* find(const std::string& path) const;
  const toml::node& require(const std::string& path);

  toml::table root_;
  std::set<std::string> read_;
};

FieldSpec read_field(Config& c, const std::string& prefix = "field");
DetectorKernel read_kernel(Config& c, const std::string& prefix = "kernel");
nlohmann::json kernel_json(const DetectorKernel& k);

}  // namespace qtp::cli
