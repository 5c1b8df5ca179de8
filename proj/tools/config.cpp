#include "config.hpp"

#include <cmath>

namespace qtp::cli {

Config Config::load(const std::string& path) {
  try {
    return Config(toml::parse_file(path));
  } catch (const toml::parse_error& e) {
    throw ConfigError("cannot parse '" + path + "': " + std::string(e.description()));
  }
}

const toml::node* Config::find(const std::string& path) const {
  return root_.at_path(path).node();
}

bool Config::has(const std::string& path) const { return find(path) != nullptr; }

const toml::node& Config::require(const std::string& path) {
  const toml::node* n = find(path);
  if (!n) throw ConfigError("missing required key '" + path + "'");
  read_.insert(path);
  return *n;
}

double Config::number(const std::string& path) {
  const auto v = require(path).value<double>();
  if (!v || !std::isfinite(*v)) throw ConfigError("'" + path + "' must be a finite number");
  return *v;
}

double Config::number_or(const std::string& path, double fallback) {
  return has(path) ? number(path) : fallback;
}

long long Config::integer(const std::string& path) {
  const auto v = require(path).value_exact<int64_t>();
  if (!v) throw ConfigError("'" + path + "' must be an integer");
  return *v;
}

long long Config::integer_or(const std::string& path, long long fallback) {
  return has(path) ? integer(path) : fallback;
}

std::string Config::string(const std::string& path) {
  const auto v = require(path).value_exact<std::string>();
  if (!v) throw ConfigError("'" + path + "' must be a string");
  return *v;
}

std::string Config::string_or(const std::string& path, const std::string& fallback) {
  return has(path) ? string(path) : fallback;
}

bool Config::boolean_or(const std::string& path, bool fallback) {
  if (!has(path)) return fallback;
  const auto v = require(path).value_exact<bool>();
  if (!v) throw ConfigError("'" + path + "' must be a boolean");
  return *v;
}

std::vector<double> Config::numbers(const std::string& path) {
  const auto* arr = require(path).as_array();
  if (!arr) throw ConfigError("'" + path + "' must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const auto v = (*arr)[i].value<double>();
    if (!v || !std::isfinite(*v)) throw ConfigError("'" + path + "[" + std::to_string(i) + "]' must be a finite number");
    out.push_back(*v);
  }
  return out;
}

std::vector<double> Config::axis(const std::string& path) {
  const toml::node* n = find(path);
  if (!n) throw ConfigError("missing required key '" + path + "'");
  if (n->is_array()) return numbers(path);
  if (!n->is_table()) throw ConfigError("'" + path + "' must be a list or a {min, max, points} table");
  const double lo = number(path + ".min");
  const double hi = number(path + ".max");
  const long long count = integer(path + ".points");
  if (count < 1) throw ConfigError("'" + path + ".points' must be >= 1");
  if (count > 1 && !(hi > lo)) throw ConfigError("'" + path + "': max must exceed min");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) out[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  return out;
}

namespace {

void collect_leaves(const toml::table& t, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [key, node] : t) {
    const std::string path = prefix.empty() ? std::string(key.str()) : prefix + "." + std::string(key.str());
    if (const auto* sub = node.as_table()) {
      collect_leaves(*sub, path, out);
    } else {
      out.push_back(path);
    }
  }
}

nlohmann::json node_json(const toml::node& n) {
  if (const auto* t = n.as_table()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = node_json(v);
    return j;
  }
  if (const auto* a = n.as_array()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : *a) j.push_back(node_json(v));
    return j;
  }
  if (auto v = n.value_exact<int64_t>()) return *v;
  if (auto v = n.value_exact<double>()) return *v;
  if (auto v = n.value_exact<bool>()) return *v;
  if (auto v = n.value_exact<std::string>()) return *v;
  return nullptr;
}

}  // namespace

void Config::finish() const {
  std::vector<std::string> leaves;
  collect_leaves(root_, "", leaves);
  for (const auto& leaf : leaves) {
    if (read_.count(leaf)) continue;
    // Leaves under an axis table are read through their parent path.
    bool covered = false;
    for (const auto& r : read_) {
      if (leaf.rfind(r + ".", 0) == 0) covered = true;
    }
    if (!covered) throw ConfigError("unknown key '" + leaf + "'");
  }
}

nlohmann::json Config::to_json() const { return node_json(root_); }

FieldSpec read_field(Config& c, const std::string& prefix) {
  FieldSpec spec;
  const std::string dim = c.string(prefix + ".dimension");
  if (dim == "1+1") {
    spec.dim = Dimension::D1p1;
  } else if (dim == "3+1") {
    spec.dim = Dimension::D3p1;
  } else {
    throw ConfigError("'" + prefix + ".dimension' must be \"1+1\" or \"3+1\"");
  }
  spec.mass = c.number(prefix + ".mass");
  if (spec.mass < 0.0) throw ConfigError("'" + prefix + ".mass' must be >= 0");
  spec.epsilon = c.number_or(prefix + ".epsilon", 0.0);
  if (spec.epsilon < 0.0) throw ConfigError("'" + prefix + ".epsilon' must be >= 0");
  if (c.has(prefix + ".grid")) {
    if (spec.dim != Dimension::D1p1) throw ConfigError("'" + prefix + ".grid' applies to 1+1 fields only");
    const MomentumGrid g{c.number(prefix + ".grid.p_min"), c.number(prefix + ".grid.p_max"),
                         static_cast<int>(c.integer(prefix + ".grid.points"))};
    try {
      g.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("'" + prefix + ".grid': " + e.what());
    }
    spec.modes = ModeBasis::line(g);
  }
  return spec;
}

DetectorKernel read_kernel(Config& c, const std::string& prefix) {
  const std::string family = c.string(prefix + ".family");
  try {
    if (family == "gaussian-energy") {
      return DetectorKernel::gaussian_energy(c.number(prefix + ".e0"), c.number(prefix + ".tau"),
                                             c.number_or(prefix + ".amplitude", 1.0));
    }
    if (family == "maximal") return DetectorKernel::maximal(c.number_or(prefix + ".amplitude", 1.0));
    if (family == "tabulated") return DetectorKernel::tabulated(c.numbers(prefix + ".p"), c.numbers(prefix + ".values"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("'" + prefix + "': " + e.what());
  }
  throw ConfigError("'" + prefix + ".family' must be gaussian-energy, maximal or tabulated");
}

nlohmann::json kernel_json(const DetectorKernel& k) {
  nlohmann::json j;
  j["description"] = k.describe();
  j["e0"] = k.e0;
  j["tau"] = k.tau;
  j["amplitude"] = k.amplitude;
  if (!k.table_p.empty()) {
    j["table_p"] = k.table_p;
    j["table_values"] = k.table_values;
  }
  return j;
}

}  // namespace qtp::cli
