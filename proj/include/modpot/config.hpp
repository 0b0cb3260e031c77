#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "modpot/manifold.hpp"

// Experiment files: `key = value` lines, `#` comments, versioned by a
// mandatory `schema = 1` entry.

namespace modpot {

class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")"
                                    : what),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

class ExperimentConfig {
public:
  static ExperimentConfig parse(std::istream& in, const std::string& name = "<stream>") {
    ExperimentConfig cfg;
    cfg.name_ = name;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError("expected `key = value`, got `" + trimmed + "`", lineno);
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) throw ConfigError("empty key", lineno);
      if (cfg.kv_.count(key)) throw ConfigError("duplicate key `" + key + "`", lineno);
      cfg.kv_[key] = {value, lineno};
    }
    if (cfg.get_string("schema", "") != "1")
      throw ConfigError("config must carry `schema = 1`", 0);
    return cfg;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file `" + path + "`", 0);
    return parse(in, path);
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get_string(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing key `" + key + "`", 0);
    return it->second.value;
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second.value;
  }

  double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  long long get_int(const std::string& key) const {
    const double v = get_double(key);
    const long long n = static_cast<long long>(v);
    if (static_cast<double>(n) != v)
      throw ConfigError("key `" + key + "` must be an integer", line_of(key));
    return n;
  }
  long long get_int(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  std::vector<double> get_list(const std::string& key) const {
    std::istringstream in(get_string(key));
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(to_double(key, tok));
    if (out.empty()) throw ConfigError("key `" + key + "` holds no numbers", line_of(key));
    return out;
  }
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const {
    return has(key) ? get_list(key) : fallback;
  }

  /// Positive, strictly increasing radius list.
  std::vector<double> get_radii(const std::string& key) const {
    std::vector<double> r = get_list(key);
    for (size_t i = 0; i < r.size(); ++i) {
      if (!(r[i] > 0)) throw ConfigError("key `" + key + "`: radii must be positive", line_of(key));
      if (i > 0 && !(r[i] > r[i - 1]))
        throw ConfigError("key `" + key + "`: radii must increase", line_of(key));
    }
    return r;
  }

  /// Grid resolution; at least 16 cells.
  int resolution(int fallback = 256) const {
    const long long n = get_int("grid.cells", fallback);
    if (n < 16) throw ConfigError("grid.cells must be >= 16", line_of("grid.cells"));
    return static_cast<int>(n);
  }

  unsigned long long seed() const {
    const long long s = get_int("seed", 20240101);
    if (s < 0) throw ConfigError("seed must be nonnegative", line_of("seed"));
    return static_cast<unsigned long long>(s);
  }

  Manifold manifold() const {
    const int dim = static_cast<int>(get_int("manifold.dim"));
    const std::string kind = get_string("manifold.sigma");
    const double r_max = get_double("manifold.r_max", 1e300);
    if (kind == "euclidean") return Manifold(dim, WarpKind::Euclidean, r_max);
    if (kind == "sinh") return Manifold(dim, WarpKind::HyperbolicSinh, r_max);
    if (kind == "cylinder")
      return Manifold(dim, WarpKind::Cylinder, r_max, get_double("manifold.r0", 1.0));
    if (kind == "poly")
      return Manifold(dim, WarpKind::Polynomial, r_max, 1.0, get_list("manifold.poly"));
    throw ConfigError("manifold.sigma must be euclidean|sinh|cylinder|poly",
                      line_of("manifold.sigma"));
  }

  void override_value(const std::string& key, const std::string& value) {
    kv_[key] = {value, 0};
  }

  const std::map<std::string, std::pair<std::string, int>> entries() const {
    std::map<std::string, std::pair<std::string, int>> out;
    for (const auto& [k, e] : kv_) out[k] = {e.value, e.line};
    return out;
  }

  const std::string& name() const { return name_; }

private:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  int line_of(const std::string& key) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? 0 : it->second.line;
  }

  double to_double(const std::string& key, const std::string& tok) const {
    try {
      size_t pos = 0;
      const double v = std::stod(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key `" + key + "`: `" + tok + "` is not a number", line_of(key));
    }
  }

  std::string name_;
  std::map<std::string, Entry> kv_;
};

}  // namespace modpot
