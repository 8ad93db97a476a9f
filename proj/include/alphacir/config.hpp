#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "alphacir/types.hpp"

namespace alphacir {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat "key = value" text format with '#' comments. Every key remembers
// its line so validation failures name the exact field and location.
class ConfigFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };

  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
  }

  static ConfigFile parse_text(const std::string& text,
                               const std::string& name = "<config>") {
    ConfigFile cfg;
    cfg.name_ = name;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError(name + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
      if (cfg.entries_.count(key))
        throw ConfigError(name + ":" + std::to_string(lineno) +
                          ": duplicate key '" + key + "'");
      cfg.entries_[key] = Entry{value, lineno};
    }
    return cfg;
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string get_string(const std::string& key) const {
    const Entry& e = lookup(key);
    return e.value;
  }

  std::string get_string(const std::string& key, const std::string& dflt) const {
    return has(key) ? get_string(key) : dflt;
  }

  double get_double(const std::string& key) const {
    const Entry& e = lookup(key);
    return parse_double(e.value, key, e.line);
  }

  double get_double(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
  }

  long get_long(const std::string& key) const {
    const Entry& e = lookup(key);
    try {
      std::size_t pos = 0;
      const long v = std::stol(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (...) {
      fail(key, e.line, "must be an integer, got '" + e.value + "'");
    }
  }

  long get_long(const std::string& key, long dflt) const {
    return has(key) ? get_long(key) : dflt;
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const {
    if (!has(key)) return dflt;
    const Entry& e = lookup(key);
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (...) {
      fail(key, e.line, "must be a nonnegative integer, got '" + e.value + "'");
    }
  }

  std::vector<double> get_doubles(const std::string& key) const {
    const Entry& e = lookup(key);
    std::vector<double> out;
    std::istringstream in(e.value);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      out.push_back(parse_double(trim(tok), key, e.line));
    }
    if (out.empty()) fail(key, e.line, "must be a comma-separated list");
    return out;
  }

  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& dflt) const {
    return has(key) ? get_doubles(key) : dflt;
  }

  // Per-type coefficient list; a single value broadcasts over n types.
  std::vector<double> get_per_type(const std::string& key, std::size_t n) const {
    auto v = get_doubles(key);
    if (v.size() == 1) v.assign(n, v[0]);
    if (v.size() != n)
      fail(key, lookup(key).line,
           "needs 1 or " + std::to_string(n) + " values, got " +
               std::to_string(v.size()));
    return v;
  }

  int line_of(const std::string& key) const { return lookup(key).line; }

  [[noreturn]] void fail(const std::string& key, int line,
                         const std::string& msg) const {
    throw ConfigError(name_ + ":" + std::to_string(line) + ": field '" + key +
                      "' " + msg);
  }

  [[noreturn]] void fail_key(const std::string& key,
                             const std::string& msg) const {
    if (has(key)) fail(key, lookup(key).line, msg);
    throw ConfigError(name_ + ": field '" + key + "' " + msg);
  }

  void require_key(const std::string& key) const {
    if (!has(key))
      throw ConfigError(name_ + ": missing required field '" + key + "'");
  }

  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, e] : entries_) {
      if (!e.used) out.push_back(k);
    }
    return out;
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }
  const std::string& name() const { return name_; }

 private:
  const Entry& lookup(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw ConfigError(name_ + ": missing required field '" + key + "'");
    it->second.used = true;
    return it->second;
  }

  double parse_double(const std::string& s, const std::string& key,
                      int line) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (...) {
      fail(key, line, "must be a number, got '" + s + "'");
    }
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::string name_;
  std::map<std::string, Entry> entries_;
};

// Model block shared by all experiments: alpha, number of types and the
// per-type coefficients, all re-validated here with field-precise
// messages before the module invariants run.
inline ModelParams load_model_params(const ConfigFile& cfg) {
  cfg.require_key("alpha");
  const double alpha = cfg.get_double("alpha");
  if (!(alpha > 0.0 && alpha < 1.0))
    cfg.fail_key("alpha", "must lie in the open interval (0,1)");
  const long n_types = cfg.get_long("types", 1);
  if (n_types < 1) cfg.fail_key("types", "must be at least 1");
  ModelParams p;
  p.alpha = alpha;
  const std::size_t n = static_cast<std::size_t>(n_types);
  p.a = cfg.has("a") ? cfg.get_per_type("a", n) : std::vector<double>(n, 1.0);
  p.b = cfg.has("b") ? cfg.get_per_type("b", n) : std::vector<double>(n, 1.0);
  p.m = cfg.has("m") ? cfg.get_per_type("m", n) : std::vector<double>(n, 1.0);
  for (double v : p.a)
    if (!(v > 0.0)) cfg.fail_key("a", "entries must be positive");
  for (double v : p.m)
    if (!(v >= 0.0)) cfg.fail_key("m", "entries must be nonnegative");
  if (!(p.m_total() > 0.0)) cfg.fail_key("m", "must have positive total mass");
  return p;
}

inline SimConfig load_sim_config(const ConfigFile& cfg) {
  SimConfig s;
  s.h = cfg.get_double("h", 1e-3);
  s.delta_b = cfg.get_double("delta_b", 1e-3);
  s.delta_i = cfg.get_double("delta_i", 1e-3);
  s.horizon = cfg.get_double("horizon", 1.0);
  s.n_paths = cfg.get_long("paths", 10000);
  s.seed = cfg.get_u64("seed", 1);
  s.coarsen_above_mass = cfg.get_double("coarsen_above_mass", 0.0);
  if (!(s.h > 0.0)) cfg.fail_key("h", "must be positive");
  if (!(s.delta_b > 0.0)) cfg.fail_key("delta_b", "must be positive");
  if (!(s.delta_i > 0.0)) cfg.fail_key("delta_i", "must be positive");
  if (!(s.horizon >= 0.0)) cfg.fail_key("horizon", "must be nonnegative");
  if (s.n_paths < 1) cfg.fail_key("paths", "must be at least 1");
  return s;
}

inline GfvConfig load_gfv_config(const ConfigFile& cfg) {
  GfvConfig g;
  g.epsilon = cfg.get_double("epsilon", 1e-3);
  g.horizon = cfg.get_double("horizon", 1.0);
  g.n_paths = cfg.get_long("paths", 10000);
  g.seed = cfg.get_u64("seed", 1);
  if (!(g.epsilon > 0.0 && g.epsilon < 1.0))
    cfg.fail_key("epsilon", "must lie in the open interval (0,1)");
  if (!(g.horizon >= 0.0)) cfg.fail_key("horizon", "must be nonnegative");
  if (g.n_paths < 1) cfg.fail_key("paths", "must be at least 1");
  const std::string route = cfg.get_string("route", "direct");
  if (route == "direct")
    g.route = GfvRoute::direct;
  else if (route == "time-change")
    g.route = GfvRoute::time_change;
  else if (route != "both")
    cfg.fail_key("route", "must be 'direct', 'time-change' or 'both'");
  return g;
}

}  // namespace alphacir
