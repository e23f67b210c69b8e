#pragma once

// Flat configuration files:
//
//   # comment
//   preset = example-A
//   [solver]
//   eps = 1e-3          # same as solver.eps = 1e-3
//
// Keys are dotted paths; a [section] header prefixes the keys below it.
// Every key must be known, so typos surface as config errors.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vfc/error.hpp"

namespace vfc {

class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& origin = "<config>") {
    KeyValues kv;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(ErrorKind::config, origin + ":" + std::to_string(lineno) + ": unterminated section");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        fail(ErrorKind::config, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) fail(ErrorKind::config, origin + ":" + std::to_string(lineno) + ": empty key");
      if (!section.empty()) key = section + "." + key;
      kv.values_[key] = value;
    }
    return kv;
  }

  static KeyValues load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::config, "cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& all() const { return values_; }

  std::optional<std::string> raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string str(const std::string& key, const std::string& fallback) const { return raw(key).value_or(fallback); }

  double num(const std::string& key, double fallback) const {
    const auto v = raw(key);
    return v ? to_double(key, *v) : fallback;
  }

  int integer(const std::string& key, int fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    const double d = to_double(key, *v);
    if (d != double(int(d))) fail(ErrorKind::config, key + " must be an integer, got '" + *v + "'");
    return int(d);
  }

  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    try {
      std::size_t used = 0;
      const unsigned long long x = std::stoull(*v, &used, 0);
      if (used != v->size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      fail(ErrorKind::config, key + " must be a non-negative integer, got '" + *v + "'");
    }
  }

  bool flag(const std::string& key, bool fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    fail(ErrorKind::config, key + " must be true or false, got '" + *v + "'");
  }

  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    std::vector<double> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(to_double(key, item));
    }
    return out;
  }

  /// Fails on the first key outside `known` (exact names or "prefix.*").
  void check_known(const std::set<std::string>& known) const {
    for (const auto& [key, _] : values_) {
      if (known.count(key)) continue;
      bool matched = false;
      for (const auto& k : known)
        if (k.size() > 2 && k.compare(k.size() - 2, 2, ".*") == 0 && key.rfind(k.substr(0, k.size() - 1), 0) == 0)
          matched = true;
      if (!matched) fail(ErrorKind::config, "unknown config key '" + key + "'");
    }
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

 private:
  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("trailing");
      return d;
    } catch (const std::exception&) {
      fail(ErrorKind::config, key + " must be a number, got '" + v + "'");
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace vfc
