#pragma once

// Flat "dotted.key = number" configuration files.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tms/errors.hpp"

namespace tms {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class FlatConfig {
 public:
  FlatConfig() = default;

  static FlatConfig parse(std::string_view text, std::string_view origin = "<string>") {
    FlatConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
      }
      const auto key = trim(trimmed.substr(0, eq));
      const auto value = trim(trimmed.substr(eq + 1));
      if (key.empty() || value.empty()) {
        throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) +
                          ": empty key or value");
      }
      char* end = nullptr;
      const double v = std::strtod(value.c_str(), &end);
      if (end == value.c_str() || *end != '\0') {
        throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) +
                          ": value for '" + key + "' is not a number: " + value);
      }
      cfg.values_[key] = v;
    }
    return cfg;
  }

  static FlatConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
  }

  bool contains(const std::string& key) const { return values_.count(key) != 0; }

  double get(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config entry: " + key);
    return it->second;
  }

  void set(const std::string& key, double value) { values_[key] = value; }

  /// Layers `other` on top of this config.
  void merge(const FlatConfig& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
  }

  /// Overrides keys from environment variables named
  /// `<prefix><KEY>` with dots mapped to underscores and letters upper-cased,
  /// e.g. prefix "TMS_" and key "sensor.bias_c" reads TMS_SENSOR_BIAS_C.
  void apply_env(std::string_view prefix, const std::vector<std::string>& keys) {
    for (const auto& key : keys) {
      const auto name = env_name(prefix, key);
      if (const char* raw = std::getenv(name.c_str())) {
        char* end = nullptr;
        const double v = std::strtod(raw, &end);
        if (end == raw || *end != '\0') {
          throw ConfigError("environment variable " + name + " is not a number: " + raw);
        }
        values_[key] = v;
      }
    }
  }

  static std::string env_name(std::string_view prefix, std::string_view key) {
    std::string name(prefix);
    for (char c : key) {
      name += (c == '.') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return name;
  }

  const std::map<std::string, double>& values() const { return values_; }

  /// Sorted "key = value" lines; stable input for hashing.
  std::string canonical_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + format_double(v) + "\n";
    return out;
  }

  std::uint64_t hash() const { return fnv1a(canonical_text()); }

 private:
  static std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
  }

  std::map<std::string, double> values_;
};

}  // namespace tms
