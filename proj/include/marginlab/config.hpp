#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace marginlab {

// Flat key = value configuration with optional [section] headers. Sections
// are organizational only; keys live in one global namespace and duplicates
// are rejected. '#' starts a comment.
class Config {
 public:
  static Config parse(std::istream& in) {
    Config cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view v = trim(line);
      if (v.empty() || v.front() == '#') continue;
      if (v.front() == '[') {
        if (v.back() != ']')
          throw std::invalid_argument("config line " + std::to_string(lineno) +
                                      ": malformed section header");
        continue;  // section names carry no meaning
      }
      const auto eq = v.find('=');
      if (eq == std::string_view::npos)
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": expected key = value");
      const std::string key(trim(v.substr(0, eq)));
      const std::string value(trim(v.substr(eq + 1)));
      if (key.empty())
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
      if (cfg.values_.count(key))
        throw std::invalid_argument("config: duplicate key '" + key + "'");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::string& get(const std::string& key) const { return values_.at(key); }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  const std::map<std::string, std::string>& entries() const { return values_; }

  // Canonical text: sorted "key=value" lines. The config hash is a pure
  // function of this text.
  std::string canonical_text() const {
    std::string out;
    for (const auto& [k, v] : values_) {
      out += k;
      out += '=';
      out += v;
      out += '\n';
    }
    return out;
  }

 private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
  }

  std::map<std::string, std::string> values_;  // sorted: canonical order
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const Config& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg.canonical_text())));
  return buf;
}

}  // namespace marginlab
