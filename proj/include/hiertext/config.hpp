#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hiertext::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key/value file with [section] headers. '#' starts a comment,
// whitespace around keys and values is trimmed.
struct Config {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
  }

  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const {
    auto s = sections.find(section);
    if (s == sections.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
  }

  template <typename T>
  T get_num(const std::string& section, const std::string& key, T fallback) const {
    const std::string raw = get(section, key, "");
    if (raw.empty()) return fallback;
    std::istringstream ss(raw);
    T value;
    ss >> value;
    if (ss.fail() || !ss.eof())
      throw ConfigError("[" + section + "] " + key + ": not a number: '" + raw + "'");
    return value;
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const std::string raw = get(section, key, "");
    if (raw.empty()) return fallback;
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw ConfigError("[" + section + "] " + key + ": not a boolean: '" + raw + "'");
  }
};

namespace detail {
inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace detail

inline Config parse_config(std::istream& in, const std::string& origin = "<config>") {
  Config cfg;
  std::string section;
  std::string line;
  size_t line_no = 0;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back(origin + ":" + std::to_string(line_no) + ": malformed section");
        continue;
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      cfg.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(origin + ":" + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) {
      problems.push_back(origin + ":" + std::to_string(line_no) + ": empty key");
      continue;
    }
    cfg.sections[section][key] = value;
  }
  if (!problems.empty()) {
    std::string all;
    for (const auto& p : problems) all += (all.empty() ? "" : "; ") + p;
    throw ConfigError(all);
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in, path);
}

// Rejects unknown sections/keys; every violation is reported in one error.
inline void validate_schema(const Config& cfg,
                            const std::map<std::string, std::set<std::string>>& schema) {
  std::vector<std::string> problems;
  for (const auto& [section, kv] : cfg.sections) {
    auto s = schema.find(section);
    if (s == schema.end()) {
      problems.push_back("unknown section [" + section + "]");
      continue;
    }
    for (const auto& [key, _] : kv)
      if (!s->second.count(key))
        problems.push_back("unknown key '" + key + "' in section [" + section + "]");
  }
  if (!problems.empty()) {
    std::string all;
    for (const auto& p : problems) all += (all.empty() ? "" : "; ") + p;
    throw ConfigError(all);
  }
}

}  // namespace hiertext::config
