#include "grpolab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

#include "grpolab/csv.hpp"
#include "grpolab/errors.hpp"

namespace grpolab {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) {
    ++begin;
  }
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) {
    --end;
  }
  return s.substr(begin, end - begin);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  return parse_text(read_text_file(path), path);
}

KeyValueConfig KeyValueConfig::parse_text(const std::string& text,
                                          const std::string& origin) {
  KeyValueConfig config;
  std::istringstream lines(text);
  std::string line;
  long line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const std::size_t comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected key = value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": empty key");
    }
    config.values_[key] = value;
  }
  return config;
}

std::string KeyValueConfig::env_var_name(const std::string& key) {
  std::string name = "GRPOLAB_";
  for (char c : key) {
    if (c == '.') {
      name += "__";
    } else {
      name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
  }
  return name;
}

bool KeyValueConfig::lookup(const std::string& key, std::string* value) const {
  const auto override_it = overrides_.find(key);
  if (override_it != overrides_.end()) {
    *value = override_it->second;
    return true;
  }
  if (const char* env = std::getenv(env_var_name(key).c_str())) {
    *value = env;
    return true;
  }
  const auto it = values_.find(key);
  if (it == values_.end()) return false;
  *value = it->second;
  return true;
}

bool KeyValueConfig::has(const std::string& key) const {
  std::string ignored;
  return lookup(key, &ignored);
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  std::string value;
  return lookup(key, &value) ? value : fallback;
}

double KeyValueConfig::get_double(const std::string& key,
                                  double fallback) const {
  std::string value;
  if (!lookup(key, &value)) return fallback;
  try {
    std::size_t consumed = 0;
    const double parsed = std::stod(value, &consumed);
    if (consumed != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + value +
                      "' as a number");
  }
}

long KeyValueConfig::get_long(const std::string& key, long fallback) const {
  std::string value;
  if (!lookup(key, &value)) return fallback;
  try {
    std::size_t consumed = 0;
    const long parsed = std::stol(value, &consumed);
    if (consumed != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + value +
                      "' as an integer");
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  std::string value;
  if (!lookup(key, &value)) return fallback;
  std::string lower = value;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  if (lower == "true" || lower == "1" || lower == "yes" || lower == "on") {
    return true;
  }
  if (lower == "false" || lower == "0" || lower == "no" || lower == "off") {
    return false;
  }
  throw ConfigError("key '" + key + "': cannot parse '" + value +
                    "' as a boolean");
}

std::vector<std::string> KeyValueConfig::get_list(
    const std::string& key, const std::vector<std::string>& fallback) const {
  std::string value;
  if (!lookup(key, &value)) return fallback;
  std::vector<std::string> items;
  std::istringstream parts(value);
  std::string item;
  while (std::getline(parts, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

void KeyValueConfig::set_override(const std::string& key,
                                  const std::string& value) {
  overrides_[key] = value;
}

std::string KeyValueConfig::canonical_dump() const {
  std::map<std::string, std::string> resolved;
  for (const auto& [key, value] : values_) resolved[key] = value;
  for (const auto& [key, value] : overrides_) resolved[key] = value;
  std::string dump;
  for (auto& [key, value] : resolved) {
    lookup(key, &value);
    dump += key;
    dump += '=';
    dump += value;
    dump += '\n';
  }
  return dump;
}

}  // namespace grpolab
