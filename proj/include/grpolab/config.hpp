#ifndef GRPOLAB_CONFIG_HPP_
#define GRPOLAB_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace grpolab {

// Plain key = value configuration with '#' comments. Every key can be
// overridden through the environment: key `train.epochs` maps to variable
// `GRPOLAB_TRAIN__EPOCHS` (uppercase, dots doubled to underscores).
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_text(const std::string& text,
                                   const std::string& origin = "<inline>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback)
      const;

  void set(const std::string& key, const std::string& value);

  // Command-line overrides outrank both the file and the environment.
  void set_override(const std::string& key, const std::string& value);

  // Canonical sorted key=value dump of the resolved configuration (file
  // values, environment overrides, command-line overrides).
  std::string canonical_dump() const;

  static std::string env_var_name(const std::string& key);

 private:
  // Resolution order: command-line override, environment variable, file.
  bool lookup(const std::string& key, std::string* value) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> overrides_;
};

}  // namespace grpolab

#endif  // GRPOLAB_CONFIG_HPP_
