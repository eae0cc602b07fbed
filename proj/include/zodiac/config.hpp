#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace zodiac {

// Flat key-value run configuration. One `key = value` pair per line, dotted
// keys for grouping (`estimator.n_c = 1`), `#` starts a comment. Values are
// kept as strings until a typed getter asks for them; getters throw with the
// offending key in the message.
class Config {
 public:
  Config() = default;

  static Config parse_string(const std::string& text,
                             const std::string& origin = "<string>");
  static Config parse_file(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  // "key=value" convenience for command-line overrides.
  void set_pair(const std::string& assignment);

  std::string get_string(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::uint64_t get_uint64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_uint64(const std::string& key,
                           std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  // Keys present in the file that no getter ever touched: typo detection.
  std::vector<std::string> unused_keys() const;

  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> accessed_;
};

}  // namespace zodiac
