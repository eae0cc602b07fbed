#include "zodiac/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace zodiac {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text,
                            const std::string& origin) {
  Config config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << "config " << origin << ":" << line_no
          << ": expected `key = value`, got `" << line << "`";
      throw std::runtime_error(msg.str());
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      std::ostringstream msg;
      msg << "config " << origin << ":" << line_no << ": empty key";
      throw std::runtime_error(msg.str());
    }
    config.values_[key] = value;
  }
  return config;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("config: cannot open file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

bool Config::has(const std::string& key) const {
  return values_.count(key) != 0;
}

void Config::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

void Config::set_pair(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::runtime_error("config override `" + assignment +
                             "` is not of the form key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty())
    throw std::runtime_error("config override `" + assignment +
                             "` has an empty key");
  values_[key] = trim(assignment.substr(eq + 1));
}

std::string Config::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw std::runtime_error("config: missing required key `" + key + "`");
  accessed_.insert(key);
  return it->second;
}

long long Config::get_int(const std::string& key) const {
  const std::string raw = get_string(key);
  try {
    size_t used = 0;
    const long long value = std::stoll(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return value;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key `" + key + "` has non-integer value `" +
                             raw + "`");
  }
}

std::uint64_t Config::get_uint64(const std::string& key) const {
  const std::string raw = get_string(key);
  try {
    size_t used = 0;
    const std::uint64_t value = std::stoull(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return value;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key `" + key +
                             "` has non-unsigned-integer value `" + raw + "`");
  }
}

double Config::get_double(const std::string& key) const {
  const std::string raw = get_string(key);
  try {
    size_t used = 0;
    const double value = std::stod(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return value;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key `" + key + "` has non-numeric value `" +
                             raw + "`");
  }
}

bool Config::get_bool(const std::string& key) const {
  const std::string raw = get_string(key);
  if (raw == "true" || raw == "1") return true;
  if (raw == "false" || raw == "0") return false;
  throw std::runtime_error("config: key `" + key +
                           "` must be true/false/1/0, got `" + raw + "`");
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_uint64(const std::string& key,
                                 std::uint64_t fallback) const {
  return has(key) ? get_uint64(key) : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::optional<double> Config::get_optional_double(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return get_double(key);
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> unused;
  for (const auto& [key, value] : values_)
    if (accessed_.count(key) == 0) unused.push_back(key);
  return unused;
}

std::string Config::serialize() const {
  std::ostringstream out;
  for (const auto& [key, value] : values_) out << key << " = " << value << '\n';
  return out.str();
}

}  // namespace zodiac
