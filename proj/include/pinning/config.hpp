#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinning {

/// Flat key = value configuration file. '#' starts a comment, blank lines
/// are skipped, keys are unique (last wins). List values are comma
/// separated; "a:b:n" expands to n evenly spaced numbers from a to b.
class ConfigMap {
 public:
  ConfigMap() = default;

  static ConfigMap parse(std::istream& is) {
    ConfigMap c;
    std::string line;
    while (std::getline(is, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw std::runtime_error("config: empty key");
      c.kv_[key] = value;
    }
    return c;
  }

  static ConfigMap parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    return parse(is);
  }

  static ConfigMap parse_string(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string str(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw std::runtime_error("config: missing key '" + key + "'");
    return it->second;
  }
  std::string str_or(const std::string& key, const std::string& def) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? def : it->second;
  }

  double number(const std::string& key) const { return to_number(str(key), key); }
  double number_or(const std::string& key, double def) const {
    return has(key) ? number(key) : def;
  }
  long long integer(const std::string& key) const {
    return static_cast<long long>(std::llround(number(key)));
  }
  long long integer_or(const std::string& key, long long def) const {
    return has(key) ? integer(key) : def;
  }
  bool flag_or(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const std::string v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config: bad boolean for '" + key + "'");
  }

  std::vector<double> numbers(const std::string& key) const {
    const std::string v = str(key);
    std::vector<double> out;
    // linspace shorthand a:b:n
    if (std::count(v.begin(), v.end(), ':') == 2) {
      double a, b;
      int n;
      char c1, c2;
      std::istringstream ss(v);
      if (ss >> a >> c1 >> b >> c2 >> n && c1 == ':' && c2 == ':' && n >= 1) {
        for (int i = 0; i < n; ++i)
          out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
        return out;
      }
      throw std::runtime_error("config: bad range for '" + key + "'");
    }
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_number(trim(item), key));
    if (out.empty()) throw std::runtime_error("config: empty list for '" + key + "'");
    return out;
  }

  std::vector<std::string> strings(const std::string& key) const {
    std::istringstream ss(str(key));
    std::vector<std::string> out;
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
  }

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  /// Sorted key=value lines; the byte content that gets hashed.
  std::string canonical() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv_) os << k << '=' << v << '\n';
    return os.str();
  }

  /// FNV-1a over the canonical form.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : canonical()) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    return h;
  }

  std::string hash_hex() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
  }

 private:
  std::map<std::string, std::string> kv_;

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  }

  static double to_number(const std::string& s, const std::string& key) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw std::runtime_error("config: bad number for '" + key + "'");
    return v;
  }
};

}  // namespace pinning
