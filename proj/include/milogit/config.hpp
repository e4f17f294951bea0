#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "milogit/error.hpp"

namespace milogit {

// Flat key-value config grammar shared by schema files and study configs:
//   one "key = value" pair per line; '#' starts a comment; blank lines are
//   ignored; list values are separated by commas and/or whitespace; keys are
//   unique.
class KvConfig {
public:
  void add(const std::string& key, const std::string& value, const std::string& origin) {
    if (map_.count(key))
      throw error("bad_config", origin + ": duplicate key '" + key + "'");
    map_.emplace(key, value);
    order_.push_back(key);
  }

  bool has(const std::string& key) const { return map_.count(key) != 0; }

  const std::string& get(const std::string& key) const {
    auto it = map_.find(key);
    if (it == map_.end()) throw error("bad_config", "missing config key '" + key + "'");
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& def) const {
    auto it = map_.find(key);
    return it == map_.end() ? def : it->second;
  }

  std::vector<std::string> list(const std::string& key) const {
    return split_list(get(key));
  }

  std::vector<std::string> list_or(const std::string& key) const {
    auto it = map_.find(key);
    return it == map_.end() ? std::vector<std::string>{} : split_list(it->second);
  }

  double num(const std::string& key) const { return parse_num(get(key), key); }

  long integer(const std::string& key) const {
    double v = num(key);
    long n = static_cast<long>(v);
    if (static_cast<double>(n) != v)
      throw error("bad_config", "config key '" + key + "' must be an integer");
    return n;
  }

  long integer_or(const std::string& key, long def) const {
    return has(key) ? integer(key) : def;
  }

  std::vector<double> num_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : list(key)) out.push_back(parse_num(tok, key));
    return out;
  }

  const std::vector<std::string>& keys() const { return order_; }

  static std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : value) {
      if (c == ',' || c == ' ' || c == '\t') {
        if (!cur.empty()) out.push_back(cur), cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  }

private:
  static double parse_num(const std::string& tok, const std::string& key) {
    const char* s = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
      throw error("bad_config", "config key '" + key + "': '" + tok + "' is not a number");
    return v;
  }

  std::unordered_map<std::string, std::string> map_;
  std::vector<std::string> order_;
};

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline KvConfig parse_kv_text(const std::string& text, const std::string& origin) {
  KvConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw error("bad_config",
                  origin + " line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw error("bad_config", origin + " line " + std::to_string(lineno) + ": empty key");
    cfg.add(key, value, origin);
  }
  return cfg;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("io", "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline KvConfig parse_kv_file(const std::string& path) {
  return parse_kv_text(read_file(path), path);
}

// FNV-1a 64 over raw bytes; used for the config-hash provenance line.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace milogit
