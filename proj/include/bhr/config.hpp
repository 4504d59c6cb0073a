#pragma once

// Sectioned key/value run configuration ([section] lines, key = value),
// with typed getters and flag overrides layered on top.

#include "bhr/common.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace bhr {

class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig parse(std::istream& is) {
    RunConfig cfg;
    std::string line, section = "run";
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        auto close = line.find(']');
        if (close == std::string::npos)
          throw std::runtime_error("config line " + std::to_string(lineno) + ": unterminated section");
        section = trim(line.substr(1, close - 1));
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
      cfg.values_[section][key] = value;
    }
    return cfg;
  }

  static RunConfig parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file: " + path);
    return parse(is);
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    values_[section][key] = value;
  }
  bool has(const std::string& section, const std::string& key) const {
    auto s = values_.find(section);
    return s != values_.end() && s->second.count(key) > 0;
  }
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback = "") const {
    auto s = values_.find(section);
    if (s == values_.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
  }
  double get_double(const std::string& section, const std::string& key, double fallback) const {
    std::string v = get(section, key);
    return v.empty() ? fallback : std::stod(v);
  }
  int get_int(const std::string& section, const std::string& key, int fallback) const {
    std::string v = get(section, key);
    return v.empty() ? fallback : std::stoi(v);
  }
  std::vector<double> get_doubles(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    std::istringstream ss(get(section, key));
    double v;
    while (ss >> v) out.push_back(v);
    return out;
  }
  std::vector<int> get_ints(const std::string& section, const std::string& key) const {
    std::vector<int> out;
    std::istringstream ss(get(section, key));
    int v;
    while (ss >> v) out.push_back(v);
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }
  std::map<std::string, std::map<std::string, std::string>> values_;
};

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : os_(path) {
    if (!os_) throw std::runtime_error("cannot open output file: " + path);
  }
  void header(const std::vector<std::string>& cols) {
    for (size_t i = 0; i < cols.size(); ++i) os_ << (i ? "," : "") << cols[i];
    os_ << "\n";
  }
  void row(const std::vector<double>& vals) {
    for (size_t i = 0; i < vals.size(); ++i) os_ << (i ? "," : "") << fmt_num(vals[i]);
    os_ << "\n";
  }

 private:
  std::ofstream os_;
};

}  // namespace bhr
