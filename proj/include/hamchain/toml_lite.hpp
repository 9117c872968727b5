#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hamchain::toml_lite {

// Small TOML subset: [section] headers, key = value pairs, # comments,
// basic strings, integers, floats, booleans and single-line arrays.
// Covers what the experiment configs need; anything else is a parse error.

struct Value {
  enum class Kind { Bool, Int, Float, String, Array } kind = Kind::Int;
  bool b = false;
  int64_t i = 0;
  double d = 0.0;
  std::string s;
  std::vector<Value> arr;

  double as_double() const;  // Int or Float
  int64_t as_int() const;
};

using Table = std::map<std::string, Value>;

struct Document {
  Table root;                             // keys before any [section]
  std::map<std::string, Table> sections;  // section name -> table

  bool has(const std::string& section, const std::string& key) const;
  const Value* find(const std::string& section, const std::string& key) const;

  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int64_t get_int(const std::string& section, const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::vector<double> get_double_array(const std::string& section, const std::string& key,
                                       const std::vector<double>& fallback) const;
  std::vector<int64_t> get_int_array(const std::string& section, const std::string& key,
                                     const std::vector<int64_t>& fallback) const;
};

Document parse_string(const std::string& text);
Document parse_file(const std::string& path);

}  // namespace hamchain::toml_lite
