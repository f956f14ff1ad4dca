#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lsmc/types.hpp"

// Reader for the TOML subset the run configs use: comments, [tables], and
// key = value lines holding strings, integers, floats, booleans, or
// single-line homogeneous arrays of those.  Multi-line values, dates,
// nested tables-in-arrays, and digit underscores are out of scope and
// rejected with a line number.

namespace lsmc {

struct TomlValue {
  enum class Kind { boolean, integer, floating, string, array };
  Kind kind = Kind::string;
  bool b = false;
  std::int64_t i = 0;
  double d = 0.0;
  std::string s;
  std::vector<TomlValue> array;
};

class TomlTable {
 public:
  static TomlTable parse_file(const std::string& path);
  static TomlTable parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;

  /// Keys actually present, dotted ("section.key"), in file order.
  const std::vector<std::string>& keys() const { return order_; }

  bool get_bool(const std::string& key, bool fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  std::string require_string(const std::string& key) const;

  std::vector<double> get_double_array(const std::string& key) const;       // empty when absent
  std::vector<std::int64_t> get_int_array(const std::string& key) const;    // empty when absent
  std::vector<std::string> get_string_array(const std::string& key) const;  // empty when absent

 private:
  const TomlValue* find(const std::string& key) const;
  const TomlValue& require(const std::string& key) const;

  std::string origin_;
  std::map<std::string, TomlValue> values_;
  std::vector<std::string> order_;
};

}  // namespace lsmc
