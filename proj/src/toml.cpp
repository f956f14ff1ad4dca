#include "lsmc/toml.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lsmc {

namespace {

[[noreturn]] void fail(const std::string& origin, std::size_t line, const std::string& msg) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// drop a trailing # comment, ignoring # inside quotes
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (const char c : key)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
      return false;
  return true;
}

std::string parse_quoted(const std::string& text, std::size_t& pos, const std::string& origin,
                         std::size_t line) {
  std::string out;
  ++pos;  // opening quote
  while (pos < text.size() && text[pos] != '"') {
    char c = text[pos];
    if (c == '\\') {
      ++pos;
      if (pos >= text.size()) fail(origin, line, "dangling escape in string");
      switch (text[pos]) {
        case 'n': c = '\n'; break;
        case 't': c = '\t'; break;
        case 'r': c = '\r'; break;
        case '"': c = '"'; break;
        case '\\': c = '\\'; break;
        default: fail(origin, line, "unsupported escape in string");
      }
    }
    out.push_back(c);
    ++pos;
  }
  if (pos >= text.size()) fail(origin, line, "unterminated string");
  ++pos;  // closing quote
  return out;
}

TomlValue parse_scalar(const std::string& token, const std::string& origin, std::size_t line) {
  TomlValue v;
  if (token == "true" || token == "false") {
    v.kind = TomlValue::Kind::boolean;
    v.b = token == "true";
    return v;
  }
  const bool looks_float = token.find_first_of(".eE") != std::string::npos;
  if (!looks_float) {
    errno = 0;
    char* end = nullptr;
    const long long i = std::strtoll(token.c_str(), &end, 10);
    if (end != token.c_str() && *end == '\0' && errno == 0) {
      v.kind = TomlValue::Kind::integer;
      v.i = i;
      return v;
    }
  }
  char* end = nullptr;
  const double d = std::strtod(token.c_str(), &end);
  if (end != token.c_str() && *end == '\0' && std::isfinite(d)) {
    v.kind = TomlValue::Kind::floating;
    v.d = d;
    return v;
  }
  fail(origin, line, "cannot parse value '" + token + "'");
}

TomlValue parse_value(const std::string& text, const std::string& origin, std::size_t line);

TomlValue parse_array(const std::string& text, const std::string& origin, std::size_t line) {
  TomlValue v;
  v.kind = TomlValue::Kind::array;
  std::string inner = trim(text.substr(1, text.size() - 2));
  if (inner.empty()) return v;

  std::vector<std::string> elems;
  std::string cur;
  bool quoted = false;
  int depth = 0;
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const char c = inner[i];
    if (c == '"' && (i == 0 || inner[i - 1] != '\\')) quoted = !quoted;
    if (!quoted && c == '[') ++depth;
    if (!quoted && c == ']') --depth;
    if (!quoted && depth == 0 && c == ',') {
      elems.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty()) elems.push_back(trim(cur));
  for (const auto& e : elems) {
    if (e.empty()) fail(origin, line, "empty array element");
    v.array.push_back(parse_value(e, origin, line));
  }
  for (std::size_t i = 1; i < v.array.size(); ++i) {
    auto numeric = [](TomlValue::Kind k) {
      return k == TomlValue::Kind::integer || k == TomlValue::Kind::floating;
    };
    if (v.array[i].kind != v.array[0].kind &&
        !(numeric(v.array[i].kind) && numeric(v.array[0].kind)))
      fail(origin, line, "arrays must be homogeneous");
  }
  return v;
}

TomlValue parse_value(const std::string& text, const std::string& origin, std::size_t line) {
  if (text.empty()) fail(origin, line, "missing value");
  if (text.front() == '"') {
    std::size_t pos = 0;
    TomlValue v;
    v.kind = TomlValue::Kind::string;
    v.s = parse_quoted(text, pos, origin, line);
    if (trim(text.substr(pos)).size() != 0) fail(origin, line, "trailing text after string");
    return v;
  }
  if (text.front() == '[') {
    if (text.back() != ']') fail(origin, line, "arrays must close on the same line");
    return parse_array(text, origin, line);
  }
  return parse_scalar(text, origin, line);
}

}  // namespace

TomlTable TomlTable::parse_string(const std::string& text, const std::string& origin) {
  TomlTable table;
  table.origin_ = origin;
  std::istringstream in(text);
  std::string raw, section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "malformed table header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section)) fail(origin, line_no, "malformed table name '" + section + "'");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) fail(origin, line_no, "malformed key '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (table.values_.count(full)) fail(origin, line_no, "duplicate key '" + full + "'");
    table.values_[full] = parse_value(trim(line.substr(eq + 1)), origin, line_no);
    table.order_.push_back(full);
  }
  return table;
}

TomlTable TomlTable::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

bool TomlTable::has(const std::string& key) const { return values_.count(key) != 0; }

const TomlValue* TomlTable::find(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

const TomlValue& TomlTable::require(const std::string& key) const {
  const TomlValue* v = find(key);
  if (!v) throw ConfigError(origin_ + ": missing required key '" + key + "'");
  return *v;
}

namespace {

double as_double(const TomlValue& v, const std::string& key) {
  if (v.kind == TomlValue::Kind::floating) return v.d;
  if (v.kind == TomlValue::Kind::integer) return static_cast<double>(v.i);
  throw ConfigError("config: key '" + key + "' must be a number");
}

std::int64_t as_int(const TomlValue& v, const std::string& key) {
  if (v.kind == TomlValue::Kind::integer) return v.i;
  if (v.kind == TomlValue::Kind::floating && v.d == std::floor(v.d) && std::abs(v.d) < 9e15)
    return static_cast<std::int64_t>(v.d);
  throw ConfigError("config: key '" + key + "' must be an integer");
}

}  // namespace

bool TomlTable::get_bool(const std::string& key, bool fallback) const {
  const TomlValue* v = find(key);
  if (!v) return fallback;
  if (v->kind != TomlValue::Kind::boolean)
    throw ConfigError("config: key '" + key + "' must be a boolean");
  return v->b;
}

std::int64_t TomlTable::get_int(const std::string& key, std::int64_t fallback) const {
  const TomlValue* v = find(key);
  return v ? as_int(*v, key) : fallback;
}

double TomlTable::get_double(const std::string& key, double fallback) const {
  const TomlValue* v = find(key);
  return v ? as_double(*v, key) : fallback;
}

std::string TomlTable::get_string(const std::string& key, const std::string& fallback) const {
  const TomlValue* v = find(key);
  if (!v) return fallback;
  if (v->kind != TomlValue::Kind::string)
    throw ConfigError("config: key '" + key + "' must be a string");
  return v->s;
}

std::string TomlTable::require_string(const std::string& key) const {
  const TomlValue& v = require(key);
  if (v.kind != TomlValue::Kind::string)
    throw ConfigError("config: key '" + key + "' must be a string");
  return v.s;
}

std::vector<double> TomlTable::get_double_array(const std::string& key) const {
  const TomlValue* v = find(key);
  if (!v) return {};
  if (v->kind != TomlValue::Kind::array)
    throw ConfigError("config: key '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v->array) out.push_back(as_double(e, key));
  return out;
}

std::vector<std::int64_t> TomlTable::get_int_array(const std::string& key) const {
  const TomlValue* v = find(key);
  if (!v) return {};
  if (v->kind != TomlValue::Kind::array)
    throw ConfigError("config: key '" + key + "' must be an array");
  std::vector<std::int64_t> out;
  for (const auto& e : v->array) out.push_back(as_int(e, key));
  return out;
}

std::vector<std::string> TomlTable::get_string_array(const std::string& key) const {
  const TomlValue* v = find(key);
  if (!v) return {};
  if (v->kind != TomlValue::Kind::array)
    throw ConfigError("config: key '" + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& e : v->array) {
    if (e.kind != TomlValue::Kind::string)
      throw ConfigError("config: key '" + key + "' must be an array of strings");
    out.push_back(e.s);
  }
  return out;
}

}  // namespace lsmc
