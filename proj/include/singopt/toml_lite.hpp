#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace singopt::toml {

// Strict subset of TOML sufficient for experiment configs: bare/quoted keys,
// [table] and [[array-of-table]] headers, booleans, integers, floats, basic
// strings, and single-line arrays.

class Value;
using Array = std::vector<Value>;
using Table = std::map<std::string, Value>;

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_, const std::string& what)
      : std::runtime_error("toml: line " + std::to_string(line_) + ": " + what), line(line_) {}
};

class Value {
 public:
  using Storage = std::variant<bool, std::int64_t, double, std::string, Array, Table>;

  Value() : v_(false) {}
  explicit Value(Storage v) : v_(std::move(v)) {}
  static Value of(bool b) { return Value{Storage{b}}; }
  static Value of(std::int64_t i) { return Value{Storage{i}}; }
  static Value of(double d) { return Value{Storage{d}}; }
  static Value of(std::string s) { return Value{Storage{std::move(s)}}; }
  static Value of(Array a) { return Value{Storage{std::move(a)}}; }
  static Value of(Table t) { return Value{Storage{std::move(t)}}; }

  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_float() const { return std::holds_alternative<double>(v_); }
  bool is_number() const { return is_int() || is_float(); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_array() const { return std::holds_alternative<Array>(v_); }
  bool is_table() const { return std::holds_alternative<Table>(v_); }

  bool as_bool() const;
  std::int64_t as_int() const;
  double as_double() const;  // accepts integers
  const std::string& as_string() const;
  const Array& as_array() const;
  Array& as_array();
  const Table& as_table() const;
  Table& as_table();

 private:
  Storage v_;
};

Table parse(const std::string& text);
Table parse_file(const std::string& path);

}  // namespace singopt::toml
