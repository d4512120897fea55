#include "singopt/toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace singopt::toml {

bool Value::as_bool() const {
  if (!is_bool()) throw std::runtime_error("toml: value is not a boolean");
  return std::get<bool>(v_);
}

std::int64_t Value::as_int() const {
  if (!is_int()) throw std::runtime_error("toml: value is not an integer");
  return std::get<std::int64_t>(v_);
}

double Value::as_double() const {
  if (is_int()) return static_cast<double>(std::get<std::int64_t>(v_));
  if (!is_float()) throw std::runtime_error("toml: value is not a number");
  return std::get<double>(v_);
}

const std::string& Value::as_string() const {
  if (!is_string()) throw std::runtime_error("toml: value is not a string");
  return std::get<std::string>(v_);
}

const Array& Value::as_array() const {
  if (!is_array()) throw std::runtime_error("toml: value is not an array");
  return std::get<Array>(v_);
}

Array& Value::as_array() {
  if (!is_array()) throw std::runtime_error("toml: value is not an array");
  return std::get<Array>(v_);
}

const Table& Value::as_table() const {
  if (!is_table()) throw std::runtime_error("toml: value is not a table");
  return std::get<Table>(v_);
}

Table& Value::as_table() {
  if (!is_table()) throw std::runtime_error("toml: value is not a table");
  return std::get<Table>(v_);
}

namespace {

struct Cursor {
  const std::string& s;
  size_t pos{0};
  int line;

  bool done() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }
  void skip_ws() {
    while (!done() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
};

[[noreturn]] void fail(int line, const std::string& what) { throw ParseError(line, what); }

std::string parse_basic_string(Cursor& c) {
  // opening quote already consumed
  std::string out;
  while (true) {
    if (c.done()) fail(c.line, "unterminated string");
    const char ch = c.s[c.pos++];
    if (ch == '"') return out;
    if (ch == '\\') {
      if (c.done()) fail(c.line, "bad escape");
      const char esc = c.s[c.pos++];
      switch (esc) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: fail(c.line, std::string("unsupported escape \\") + esc);
      }
    } else {
      out += ch;
    }
  }
}

Value parse_scalar(Cursor& c);

Value parse_array(Cursor& c) {
  // '[' already consumed
  Array arr;
  c.skip_ws();
  if (!c.done() && c.peek() == ']') {
    ++c.pos;
    return Value::of(std::move(arr));
  }
  while (true) {
    c.skip_ws();
    arr.push_back(parse_scalar(c));
    c.skip_ws();
    if (c.done()) fail(c.line, "unterminated array");
    const char ch = c.s[c.pos++];
    if (ch == ']') return Value::of(std::move(arr));
    if (ch != ',') fail(c.line, "expected ',' or ']' in array");
  }
}

Value parse_scalar(Cursor& c) {
  c.skip_ws();
  if (c.done()) fail(c.line, "missing value");
  const char ch = c.peek();
  if (ch == '"') {
    ++c.pos;
    return Value::of(parse_basic_string(c));
  }
  if (ch == '[') {
    ++c.pos;
    return parse_array(c);
  }
  size_t end = c.pos;
  while (end < c.s.size() && c.s[end] != ',' && c.s[end] != ']' && c.s[end] != '#') ++end;
  std::string tok = c.s.substr(c.pos, end - c.pos);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.pop_back();
  c.pos += tok.size();
  if (tok.empty()) fail(c.line, "missing value");
  if (tok == "true") return Value::of(true);
  if (tok == "false") return Value::of(false);
  const bool looks_float = tok.find_first_of(".eE") != std::string::npos ||
                           tok == "inf" || tok == "-inf" || tok == "nan";
  try {
    size_t used = 0;
    if (!looks_float) {
      const std::int64_t i = std::stoll(tok, &used);
      if (used == tok.size()) return Value::of(i);
    }
    const double d = std::stod(tok, &used);
    if (used == tok.size()) return Value::of(d);
  } catch (const std::exception&) {
  }
  fail(c.line, "cannot parse value '" + tok + "'");
}

std::string parse_key(Cursor& c) {
  c.skip_ws();
  if (c.done()) fail(c.line, "missing key");
  if (c.peek() == '"') {
    ++c.pos;
    return parse_basic_string(c);
  }
  size_t end = c.pos;
  while (end < c.s.size() &&
         (std::isalnum(static_cast<unsigned char>(c.s[end])) || c.s[end] == '_' ||
          c.s[end] == '-')) {
    ++end;
  }
  if (end == c.pos) fail(c.line, "bad key");
  std::string key = c.s.substr(c.pos, end - c.pos);
  c.pos = end;
  return key;
}

std::vector<std::string> split_dotted(const std::string& path, int line) {
  std::vector<std::string> parts;
  std::string cur;
  for (const char ch : path) {
    if (ch == '.') {
      if (cur.empty()) fail(line, "empty table-name component");
      parts.push_back(cur);
      cur.clear();
    } else if (ch == ' ' || ch == '\t') {
      continue;
    } else {
      cur += ch;
    }
  }
  if (cur.empty()) fail(line, "empty table-name component");
  parts.push_back(cur);
  return parts;
}

Table* descend(Table& root, const std::vector<std::string>& parts, bool array_of_tables,
               int line) {
  Table* t = &root;
  for (size_t i = 0; i < parts.size(); ++i) {
    const bool last = i + 1 == parts.size();
    auto it = t->find(parts[i]);
    if (last && array_of_tables) {
      if (it == t->end()) {
        it = t->emplace(parts[i], Value::of(Array{})).first;
      }
      if (!it->second.is_array()) fail(line, "'" + parts[i] + "' is not an array of tables");
      Array& arr = it->second.as_array();
      arr.push_back(Value::of(Table{}));
      return &arr.back().as_table();
    }
    if (it == t->end()) {
      it = t->emplace(parts[i], Value::of(Table{})).first;
    }
    if (it->second.is_array()) {
      // descend into the last element of an array of tables
      Array& arr = it->second.as_array();
      if (arr.empty() || !arr.back().is_table()) fail(line, "bad array-of-tables nesting");
      t = &arr.back().as_table();
    } else if (it->second.is_table()) {
      t = &it->second.as_table();
    } else {
      fail(line, "key '" + parts[i] + "' already holds a scalar");
    }
  }
  return t;
}

}  // namespace

Table parse(const std::string& text) {
  Table root;
  Table* current = &root;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    // strip comments outside strings
    std::string stripped;
    bool in_str = false;
    for (size_t i = 0; i < raw.size(); ++i) {
      const char ch = raw[i];
      if (ch == '"' && (i == 0 || raw[i - 1] != '\\')) in_str = !in_str;
      if (ch == '#' && !in_str) break;
      stripped += ch;
    }
    Cursor c{stripped, 0, line_no};
    c.skip_ws();
    if (c.done()) continue;

    if (c.peek() == '[') {
      ++c.pos;
      bool array_of_tables = false;
      if (!c.done() && c.peek() == '[') {
        ++c.pos;
        array_of_tables = true;
      }
      const size_t close = stripped.find(']', c.pos);
      if (close == std::string::npos) fail(line_no, "unterminated table header");
      const std::string name = stripped.substr(c.pos, close - c.pos);
      size_t after = close + 1;
      if (array_of_tables) {
        if (after >= stripped.size() || stripped[after] != ']') {
          fail(line_no, "expected ']]' for array of tables");
        }
        ++after;
      }
      for (size_t i = after; i < stripped.size(); ++i) {
        if (stripped[i] != ' ' && stripped[i] != '\t') fail(line_no, "trailing characters after header");
      }
      current = descend(root, split_dotted(name, line_no), array_of_tables, line_no);
      continue;
    }

    const std::string key = parse_key(c);
    c.skip_ws();
    if (c.done() || c.peek() != '=') fail(line_no, "expected '=' after key '" + key + "'");
    ++c.pos;
    Value v = parse_scalar(c);
    c.skip_ws();
    if (!c.done()) fail(line_no, "trailing characters after value for key '" + key + "'");
    if (current->count(key)) fail(line_no, "duplicate key '" + key + "'");
    current->emplace(key, std::move(v));
  }
  return root;
}

Table parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("toml: cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace singopt::toml
