#include "hamchain/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hamchain/errors.hpp"

namespace hamchain::toml_lite {

double Value::as_double() const {
  if (kind == Kind::Float) return d;
  if (kind == Kind::Int) return static_cast<double>(i);
  throw ConfigError("toml: value is not a number");
}

int64_t Value::as_int() const {
  if (kind == Kind::Int) return i;
  throw ConfigError("toml: value is not an integer");
}

namespace {

struct Cursor {
  const std::string& text;
  size_t pos = 0;
  int line = 1;

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char next() {
    char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }
  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("toml parse error at line " + std::to_string(line) + ": " + what);
  }
};

std::string parse_bare_or_quoted_key(Cursor& c) {
  c.skip_ws();
  std::string out;
  if (!c.eof() && c.peek() == '"') {
    c.next();
    while (!c.eof() && c.peek() != '"') out.push_back(c.next());
    if (c.eof()) c.fail("unterminated quoted key");
    c.next();
    return out;
  }
  while (!c.eof()) {
    char ch = c.peek();
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.') {
      out.push_back(c.next());
    } else {
      break;
    }
  }
  if (out.empty()) c.fail("expected key");
  return out;
}

Value parse_value(Cursor& c);

Value parse_array(Cursor& c) {
  Value v;
  v.kind = Value::Kind::Array;
  c.next();  // consume [
  for (;;) {
    c.skip_ws();
    if (c.eof()) c.fail("unterminated array");
    if (c.peek() == ']') {
      c.next();
      return v;
    }
    v.arr.push_back(parse_value(c));
    c.skip_ws();
    if (c.eof()) c.fail("unterminated array");
    if (c.peek() == ',') {
      c.next();
      continue;
    }
    if (c.peek() == ']') {
      c.next();
      return v;
    }
    c.fail("expected ',' or ']' in array");
  }
}

Value parse_string_value(Cursor& c) {
  Value v;
  v.kind = Value::Kind::String;
  c.next();  // consume "
  while (!c.eof() && c.peek() != '"') {
    char ch = c.next();
    if (ch == '\\') {
      if (c.eof()) c.fail("dangling escape");
      char e = c.next();
      switch (e) {
        case 'n': v.s.push_back('\n'); break;
        case 't': v.s.push_back('\t'); break;
        case '"': v.s.push_back('"'); break;
        case '\\': v.s.push_back('\\'); break;
        default: c.fail("unsupported escape");
      }
    } else if (ch == '\n') {
      c.fail("newline in basic string");
    } else {
      v.s.push_back(ch);
    }
  }
  if (c.eof()) c.fail("unterminated string");
  c.next();
  return v;
}

Value parse_number(Cursor& c) {
  std::string tok;
  while (!c.eof()) {
    char ch = c.peek();
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '+' || ch == '-' || ch == '.' ||
        ch == 'e' || ch == 'E' || ch == '_' || ch == 'x' || std::isxdigit(static_cast<unsigned char>(ch))) {
      tok.push_back(c.next());
    } else {
      break;
    }
  }
  if (tok.empty()) c.fail("expected value");
  std::string clean;
  for (char ch : tok)
    if (ch != '_') clean.push_back(ch);
  bool is_float = clean.find('.') != std::string::npos ||
                  clean.find('e') != std::string::npos || clean.find('E') != std::string::npos;
  Value v;
  if (is_float) {
    v.kind = Value::Kind::Float;
    char* end = nullptr;
    v.d = std::strtod(clean.c_str(), &end);
    if (end == clean.c_str() || *end != '\0') c.fail("bad float '" + clean + "'");
  } else {
    v.kind = Value::Kind::Int;
    int64_t out = 0;
    auto [p, ec] = std::from_chars(clean.data(), clean.data() + clean.size(), out);
    if (ec != std::errc() || p != clean.data() + clean.size()) c.fail("bad integer '" + clean + "'");
    v.i = out;
  }
  return v;
}

Value parse_value(Cursor& c) {
  c.skip_ws();
  if (c.eof()) c.fail("expected value");
  char ch = c.peek();
  if (ch == '[') return parse_array(c);
  if (ch == '"') return parse_string_value(c);
  if (std::isalpha(static_cast<unsigned char>(ch))) {
    std::string word;
    while (!c.eof() && std::isalpha(static_cast<unsigned char>(c.peek()))) word.push_back(c.next());
    Value v;
    v.kind = Value::Kind::Bool;
    if (word == "true") {
      v.b = true;
      return v;
    }
    if (word == "false") {
      v.b = false;
      return v;
    }
    c.fail("unexpected token '" + word + "'");
  }
  return parse_number(c);
}

void skip_comment_and_eol(Cursor& c) {
  c.skip_ws();
  if (c.eof()) return;
  if (c.peek() == '#') {
    while (!c.eof() && c.peek() != '\n') c.next();
  }
  if (!c.eof()) {
    if (c.peek() != '\n' && c.peek() != '\r') c.fail("trailing characters after value");
    while (!c.eof() && (c.peek() == '\n' || c.peek() == '\r')) c.next();
  }
}

}  // namespace

Document parse_string(const std::string& text) {
  Document doc;
  Cursor c{text};
  std::string current;  // empty = root
  while (!c.eof()) {
    c.skip_ws();
    if (c.eof()) break;
    char ch = c.peek();
    if (ch == '\n' || ch == '\r') {
      c.next();
      continue;
    }
    if (ch == '#') {
      while (!c.eof() && c.peek() != '\n') c.next();
      continue;
    }
    if (ch == '[') {
      c.next();
      std::string name;
      while (!c.eof() && c.peek() != ']') name.push_back(c.next());
      if (c.eof()) c.fail("unterminated section header");
      c.next();
      if (name.empty()) c.fail("empty section name");
      current = name;
      doc.sections.emplace(current, Table{});
      skip_comment_and_eol(c);
      continue;
    }
    std::string key = parse_bare_or_quoted_key(c);
    c.skip_ws();
    if (c.eof() || c.peek() != '=') c.fail("expected '=' after key '" + key + "'");
    c.next();
    Value v = parse_value(c);
    skip_comment_and_eol(c);
    Table& t = current.empty() ? doc.root : doc.sections[current];
    t[key] = std::move(v);
  }
  return doc;
}

Document parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

bool Document::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const Value* Document::find(const std::string& section, const std::string& key) const {
  const Table* t = nullptr;
  if (section.empty()) {
    t = &root;
  } else {
    auto it = sections.find(section);
    if (it == sections.end()) return nullptr;
    t = &it->second;
  }
  auto kit = t->find(key);
  return kit == t->end() ? nullptr : &kit->second;
}

double Document::get_double(const std::string& section, const std::string& key,
                            double fallback) const {
  const Value* v = find(section, key);
  return v ? v->as_double() : fallback;
}

int64_t Document::get_int(const std::string& section, const std::string& key,
                          int64_t fallback) const {
  const Value* v = find(section, key);
  return v ? v->as_int() : fallback;
}

bool Document::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const Value* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::Bool) throw ConfigError("toml: '" + key + "' is not a boolean");
  return v->b;
}

std::string Document::get_string(const std::string& section, const std::string& key,
                                 const std::string& fallback) const {
  const Value* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::String) throw ConfigError("toml: '" + key + "' is not a string");
  return v->s;
}

std::vector<double> Document::get_double_array(const std::string& section, const std::string& key,
                                               const std::vector<double>& fallback) const {
  const Value* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::Array) throw ConfigError("toml: '" + key + "' is not an array");
  std::vector<double> out;
  out.reserve(v->arr.size());
  for (const Value& e : v->arr) out.push_back(e.as_double());
  return out;
}

std::vector<int64_t> Document::get_int_array(const std::string& section, const std::string& key,
                                             const std::vector<int64_t>& fallback) const {
  const Value* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::Array) throw ConfigError("toml: '" + key + "' is not an array");
  std::vector<int64_t> out;
  out.reserve(v->arr.size());
  for (const Value& e : v->arr) out.push_back(e.as_int());
  return out;
}

}  // namespace hamchain::toml_lite
