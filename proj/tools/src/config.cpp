// SPDX-License-Identifier: Apache-2.0

#include "config.hpp"

#include "tprt/common.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace tprt::app {
namespace {

class TomlParser {
 public:
  explicit TomlParser(std::string_view text) : text_(text) {}

  Json parse() {
    Json root = Json::object();
    Json* table = &root;
    while (true) {
      skip_blank_lines();
      if (pos_ >= text_.size()) break;
      if (peek() == '[') {
        table = parse_header(root);
      } else {
        auto path = parse_key();
        skip_ws();
        expect('=');
        skip_ws();
        Json value = parse_value();
        Json* target = table;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) target = &descend(*target, path[i]);
        if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
        (*target)[path.back()] = std::move(value);
      }
      end_of_line();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("config line " + std::to_string(line_) + ": " + what);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  char take() {
    const char c = peek();
    if (c == '\n') ++line_;
    ++pos_;
    return c;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    take();
  }
  void skip_ws() {
    while (peek() == ' ' || peek() == '\t') take();
  }
  void skip_comment() {
    if (peek() == '#')
      while (pos_ < text_.size() && peek() != '\n') take();
  }
  void skip_blank_lines() {
    while (pos_ < text_.size()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        take();
      } else {
        break;
      }
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') take();
    if (pos_ < text_.size() && peek() != '\n') fail("unexpected trailing characters");
    if (pos_ < text_.size()) take();
  }

  static Json& descend(Json& node, const std::string& key) {
    Json& child = node[key];
    if (child.is_null()) child = Json::object();
    if (child.is_array() && !child.empty() && child.back().is_object()) return child.back();
    if (!child.is_object()) throw ParseError("config key '" + key + "' is not a table");
    return child;
  }

  Json* parse_header(Json& root) {
    expect('[');
    const bool array = peek() == '[';
    if (array) take();
    skip_ws();
    auto path = parse_key();
    skip_ws();
    expect(']');
    if (array) expect(']');
    Json* node = &root;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) node = &descend(*node, path[i]);
    Json& leaf = (*node)[path.back()];
    if (array) {
      if (leaf.is_null()) leaf = Json::array();
      if (!leaf.is_array()) fail("'" + path.back() + "' is not an array of tables");
      leaf.push_back(Json::object());
      return &leaf.back();
    }
    if (leaf.is_null()) leaf = Json::object();
    if (!leaf.is_object()) fail("'" + path.back() + "' is not a table");
    return &leaf;
  }

  std::vector<std::string> parse_key() {
    std::vector<std::string> parts;
    while (true) {
      skip_ws();
      if (peek() == '"') {
        parts.push_back(parse_string());
      } else {
        std::string key;
        while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-') key += take();
        if (key.empty()) fail("expected a key");
        parts.push_back(std::move(key));
      }
      skip_ws();
      if (peek() != '.') break;
      take();
    }
    return parts;
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      if (pos_ >= text_.size() || peek() == '\n') fail("unterminated string");
      const char c = take();
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      const char e = take();
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
    return out;
  }

  Json parse_value() {
    const char c = peek();
    if (c == '"') return parse_string();
    if (c == '[') return parse_array();
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return parse_number();
  }

  Json parse_array() {
    expect('[');
    Json arr = Json::array();
    while (true) {
      skip_ws();
      if (peek() == ']') break;
      arr.push_back(parse_value());
      skip_ws();
      if (peek() == ',') {
        take();
        continue;
      }
      if (peek() != ']') fail("expected ',' or ']' in array");
    }
    take();
    return arr;
  }

  Json parse_number() {
    std::string token;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' || peek() == '.' ||
           peek() == '_')
      if (const char ch = take(); ch != '_') token += ch;
    if (token.empty()) fail("expected a value");
    const char* b = token.data() + (token[0] == '+' ? 1 : 0);
    const char* e = token.data() + token.size();
    if (token.find_first_of(".eE") == std::string::npos || token == "inf" || token == "nan") {
      std::int64_t i = 0;
      if (auto [p, ec] = std::from_chars(b, e, i); ec == std::errc() && p == e) return i;
    }
    double d = 0.0;
    if (auto [p, ec] = std::from_chars(b, e, d); ec == std::errc() && p == e) return d;
    fail("invalid value '" + token + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace

Json parse_toml(std::string_view text) { return TomlParser(text).parse(); }

Json load_toml(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_toml(ss.str());
}

void merge_into(Json& base, const Json& patch) {
  if (!base.is_object() || !patch.is_object()) {
    base = patch;
    return;
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
      merge_into(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

}  // namespace tprt::app
