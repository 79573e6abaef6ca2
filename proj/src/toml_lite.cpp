#include "vlmplan/toml_lite.hpp"

#include <cctype>
#include <cstdlib>
#include <vector>

namespace vlmplan::toml {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  nlohmann::json parse() {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;

    skip_blank();
    while (!eof()) {
      if (peek() == '[') {
        table = parse_table_header(root);
      } else {
        parse_assignment(*table);
      }
      end_statement();
      skip_blank();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw TomlError("line " + std::to_string(line_) + ": " + why);
  }

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  char take() {
    const char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  // Spaces and tabs only; newlines are statement terminators.
  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    while (!eof() && peek() != '\n') take();
  }

  // Whitespace, newlines, comments between statements.
  void skip_blank() {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else if (c == '\n') {
        take();
      } else if (c == '#') {
        skip_comment();
      } else {
        break;
      }
    }
  }

  void end_statement() {
    skip_inline_ws();
    if (eof()) return;
    if (peek() == '#') skip_comment();
    if (eof()) return;
    if (peek() == '\r') ++pos_;
    if (eof()) return;
    if (peek() != '\n') fail("expected end of line");
    take();
  }

  std::string parse_basic_string() {
    take();  // opening quote
    std::string out;
    while (true) {
      if (eof()) fail("unterminated string");
      const char c = take();
      if (c == '"') return out;
      if (c == '\n') fail("newline in string");
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (eof()) fail("unterminated escape");
      const char e = take();
      switch (e) {
        case 'b': out.push_back('\b'); break;
        case 't': out.push_back('\t'); break;
        case 'n': out.push_back('\n'); break;
        case 'f': out.push_back('\f'); break;
        case 'r': out.push_back('\r'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'u': out += parse_unicode_escape(4); break;
        case 'U': out += parse_unicode_escape(8); break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  std::string parse_unicode_escape(int digits) {
    uint32_t code = 0;
    for (int i = 0; i < digits; ++i) {
      if (eof()) fail("unterminated unicode escape");
      const char c = take();
      code <<= 4;
      if (c >= '0' && c <= '9') code |= static_cast<uint32_t>(c - '0');
      else if (c >= 'a' && c <= 'f') code |= static_cast<uint32_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') code |= static_cast<uint32_t>(c - 'A' + 10);
      else fail("bad unicode escape digit");
    }
    std::string out;
    if (code < 0x80) {
      out.push_back(static_cast<char>(code));
    } else if (code < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (code >> 6)));
      out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
    } else if (code < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (code >> 12)));
      out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (code >> 18)));
      out.push_back(static_cast<char>(0x80 | ((code >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
    }
    return out;
  }

  std::string parse_literal_string() {
    take();  // opening quote
    std::string out;
    while (true) {
      if (eof()) fail("unterminated literal string");
      const char c = take();
      if (c == '\'') return out;
      if (c == '\n') fail("newline in literal string");
      out.push_back(c);
    }
  }

  static bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string parse_key_segment() {
    skip_inline_ws();
    if (eof()) fail("expected key");
    if (peek() == '"') return parse_basic_string();
    if (peek() == '\'') return parse_literal_string();
    std::string out;
    while (!eof() && is_bare_key_char(peek())) out.push_back(take());
    if (out.empty()) fail("expected key");
    return out;
  }

  // Dotted key path: a.b."c d"
  std::vector<std::string> parse_key_path() {
    std::vector<std::string> path{parse_key_segment()};
    skip_inline_ws();
    while (!eof() && peek() == '.') {
      take();
      path.push_back(parse_key_segment());
      skip_inline_ws();
    }
    return path;
  }

  nlohmann::json* parse_table_header(nlohmann::json& root) {
    take();  // '['
    if (!eof() && peek() == '[') fail("arrays of tables are not supported");
    const std::vector<std::string> path = parse_key_path();
    skip_inline_ws();
    if (eof() || take() != ']') fail("expected ']'");

    nlohmann::json* node = &root;
    for (const std::string& key : path) {
      if (!node->contains(key)) (*node)[key] = nlohmann::json::object();
      node = &(*node)[key];
      if (!node->is_object()) fail("table header conflicts with existing key '" + key + "'");
    }
    return node;
  }

  void parse_assignment(nlohmann::json& table) {
    const std::vector<std::string> path = parse_key_path();
    skip_inline_ws();
    if (eof() || take() != '=') fail("expected '='");
    skip_inline_ws();
    nlohmann::json value = parse_value();

    nlohmann::json* node = &table;
    for (size_t i = 0; i + 1 < path.size(); ++i) {
      if (!node->contains(path[i])) (*node)[path[i]] = nlohmann::json::object();
      node = &(*node)[path[i]];
      if (!node->is_object()) fail("dotted key conflicts with existing key '" + path[i] + "'");
    }
    if (node->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*node)[path.back()] = std::move(value);
  }

  nlohmann::json parse_value() {
    if (eof()) fail("expected value");
    const char c = peek();
    if (c == '"') return parse_basic_string();
    if (c == '\'') return parse_literal_string();
    if (c == '[') return parse_array();
    if (c == 't' || c == 'f') return parse_boolean();
    if (c == '+' || c == '-' || std::isdigit(static_cast<unsigned char>(c))) return parse_number();
    fail(std::string("unexpected value start '") + c + "'");
  }

  nlohmann::json parse_array() {
    take();  // '['
    nlohmann::json arr = nlohmann::json::array();
    while (true) {
      skip_blank();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        take();
        return arr;
      }
      arr.push_back(parse_value());
      skip_blank();
      if (eof()) fail("unterminated array");
      if (peek() == ',') {
        take();
        continue;
      }
      if (peek() == ']') {
        take();
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  nlohmann::json parse_boolean() {
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    fail("expected boolean");
  }

  nlohmann::json parse_number() {
    std::string raw;
    bool is_float = false;
    while (!eof()) {
      const char c = peek();
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-') {
        raw.push_back(take());
      } else if (c == '.' || c == 'e' || c == 'E') {
        is_float = true;
        raw.push_back(take());
      } else {
        break;
      }
    }
    try {
      if (is_float) return std::stod(raw);
      return static_cast<int64_t>(std::stoll(raw));
    } catch (const std::exception&) {
      fail("bad number '" + raw + "'");
    }
  }

  std::string_view text_;
  size_t pos_ = 0;
  size_t line_ = 1;
};

}  // namespace

nlohmann::json parse(std::string_view text) { return Parser(text).parse(); }

}  // namespace vlmplan::toml
