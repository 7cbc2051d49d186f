#pragma once

// Reader/writer for the scenario file format: a TOML subset with
//   # comments
//   [section]
//   key = 1.5 | "text" | true | [1, 2] | [[1, 2], [3, 4]]   (arrays may span lines)
// Keys are addressed as "section.key".

#include <cctype>
#include <charconv>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace radarplace::detail {

struct KvArray {
  std::vector<std::variant<double, KvArray>> items;
};

using KvValue = std::variant<double, std::string, bool, KvArray>;

class KvParseError : public std::runtime_error {
 public:
  KvParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct KvDocument {
  std::map<std::string, KvValue> values;
  std::map<std::string, int> lines;  // key -> source line
};

namespace kv_impl {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string strip_comment(std::string_view line) {
  bool in_string = false;
  std::string out;
  for (char c : line) {
    if (c == '"') in_string = !in_string;
    if (c == '#' && !in_string) break;
    out.push_back(c);
  }
  return out;
}

class ValueParser {
 public:
  ValueParser(std::string_view text, int line) : text_(text), line_(line) {}

  KvValue parse() {
    skip_ws();
    KvValue v = parse_value();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters after value");
    return v;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_;

  [[noreturn]] void fail(const std::string& msg) const { throw KvParseError(line_, msg); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  KvValue parse_value() {
    if (pos_ >= text_.size()) fail("missing value");
    const char c = text_[pos_];
    if (c == '[') return parse_array();
    if (c == '"') return parse_string();
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

  std::string parse_string() {
    ++pos_;
    const std::size_t end = text_.find('"', pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string s(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }

  double parse_number() {
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr == first) fail("expected a number near '" + std::string(text_.substr(pos_, 16)) + "'");
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }

  KvArray parse_array() {
    ++pos_;
    KvArray arr;
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return arr;
    }
    while (true) {
      skip_ws();
      if (pos_ >= text_.size()) fail("unterminated array");
      if (text_[pos_] == '[') {
        arr.items.emplace_back(parse_array());
      } else {
        arr.items.emplace_back(parse_number());
      }
      skip_ws();
      if (pos_ >= text_.size()) fail("unterminated array");
      if (text_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ']') {  // trailing comma
          ++pos_;
          return arr;
        }
        continue;
      }
      if (text_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }
};

inline int bracket_balance(std::string_view s) {
  int depth = 0;
  bool in_string = false;
  for (char c : s) {
    if (c == '"') in_string = !in_string;
    if (in_string) continue;
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth;
}

}  // namespace kv_impl

inline KvDocument parse_kv_text(std::string_view text) {
  using namespace kv_impl;
  KvDocument doc;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip_comment(raw);
    std::string_view body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) throw KvParseError(line_no, "malformed section header");
      section = std::string(trim(body.substr(1, body.size() - 2)));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw KvParseError(line_no, "expected 'key = value'");
    const std::string key(trim(body.substr(0, eq)));
    if (key.empty()) throw KvParseError(line_no, "empty key");
    std::string value_text(trim(body.substr(eq + 1)));
    const int start_line = line_no;
    while (bracket_balance(value_text) > 0) {
      if (!std::getline(in, raw)) throw KvParseError(start_line, "unterminated array for key '" + key + "'");
      ++line_no;
      value_text += ' ';
      value_text += strip_comment(raw);
    }
    const std::string full_key = section.empty() ? key : section + "." + key;
    if (doc.values.count(full_key) != 0) throw KvParseError(start_line, "duplicate key '" + full_key + "'");
    doc.values.emplace(full_key, ValueParser(value_text, start_line).parse());
    doc.lines.emplace(full_key, start_line);
  }
  return doc;
}

/// Shortest round-trippable decimal form of a double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf, ptr);
}

}  // namespace radarplace::detail
