#ifndef CFX_CSV_HPP
#define CFX_CSV_HPP

#include <istream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "cfx/error.hpp"

namespace cfx::csv {

/// One parsed record and the physical line it started on.
struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

/// Comma-separated, double-quote escaped, one header row. Blank lines and
/// lines starting with '#' are skipped.
inline std::vector<Record> read(std::string_view text) {
  std::vector<Record> out;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line = 1;

  auto end_record = [&] {
    if (field_started || !current.fields.empty() || !field.empty()) {
      current.fields.push_back(std::move(field));
      out.push_back(std::move(current));
    }
    current = Record{};
    field.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '#' && !field_started && current.fields.empty()) {
      while (i + 1 < text.size() && text[i + 1] != '\n') ++i;
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) throw ParseError("quote inside unquoted field", line);
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        current.fields.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        current.line = line;
        break;
      default:
        field += c;
        field_started = true;
        break;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", line);
  end_record();
  return out;
}

inline std::vector<Record> read(std::istream& in) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return read(text);
}

/// Quotes a field only when it contains a separator, quote, or line break, or
/// starts with '#' (which read() would take for a comment).
inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos && !field.starts_with('#'))
    return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += escape(fields[i]);
  }
  return out;
}

}  // namespace cfx::csv

#endif  // CFX_CSV_HPP
