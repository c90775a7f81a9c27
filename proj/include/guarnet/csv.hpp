#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace guarnet::csv {

// Shortest decimal form that parses back to the identical double; keeps CSV
// output byte-stable across reruns.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Error raised for malformed input; carries file/line/column so callers can
// surface a record locator.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        file_(file),
        line_(line),
        column_(column) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::string file_;
  std::size_t line_, column_;
};

struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line the record started on
};

// RFC-4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
class Reader {
 public:
  Reader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  // Reads one record; returns false at end of input.
  bool next(Row& row) {
    row.fields.clear();
    int c = in_.get();
    if (c == EOF) return false;
    row.line = line_;
    std::string field;
    bool in_quotes = false;
    bool quoted_field = false;
    for (;;) {
      if (c == EOF) {
        if (in_quotes) fail("unterminated quoted field");
        row.fields.push_back(std::move(field));
        return true;
      }
      char ch = static_cast<char>(c);
      if (in_quotes) {
        if (ch == '"') {
          int peek = in_.get();
          if (peek == '"') {
            field.push_back('"');
            column_ += 2;
          } else {
            in_quotes = false;
            ++column_;
            c = peek;
            continue;
          }
        } else {
          if (ch == '\n') {
            ++line_;
            column_ = 1;
          } else {
            ++column_;
          }
          field.push_back(ch);
        }
      } else if (ch == '"') {
        if (!field.empty()) fail("quote inside unquoted field");
        in_quotes = true;
        quoted_field = true;
        ++column_;
      } else if (ch == ',') {
        row.fields.push_back(std::move(field));
        field.clear();
        quoted_field = false;
        ++column_;
      } else if (ch == '\r') {
        int peek = in_.get();
        if (peek != '\n' && peek != EOF) fail("bare CR in record");
        row.fields.push_back(std::move(field));
        ++line_;
        column_ = 1;
        return true;
      } else if (ch == '\n') {
        row.fields.push_back(std::move(field));
        ++line_;
        column_ = 1;
        return true;
      } else {
        if (quoted_field) fail("data after closing quote");
        field.push_back(ch);
        ++column_;
      }
      c = in_.get();
    }
  }

  std::size_t line() const { return line_; }
  const std::string& name() const { return name_; }

 private:
  [[noreturn]] void fail(const std::string& what) { throw ParseError(name_, line_, column_, what); }

  std::istream& in_;
  std::string name_;
  std::size_t line_ = 1, column_ = 1;
};

inline bool needs_quoting(const std::string& field) {
  for (char c : field)
    if (c == ',' || c == '"' || c == '\n' || c == '\r') return true;
  return false;
}

inline std::string quote(const std::string& field) {
  if (!needs_quoting(field)) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i]);
  }
  out << '\n';
}

// Convenience: fully parse a file, header row required.
struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;
};

inline Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  Reader reader(in, path);
  Table table;
  Row row;
  if (!reader.next(row)) throw ParseError(path, 1, 1, "missing header row");
  table.header = row.fields;
  while (reader.next(row)) {
    // A trailing newline yields no extra record; skip fully empty lines.
    if (row.fields.size() == 1 && row.fields[0].empty()) continue;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace guarnet::csv
