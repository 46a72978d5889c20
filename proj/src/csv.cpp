#include "faultloc/csv.hpp"

#include <fstream>
#include <sstream>

#include "faultloc/error.hpp"
#include "faultloc/numfmt.hpp"

namespace faultloc {

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  throw Error("parse", "CSV has no column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::numbers(std::string_view name) const {
  const auto c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(parse_double(r[c]));
  return out;
}

std::vector<std::string> CsvTable::strings(std::string_view name) const {
  const auto c = column(name);
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

namespace {

// Splits one logical record; returns false at end of input.
bool next_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  std::string field;
  bool quoted = false;
  bool any = false;
  for (int ch; (ch = in.get()) != EOF;) {
    any = true;
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw Error("parse", "line " + std::to_string(line) + ": unterminated quoted field");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path.string());
  CsvTable table;
  std::size_t line = 1;
  std::vector<std::string> fields;
  if (!next_record(in, table.header, line)) throw Error("parse", path.string() + ": empty file, no header");
  while (true) {
    const auto start = line;
    if (!next_record(in, fields, line)) break;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != table.header.size()) {
      throw Error("parse", path.string() + ": line " + std::to_string(start) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(table.header.size()));
    }
    table.rows.push_back(fields);
  }
  return table;
}

}  // namespace faultloc
