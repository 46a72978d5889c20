#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace faultloc {

// Quotes a field when it holds a comma, quote or line break.
std::string csv_field(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a named column; throws Error("parse") when absent.
  std::size_t column(std::string_view name) const;
  std::vector<double> numbers(std::string_view name) const;
  std::vector<std::string> strings(std::string_view name) const;
};

// Reads a header-first CSV with RFC 4180 quoting. Ragged rows are an error.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace faultloc
