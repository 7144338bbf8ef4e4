#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cgn::io {

struct CsvRow {
  std::size_t line;  // 1-based line number in the source
  std::vector<std::string> fields;
};

struct CsvDocument {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  /// Index of a header column, or throws ValidationError.
  std::size_t column(std::string_view name) const;
};

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_field(std::string_view value);

/// Parses CSV text. Blank lines are skipped. If `required` is non-empty every
/// listed column must be present in the header.
CsvDocument parse_csv(std::string_view text, const std::vector<std::string>& required = {});
CsvDocument read_csv(const std::filesystem::path& path,
                     const std::vector<std::string>& required = {});

std::string read_file(const std::filesystem::path& path);
/// Writes via a sibling temp file and rename, so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string fixed(double value, int decimals);
double parse_double(std::string_view s, std::size_t line = 0);
long long parse_int(std::string_view s, std::size_t line = 0);

}  // namespace cgn::io
