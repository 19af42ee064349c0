#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace surfipp {

/// Locale-independent decimal text with `significant` significant digits.
std::string fmt_num(double value, int significant = 9);

/// Shortest text that parses back to exactly `value`.
std::string fmt_exact(double value);

/// Locale-independent parse; throws Error on malformed input.
double parse_double(std::string_view text);

/// Minimal CSV writer. Every file starts with a header row.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& cells);
  void row_numbers(const std::vector<double>& values);

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

/// Reads a header-led CSV of numbers. Returns the header and the rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(std::string_view name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace surfipp
