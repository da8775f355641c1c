#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

namespace wiggle {

/// Writes a CSV with a header row. Doubles use the shortest round-trip form.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(std::initializer_list<double> values);
  void row(const std::vector<double>& values);
  /// Free-form row of preformatted cells.
  void raw_row(const std::vector<std::string>& cells);
  void close();
  std::size_t rows() const { return rows_; }

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  std::size_t columns_;
  std::size_t rows_ = 0;
  bool closed_ = false;
};

std::string format_number(double v);

/// Numeric rows of a CSV; a non-numeric first line is taken as the header and
/// lines starting with '#' are skipped. Rows must have at least `min_columns`.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::size_t min_columns,
                                                  std::vector<std::string>* header = nullptr);

/// Writes JSON (indent 2, trailing newline) through a temporary file + rename.
void write_json(const std::filesystem::path& path, const nlohmann::json& value);
nlohmann::json read_json(const std::filesystem::path& path);

/// Structural check of a CSV we produced: header width matches every row and
/// every cell parses as a finite number (except `text_columns`). Returns the row count.
std::size_t validate_csv(const std::filesystem::path& path, std::size_t text_columns = 0);

}  // namespace wiggle
