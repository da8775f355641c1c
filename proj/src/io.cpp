#include "wiggle/io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "wiggle/errors.hpp"

namespace wiggle {

std::string format_number(double v) { return fmt::format("{}", v); }

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : path_(path), tmp_(path.string() + ".part"), columns_(header.size()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(tmp_, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError(fmt::format("cannot open '{}' for writing", tmp_.string()));
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

CsvWriter::~CsvWriter() {
  if (!closed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void CsvWriter::row(std::initializer_list<double> values) { row(std::vector<double>(values)); }

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  raw_row(cells);
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw IoError(fmt::format("{}: row has {} cells, header has {}", path_.string(), cells.size(), columns_));
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << '\n';
  ++rows_;
}

void CsvWriter::close() {
  if (closed_) return;
  out_.close();
  if (!out_) throw IoError(fmt::format("failed writing '{}'", tmp_.string()));
  std::filesystem::rename(tmp_, path_);
  closed_ = true;
}

namespace {

bool parse_double(std::string_view cell, double& out) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::size_t min_columns,
                                                  std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line);
    std::vector<double> values(cells.size());
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size(); ++i) numeric = numeric && parse_double(cells[i], values[i]);
    if (first && !numeric) {
      if (header) *header = cells;
      first = false;
      continue;
    }
    first = false;
    if (!numeric) throw IoError(fmt::format("{}:{}: non-numeric cell in '{}'", path.string(), line_no, line));
    if (values.size() < min_columns)
      throw IoError(fmt::format("{}:{}: expected at least {} columns, found {}", path.string(), line_no,
                                min_columns, values.size()));
    rows.push_back(std::move(values));
  }
  return rows;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".part");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", tmp.string()));
    out << value.dump(2) << '\n';
    if (!out) throw IoError(fmt::format("failed writing '{}'", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
}

std::size_t validate_csv(const std::filesystem::path& path, std::size_t text_columns) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw IoError(fmt::format("{}: empty file", path.string()));
  const auto width = split(line).size();
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto cells = split(line);
    if (cells.size() != width)
      throw IoError(fmt::format("{}: row {} has {} cells, header has {}", path.string(), rows + 1, cells.size(),
                                width));
    for (std::size_t i = text_columns; i < cells.size(); ++i) {
      double v = 0.0;
      if (!parse_double(cells[i], v) || !std::isfinite(v))
        throw IoError(fmt::format("{}: row {} column {} is not a finite number", path.string(), rows + 1, i + 1));
    }
    ++rows;
  }
  return rows;
}

}  // namespace wiggle
