#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xgad/graph.hpp"

namespace xgad {

// Failure to read or write a file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file content. The message names the file and, when known, the
// 1-based line.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::filesystem::path& file, std::size_t line, const std::string& what);
  FormatError(const std::filesystem::path& file, const std::string& what);

  const std::filesystem::path& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::filesystem::path file_;
  std::size_t line_ = 0;
};

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text, const std::filesystem::path& file, std::size_t line);
long long parse_integer(std::string_view text, const std::filesystem::path& file, std::size_t line);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::vector<std::string_view> split_tabs(std::string_view line);
// Lines of `content` without trailing '\r'; a final empty line is dropped.
std::vector<std::string_view> split_lines(std::string_view content);

std::string matrix_to_tsv(const Matrix& m);
Matrix matrix_from_tsv(std::string_view content, const std::filesystem::path& file);

std::string sha256_hex(std::string_view data);

}  // namespace xgad
