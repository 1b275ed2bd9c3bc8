#include "xgad/tsv.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace xgad {

FormatError::FormatError(const std::filesystem::path& file, std::size_t line,
                         const std::string& what)
    : std::runtime_error(file.string() + ":" + std::to_string(line) + ": " + what),
      file_(file),
      line_(line) {}

FormatError::FormatError(const std::filesystem::path& file, const std::string& what)
    : std::runtime_error(file.string() + ": " + what), file_(file) {}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), end);
}

double parse_double(std::string_view text, const std::filesystem::path& file, std::size_t line) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw FormatError(file, line, "not a real number: '" + std::string(text) + "'");
  }
  return value;
}

long long parse_integer(std::string_view text, const std::filesystem::path& file,
                        std::size_t line) {
  long long value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw FormatError(file, line, "not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::vector<std::string_view> split_lines(std::string_view content) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t nl = content.find('\n', start);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = nl + 1;
  }
  return out;
}

std::string matrix_to_tsv(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += '\t';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix matrix_from_tsv(std::string_view content, const std::filesystem::path& file) {
  const auto lines = split_lines(content);
  std::vector<std::vector<double>> rows;
  rows.reserve(lines.size());
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto fields = split_tabs(lines[k]);
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_double(f, file, k + 1));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(file, k + 1,
                        "expected " + std::to_string(rows.front().size()) + " columns, found " +
                            std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  const Eigen::Index cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  return m;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

}  // namespace xgad
