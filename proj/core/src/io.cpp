#include "plateopt/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "plateopt/errors.hpp"

namespace plateopt {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void CsvWriter::sep() {
  if (!first_) os_ << ',';
  first_ = false;
}

void CsvWriter::header(const std::vector<std::string>& names) {
  begin_row();
  for (const auto& n : names) field(n);
  end_row();
}

void CsvWriter::field(double v) {
  sep();
  os_ << format_double(v);
}

void CsvWriter::field(int v) {
  sep();
  os_ << v;
}

void CsvWriter::field(const std::string& v) {
  sep();
  os_ << v;
}

void CsvWriter::empty() { sep(); }

void CsvWriter::end_row() {
  os_ << '\n';
  first_ = true;
}

void CsvWriter::row(const std::vector<double>& values) {
  begin_row();
  for (double v : values) field(v);
  end_row();
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw ConfigError("cannot create directory " + path + ": " + ec.message(), 0);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path, 0);
  f << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path, 0);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace plateopt
