#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace plateopt {

// Decimal with '.' separator and 17 significant digits (round-trips exactly).
std::string format_double(double v);

// Comma-separated output with 17-digit doubles.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& names);
  void begin_row() { first_ = true; }
  void field(double v);
  void field(int v);
  void field(const std::string& v);
  void empty();
  void end_row();
  void row(const std::vector<double>& values);

 private:
  void sep();
  std::ostream& os_;
  bool first_ = true;
};

// Creates the directory (and parents) if missing.
void ensure_directory(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
std::string join_path(const std::string& dir, const std::string& name);

}  // namespace plateopt
