#pragma once

#include <sstream>
#include <string>
#include <vector>

namespace keeplora {

/// Renders a double with 17 significant digits, enough to round-trip any
/// 64-bit float.
std::string format_double(double v);

/// Accumulates comma-separated rows and writes them atomically (temp file
/// plus rename) so failures never leave partial output behind.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& cells);
  std::string str() const { return body_.str(); }
  void write(const std::string& path) const;

 private:
  std::size_t width_;
  std::ostringstream body_;
};

void write_text_file_atomic(const std::string& path, const std::string& body);

}  // namespace keeplora
