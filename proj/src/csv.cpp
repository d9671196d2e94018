#include "keeplora/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "keeplora/errors.hpp"

namespace keeplora {

std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) body_ << ',';
    body_ << header[i];
  }
  body_ << '\n';
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) {
    throw ShapeError("CsvWriter: row width " + std::to_string(cells.size()) +
                     " != header width " + std::to_string(width_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) body_ << ',';
    body_ << cells[i];
  }
  body_ << '\n';
}

void CsvWriter::write(const std::string& path) const {
  write_text_file_atomic(path, body_.str());
}

void write_text_file_atomic(const std::string& path, const std::string& body) {
  const std::filesystem::path target(path);
  const std::filesystem::path temp =
      target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError(path + ": cannot open for writing");
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw ParseError(path + ": write failed");
  }
  std::filesystem::rename(temp, target);
}

}  // namespace keeplora
