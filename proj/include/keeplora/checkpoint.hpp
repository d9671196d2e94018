#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "keeplora/matrix.hpp"

namespace keeplora {

/// Binary container for named matrices. Layout, all little-endian:
///   magic "KLRA" | version u32 | repeated { name_len u32, name bytes,
///   rows u32, cols u32, rows*cols f64 }.
/// Scalars travel as 1x1 matrices. Round-trip is bit-identical.
struct Checkpoint {
  std::uint32_t version = 1;
  std::vector<std::pair<std::string, DenseMatrix>> entries;

  void add(std::string name, DenseMatrix m);
  void add_scalar(std::string name, double value);
  const DenseMatrix* find(const std::string& name) const;
  double scalar(const std::string& name) const;
};

/// Writes to a temp file in the target directory and renames on success.
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace keeplora
