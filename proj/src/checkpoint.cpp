#include "keeplora/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "keeplora/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace keeplora {

namespace {

constexpr char kMagic[4] = {'K', 'L', 'R', 'A'};

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError(path + ": truncated checkpoint");
  return v;
}

}  // namespace

void Checkpoint::add(std::string name, DenseMatrix m) {
  entries.emplace_back(std::move(name), std::move(m));
}

void Checkpoint::add_scalar(std::string name, double value) {
  DenseMatrix m(1, 1);
  m(0, 0) = value;
  entries.emplace_back(std::move(name), std::move(m));
}

const DenseMatrix* Checkpoint::find(const std::string& name) const {
  for (const auto& [key, value] : entries) {
    if (key == name) return &value;
  }
  return nullptr;
}

double Checkpoint::scalar(const std::string& name) const {
  const DenseMatrix* m = find(name);
  if (!m || m->rows() != 1 || m->cols() != 1) {
    throw ParseError("checkpoint: missing scalar '" + name + "'");
  }
  return (*m)(0, 0);
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  const std::filesystem::path target(path);
  const std::filesystem::path temp =
      target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError(path + ": cannot open for writing");
    out.write(kMagic, sizeof kMagic);
    write_u32(out, checkpoint.version);
    for (const auto& [name, matrix] : checkpoint.entries) {
      write_u32(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_u32(out, static_cast<std::uint32_t>(matrix.rows()));
      write_u32(out, static_cast<std::uint32_t>(matrix.cols()));
      out.write(reinterpret_cast<const char*>(matrix.data().data()),
                static_cast<std::streamsize>(matrix.data().size() *
                                             sizeof(double)));
    }
    if (!out) throw ParseError(path + ": write failed");
  }
  std::filesystem::rename(temp, target);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open checkpoint");
  char magic[4];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ParseError(path + ": bad checkpoint magic");
  }
  Checkpoint checkpoint;
  checkpoint.version = read_u32(in, path);
  while (true) {
    std::uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof name_len);
    if (in.eof() && in.gcount() == 0) break;
    if (!in || in.gcount() != sizeof name_len) {
      throw ParseError(path + ": truncated checkpoint");
    }
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rows = read_u32(in, path);
    const std::uint32_t cols = read_u32(in, path);
    std::vector<double> data(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw ParseError(path + ": truncated checkpoint payload");
    checkpoint.entries.emplace_back(
        std::move(name), DenseMatrix(rows, cols, std::move(data)));
  }
  return checkpoint;
}

}  // namespace keeplora
