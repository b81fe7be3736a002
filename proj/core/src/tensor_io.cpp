#include "relurec/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace relurec {

namespace {

constexpr char kMagic[6] = {'H', 'T', 'N', 'S', 'R', '1'};

static_assert(std::endian::native == std::endian::little,
              "HTNSR1 writer assumes a little-endian host");

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void write_tensor(std::ostream& os, const DenseTensor& T) {
  os.write(kMagic, sizeof(kMagic));
  const auto order = static_cast<std::uint8_t>(T.order());
  os.write(reinterpret_cast<const char*>(&order), 1);
  for (std::size_t d : T.dims()) write_u64(os, d);
  os.write(reinterpret_cast<const char*>(T.data()),
           static_cast<std::streamsize>(T.size() * sizeof(double)));
  if (!os) throw std::runtime_error("failed to write tensor stream");
}

void write_tensor(const std::filesystem::path& path, const DenseTensor& T) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_tensor(os, T);
}

DenseTensor read_tensor(std::istream& is) {
  char magic[6];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not an HTNSR1 tensor stream");
  }
  std::uint8_t order = 0;
  is.read(reinterpret_cast<char*>(&order), 1);
  std::vector<std::size_t> dims(order);
  for (auto& d : dims) d = static_cast<std::size_t>(read_u64(is));
  DenseTensor out(dims);
  is.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(out.size() * sizeof(double)));
  if (!is) throw std::runtime_error("truncated HTNSR1 tensor stream");
  return out;
}

DenseTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_tensor(is);
}

}  // namespace relurec
