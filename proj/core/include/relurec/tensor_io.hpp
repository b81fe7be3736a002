#pragma once

#include "relurec/tensor.hpp"

#include <filesystem>
#include <iosfwd>

namespace relurec {

/// Binary tensor format "HTNSR1": 6-byte magic, u8 order, u64 little-endian
/// extents, f64 little-endian row-major payload.
void write_tensor(std::ostream& os, const DenseTensor& T);
void write_tensor(const std::filesystem::path& path, const DenseTensor& T);

DenseTensor read_tensor(std::istream& is);
DenseTensor read_tensor(const std::filesystem::path& path);

}  // namespace relurec
