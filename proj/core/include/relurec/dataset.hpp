#pragma once

#include "relurec/network.hpp"

#include <filesystem>

namespace relurec {

/// Network JSON: {"d", "m", "B", "a", "b", "W_colmajor"}.
void save_network(const std::filesystem::path& path, const ReluNetwork& net);
ReluNetwork load_network(const std::filesystem::path& path);

/// Dataset CSV with header x_1,...,x_d,y.
void save_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset_csv(const std::filesystem::path& path);

/// Binary dataset "HDATA1": 6-byte magic, u64 N, u64 d, then N rows of
/// (x_1..x_d, y) as little-endian f64.
void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

/// Dispatches on extension: ".csv" text, everything else binary.
void save_dataset_auto(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset_auto(const std::filesystem::path& path);

}  // namespace relurec
