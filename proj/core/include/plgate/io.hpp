#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "plgate/dataset.hpp"
#include "plgate/landscape.hpp"

namespace plgate {

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Landscape stacks of one dataset, all on one grid.
struct StackFile {
    std::string dataset;
    std::vector<LandscapeStack> stacks;
    std::vector<int> labels;
    std::size_t class_count = 0;
    std::uint64_t seed = 0;
};

/// Little-endian binary: "PLGSTK01", u32 version, u64 count, u32 K, u32 m,
/// f64 t_min, f64 t_max, u8 normalized, i32 labels[count], then count*K*m
/// f64 values, each stack row-major. A JSON sidecar with the same metadata is
/// written next to it with extension ".json".
void write_stacks(const std::filesystem::path& path, const StackFile& f);
StackFile read_stacks(const std::filesystem::path& path);

/// "PLGDATA1", u32 version, name, u64 count, u64 length, u64 class_count,
/// f64 label_values[class_count], then per signal i32 label and f64 values.
void write_dataset(const std::filesystem::path& path, const Dataset& d);
Dataset read_dataset(const std::filesystem::path& path);

/// Columns t, lambda_1, ..., lambda_K.
void write_stack_csv(const std::filesystem::path& path, const LandscapeStack& ls);

} // namespace plgate
