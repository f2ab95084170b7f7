#pragma once

#include <filesystem>
#include <span>

#include "lmc/types.hpp"

namespace lmc {

/// Whole-file read. A nonexistent path is a missing error, anything else io.
Bytes read_file(const std::filesystem::path& path);

/// Writes `<path>.tmp`, flushes it to disk, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const Byte> data);

/// Writes `<path>.tmp` and flushes it, without the final rename.
std::filesystem::path write_temp_file(const std::filesystem::path& path, std::span<const Byte> data);

}  // namespace lmc
