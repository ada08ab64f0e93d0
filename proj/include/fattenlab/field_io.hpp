#pragma once

#include <filesystem>
#include <string>

#include "fattenlab/grid.hpp"

namespace fattenlab {

/// Writes `<stem>.f64` (little-endian float64, x fastest) and `<stem>.meta`
/// (key = value lines: dim, points_per_axis, extent_lo, extent_hi, time,
/// boundary).
void write_field(const std::filesystem::path& stem, const Field& f);

/// Reads a field written by write_field.
Field read_field(const std::filesystem::path& stem);

/// 8-bit binary PGM of a 2-D field, mapping [-1, 1] linearly onto [0, 255].
void write_pgm(const std::filesystem::path& path, const Field& f);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace fattenlab
