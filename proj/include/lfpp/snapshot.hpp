#pragma once

#include <filesystem>

#include "lfpp/field.hpp"

namespace lfpp {

/// Writes `<base>.bin` (fixed-width little-endian header then row-major
/// float64 values) and `<base>.json` (generation metadata).
void save_snapshot(const FieldSample& sample, const std::filesystem::path& base);

/// Reads a snapshot written by save_snapshot. Metadata not carried by the
/// binary header (padding, layer scale) comes from the sidecar if present.
FieldSample load_snapshot(const std::filesystem::path& base);

}  // namespace lfpp
