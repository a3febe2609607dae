#pragma once

#include <string>
#include <vector>

#include "openfluid/model.hpp"

namespace openfluid {

/// Writes `content` to `path` atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);

/// Formats a double with round-trip precision (deterministic output).
std::string format_double(double v);

/// Snapshot of a state: CSV with header x[,y],u_x[,u_y],rho[,...],s[,...],
/// one row per cell. Optionally also a raw little-endian float64 dump of
/// the same table, row-major.
void write_snapshot_csv(const std::string& path, const ModelSpec& model, const State& st);
void write_snapshot_binary(const std::string& path, const ModelSpec& model, const State& st);

/// Reads a snapshot written by write_snapshot_csv back onto `grid`.
State read_snapshot_csv(const std::string& path, const ModelSpec& model, GridPtr grid);

}  // namespace openfluid
