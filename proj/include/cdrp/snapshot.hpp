#pragma once

#include <cstdint>
#include <string>

#include "cdrp/she_field.hpp"

namespace cdrp {

inline constexpr std::uint32_t kSnapshotVersion = 1;

/// Binary field snapshot, all little endian:
///   "CDRP", u32 version, u32 n_time, u32 n_space, f64 T, f64 L, f64 beta, u64 seed,
///   u8 scheme, then n_time rows of n_space f64 densities for t = 1..n_time on sites
///   -M..M (zero where the scheme stores nothing).
/// Only slices started at the origin with every row retained can be written.
void write_snapshot(const ContinuumFieldSlice& slice, const std::string& path);

/// Throws FormatError on a bad magic or version and IntegrityError on a short or
/// inconsistent payload; nothing is returned in either case.
ContinuumFieldSlice read_snapshot(const std::string& path);

}  // namespace cdrp
