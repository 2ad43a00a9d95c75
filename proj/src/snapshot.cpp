#include "cdrp/snapshot.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "cdrp/errors.hpp"

namespace cdrp {

namespace {

static_assert(std::endian::native == std::endian::little, "snapshots assume a little-endian host");

constexpr char kMagic[4] = {'C', 'D', 'R', 'P'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 8 + 8 + 8 + 8 + 1;

template <class T>
void put(std::vector<unsigned char>& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

template <class T>
T get(const unsigned char*& p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  p += sizeof(T);
  return v;
}

}  // namespace

void write_snapshot(const ContinuumFieldSlice& slice, const std::string& path) {
  if (slice.start_time != 0 || slice.start_site != 0)
    throw ConfigError("only fields started at the origin can be written to a snapshot");
  const LatticeSpec& spec = slice.spec;
  for (std::uint32_t t = 1; t <= spec.n_time; ++t)
    if (!slice.rows.stores(t)) throw ConfigError("snapshot needs every row; build the field with keep_every = 1");

  const std::int64_t M = spec.half_sites();
  const std::size_t n_space = spec.n_sites();
  std::vector<unsigned char> out;
  out.reserve(kHeaderBytes + static_cast<std::size_t>(spec.n_time) * n_space * 8);
  out.insert(out.end(), kMagic, kMagic + 4);
  put<std::uint32_t>(out, kSnapshotVersion);
  put<std::uint32_t>(out, spec.n_time);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(n_space));
  put<double>(out, spec.horizon_T);
  put<double>(out, spec.space_halfwidth_L);
  put<double>(out, slice.beta);
  put<std::uint64_t>(out, slice.seed);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(slice.scheme));
  for (std::uint32_t t = 1; t <= spec.n_time; ++t)
    for (std::int64_t s = -M; s <= M; ++s) put<double>(out, slice.density(t, s));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write to '" + path + "' failed");
}

ContinuumFieldSlice read_snapshot(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < 8 || std::memcmp(buf.data(), kMagic, 4) != 0) throw FormatError("not a field snapshot (bad magic)");
  const unsigned char* p = buf.data() + 4;
  const auto version = get<std::uint32_t>(p);
  if (version != kSnapshotVersion)
    throw FormatError("unsupported snapshot version " + std::to_string(version));
  if (buf.size() < kHeaderBytes) throw IntegrityError("truncated snapshot header");

  ContinuumFieldSlice slice;
  slice.spec.n_time = get<std::uint32_t>(p);
  const auto n_space = get<std::uint32_t>(p);
  slice.spec.horizon_T = get<double>(p);
  slice.spec.space_halfwidth_L = get<double>(p);
  slice.beta = get<double>(p);
  slice.seed = get<std::uint64_t>(p);
  const auto scheme = get<std::uint8_t>(p);
  if (scheme > 1) throw IntegrityError("unknown scheme tag in snapshot");
  slice.scheme = static_cast<Scheme>(scheme);
  try {
    slice.spec.validate();
  } catch (const ConfigError& e) {
    throw IntegrityError(std::string("inconsistent snapshot header: ") + e.what());
  }
  if (n_space != slice.spec.n_sites()) throw IntegrityError("snapshot row width does not match its window");
  const std::size_t expected = kHeaderBytes + static_cast<std::size_t>(slice.spec.n_time) * n_space * 8;
  if (buf.size() < expected) throw IntegrityError("truncated snapshot payload");
  if (buf.size() > expected) throw IntegrityError("trailing bytes after snapshot payload");

  const std::int64_t M = slice.spec.half_sites();
  const bool tm = slice.scheme == Scheme::transfer_matrix;
  slice.rows = RowSeries(0, slice.spec.n_time, 1);
  ParityRow& start = slice.rows.slot(0);
  start = ParityRow{0, {1.0 / slice.cell_width()}, 0.0, tm ? 2 : 1};
  for (std::uint32_t t = 1; t <= slice.spec.n_time; ++t) {
    ParityRow row;
    row.step = tm ? 2 : 1;
    row.first = tm ? -M + ((t + M) & 1) : -M;
    for (std::int64_t s = -M; s <= M; ++s) {
      const double d = get<double>(p);
      if (!(d >= 0.0) || !std::isfinite(d)) throw IntegrityError("snapshot holds a negative or non-finite density");
      if (tm && ((s - row.first) & 1) != 0) {
        if (d != 0.0) throw IntegrityError("snapshot has mass off the parity sublattice");
        continue;
      }
      row.v.push_back(d);
    }
    slice.rows.slot(t) = std::move(row);
  }
  return slice;
}

}  // namespace cdrp
