#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "ghdo/aghdo.hpp"
#include "ghdo/dense.hpp"

namespace ghdo {

inline constexpr const char* kCheckpointVersion = "ghdo-ckpt-1";

/// JSON document: version, model_kind ("network" or "table"), the network
/// spec or (sites, local_rank), real and imaginary parameter arrays, and
/// the sampler seed.
struct Checkpoint {
  AghdoModel model;
  std::uint64_t seed = 0;
};

void write_checkpoint(std::ostream& os, const AghdoModel& model, std::uint64_t seed);
void save_checkpoint(const std::filesystem::path& path, const AghdoModel& model, std::uint64_t seed);

/// Throws InputError on a version mismatch or malformed content.
Checkpoint read_checkpoint(std::istream& is);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Text matrix format: a header line "# ghdo-matrix <rows> <cols>" followed
/// by one line per row of "re im" pairs.
void write_matrix(std::ostream& os, const DenseMatrix& m);
DenseMatrix read_matrix(std::istream& is);

}  // namespace ghdo
