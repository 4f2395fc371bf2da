#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "kcel/basis.hpp"
#include "kcel/coefficients.hpp"
#include "kcel/geometry.hpp"
#include "kcel/kinematics.hpp"

namespace kcel {

inline constexpr std::uint32_t kCacheVersion = 1;

/// Everything a run needs: partition, dual basis, drift and collision tensors,
/// plus the settings that produced them.
struct Precomputed {
  Partition partition;
  ScatteringModel model;
  double energy_cap = 0.0;
  double condition_threshold = kDefaultConditionThreshold;
  DualSet duals;
  DriftTensor drift;
  CollisionTensor collision;
};

/// Builds duals, drift and Monte Carlo collision tensors.
Precomputed precompute(const Partition& p, const ScatteringModel& model, const McConfig& mc,
                       double condition_threshold = kDefaultConditionThreshold);

/// File name derived from the partition digest and every setting that
/// changes the tensors.
std::string cache_file_name(const Partition& p, const ScatteringModel& model, const McConfig& mc,
                            double condition_threshold);

/// Binary cache: magic "KCEL1", format version, partition text block,
/// settings text block, little-endian doubles and a payload checksum.
/// The bytes depend only on the content.
void save_cache(const std::filesystem::path& path, const Precomputed& pc);

/// Throws IoError (unreadable), CorruptFile (bad magic, truncation, checksum),
/// VersionMismatch and HashMismatch (geometry digest differs from the stored
/// one, or from `expected_hash` when given).
Precomputed load_cache(const std::filesystem::path& path, std::optional<std::uint64_t> expected_hash = std::nullopt);

}  // namespace kcel
