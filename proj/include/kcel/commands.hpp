#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kcel/cache.hpp"
#include "kcel/config.hpp"
#include "kcel/errors.hpp"

namespace kcel {

/// Process exit codes: 0 success, 2 validation or configuration failure,
/// 3 numeric failure during a computation, 4 I/O or unreadable cache.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

int exit_code_for(ErrorKind kind);

/// Environment variable naming the default cache directory.
inline constexpr const char* kCacheDirEnv = "KCEL_CACHE_DIR";

Partition config_partition(const RunConfig& cfg);

/// paths.cache when set, otherwise a content-derived file name inside
/// $KCEL_CACHE_DIR (or ./kcel-cache).
std::filesystem::path resolve_cache_path(const RunConfig& cfg);

struct PrecomputeSummary {
  std::filesystem::path cache_path;
  std::size_t collision_blocks = 0;
  double max_abs_b = 0.0;
  double max_std_error = 0.0;
  double max_condition = 0.0;
};

PrecomputeSummary cmd_precompute(const RunConfig& cfg, std::ostream& log);

struct RunSummary {
  std::filesystem::path trajectory_csv;
  std::filesystem::path report_json;
  ConservationReport report;
  double cfl_number = 0.0;
};

/// Loads the cache (HashMismatch when it belongs to another partition),
/// builds the initial state and writes trajectory.csv and conservation.json
/// into paths.output.
RunSummary cmd_run(const RunConfig& cfg, std::ostream& log);

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
  std::string table() const;
};

/// Invariant suite on an in-memory bundle: dual orthonormality against the
/// quadrature oracle, drift consistency and spectra, telescoping sums,
/// cutoff invariance of sampled collisions, finiteness.
ValidationReport validate_bundle(const Precomputed& pc);

/// Loads the cache for `cfg` and runs validate_bundle. Refuses (HashMismatch)
/// when the cache partition differs from the configured one.
ValidationReport cmd_validate(const RunConfig& cfg, std::ostream& log);

/// Reads a CSV holding N_<alpha>_<j> columns (t and x optional) and writes
/// t, x, rho, u1, u2, u3, T, energy per row.
void cmd_moments(const std::filesystem::path& input, const std::filesystem::path& output);

/// Initial state for a homogeneous run.
StateHomogeneous initial_homogeneous(const RunConfig& cfg, const Partition& p);
/// Initial field for a slab run.
StateField1D initial_slab(const RunConfig& cfg, const Partition& p);

std::string trajectory_csv_header(int velocity_cells, bool dump_raw);
/// One CSV line (no newline) for a spatial point; density at or below the
/// floor prints nan for u and T.
std::string trajectory_csv_row(double t, double x, std::span<const double> values, bool dump_raw);

}  // namespace kcel
