#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kcel/coefficients.hpp"
#include "kcel/kinematics.hpp"
#include "kcel/solver.hpp"

namespace kcel {

enum class RunKind { Homogeneous, Slab1D };
enum class InitialKind { Maxwellian, TwoBeam, Csv };

/// Sectioned key-value run description. Keys are `section.key`; see
/// README for the full table and defaults.
struct RunConfig {
  // [domain]
  double energy_cap = 9.0;
  int n_per_axis = 2;
  double condition_threshold = kDefaultConditionThreshold;
  // [model]
  ModelKind model = ModelKind::HardSphere;
  double rate_constant = 1.0;
  double exponent = 1.0;
  // [mc]
  std::uint64_t seed = 20240101;
  std::int64_t samples_per_pair = 10000;
  int workers = 0;
  // [run]
  RunKind run = RunKind::Homogeneous;
  double dt = 1e-3;
  std::int64_t steps = 100;
  std::int64_t output_every = 10;
  int axis = 0;
  double cfl = 0.9;
  bool enforce_cfl = true;
  bool dump_raw = false;
  // [initial]
  InitialKind initial = InitialKind::Maxwellian;
  double rho = 1.0;
  Vec3 velocity;
  double temperature = 1.0;
  /// Slab runs: relative Gaussian density bump at the domain centre.
  double bump_amplitude = 0.0;
  double bump_width = 0.1;
  /// Slab runs: temperature of the right half; <= 0 means same as the left.
  double temperature_right = 0.0;
  std::vector<int> beam_cells;
  std::vector<double> beam_weights;
  std::string initial_csv;
  // [grid]
  int grid_cells = 64;
  double dx = 1.0 / 64.0;
  Boundary boundary = Boundary::Periodic;
  // [paths]
  std::string cache;
  std::string output = "kcel-out";

  bool operator==(const RunConfig&) const = default;

  ScatteringModel scattering_model() const { return {model, rate_constant, exponent}; }
  McConfig mc_config() const;

  /// Throws ConfigError naming the offending `section.key`.
  void validate() const;
  std::string to_ini() const;
  static RunConfig from_ini(const std::string& text);
  static RunConfig load(const std::string& path);
};

const char* to_string(RunKind k);
const char* to_string(InitialKind k);

}  // namespace kcel
