#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "kcel/basis.hpp"
#include "kcel/geometry.hpp"
#include "kcel/kinematics.hpp"

namespace kcel {

/// Per-cell drift arrays. axis(l)(k, j) = [a_kj]_l = integral over the cell of
/// eta_k xi_l psi_j, with k the representation index and j the projected
/// test-function index.
struct DriftBlock {
  std::array<Mat5, 3> axis{Mat5::Zero(), Mat5::Zero(), Mat5::Zero()};
};

struct DriftTensor {
  std::uint64_t partition_hash = 0;
  std::vector<DriftBlock> blocks;

  int size() const { return static_cast<int>(blocks.size()); }
  /// Transport matrix M_jk(e) = a_kj . e: flux of N_j is sum_k M_jk N_k.
  Mat5 transport_matrix(int alpha, const Vec3& direction) const;
};

DriftBlock drift_block(const Cell& c, const DualBasis& dual);
DriftTensor drift_tensor(const Partition& p, const DualSet& duals);

/// Flat index of b_jkn inside a 5x5x5 block.
constexpr int bidx(int j, int k, int n) { return (j * 5 + k) * 5 + n; }
inline constexpr int kBlockSize = 125;

struct CollisionBlock {
  int alpha = 0;
  int beta = 0;
  int gamma = 0;
  std::array<double, kBlockSize> value{};
  /// Standard error of each entry; zero for deterministic sources.
  std::array<double, kBlockSize> std_error{};
};

enum class TensorSource : std::uint32_t { MonteCarlo = 1, Quadrature = 2 };

struct McConfig {
  std::uint64_t seed = 20240101;
  std::int64_t samples_per_pair = 10000;
  /// Reporting only.
  double target_relative_error = 0.01;
  /// 0 means one worker per hardware thread.
  int workers = 0;

  void validate() const;
};

/// Sparse b^(alpha beta gamma)_jkn. Blocks are sorted by (beta, gamma, alpha)
/// and exist only where at least one sample (or quadrature node) touched them.
struct CollisionTensor {
  std::uint64_t partition_hash = 0;
  int cells = 0;
  TensorSource source = TensorSource::MonteCarlo;
  std::uint64_t seed = 0;
  std::int64_t samples_per_pair = 0;
  double target_relative_error = 0.0;
  std::vector<CollisionBlock> blocks;

  const CollisionBlock* find(int alpha, int beta, int gamma) const;
  double entry(int alpha, int beta, int gamma, int j, int k, int n) const;
  double max_abs() const;
};

/// Conservative Monte Carlo estimate. Each ordered pair (beta, gamma) draws
/// its own deterministic stream from (seed, beta, gamma); every accepted
/// sample scatters into the cells of xi', xi*', xi, xi* with signs
/// (+, +, -, -), so summing a block column over alpha cancels per sample.
CollisionTensor collision_tensor_mc(const Partition& p, const DualSet& duals, const ScatteringModel& model,
                                    double energy_cap, const McConfig& cfg);

/// Smallest |xi|^2 over a box.
double min_norm2(const Cell& c);

/// True when some (xi, xi*) in C_beta x C_gamma satisfies the energy cutoff.
bool pair_reachable(const Cell& beta, const Cell& gamma, double energy_cap);

/// Per-pair stream seed.
std::uint64_t pair_seed(std::uint64_t seed, int beta, int gamma);

}  // namespace kcel
