#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kcel/basis.hpp"
#include "kcel/coefficients.hpp"
#include "kcel/geometry.hpp"

namespace kcel {

inline constexpr double kDensityFloor = 1e-300;

/// Density rho, bulk velocity u, energy = sum_alpha N_alpha4 (the |xi|^2
/// moment, i.e. twice the kinetic energy density) and temperature T with
/// 3 rho T = energy - rho |u|^2 (m = k_B = 1).
struct MacroFields {
  double density = 0.0;
  Vec3 velocity;
  double energy = 0.0;
  double temperature = 0.0;
};

/// N_{alpha, j} for one spatial point, stored alpha-major (5 per cell).
struct StateHomogeneous {
  std::uint64_t partition_hash = 0;
  int cells = 0;
  std::vector<double> values;

  StateHomogeneous() = default;
  StateHomogeneous(std::uint64_t hash, int n) : partition_hash(hash), cells(n), values(5 * static_cast<std::size_t>(n), 0.0) {}

  double& operator()(int alpha, int j) { return values[static_cast<std::size_t>(5 * alpha + j)]; }
  double operator()(int alpha, int j) const { return values[static_cast<std::size_t>(5 * alpha + j)]; }
};

/// Sums over alpha of N_{alpha, j}: mass, momentum, |xi|^2 moment.
std::array<double, 5> invariant_sums(std::span<const double> values);

MacroFields macroscopic_fields(std::span<const double> values);
inline MacroFields macroscopic_fields(const StateHomogeneous& s) { return macroscopic_fields(s.values); }

/// N_{alpha, j} = integral over C_alpha of a Maxwellian (rho, u, T) times psi_j,
/// from closed-form per-axis Gaussian partial moments.
StateHomogeneous project_maxwellian(const Partition& p, double rho, const Vec3& u, double temperature);

/// Uniform density inside each listed cell, scaled so that N_{alpha, 0} = weight.
StateHomogeneous two_beam_state(const Partition& p, const std::vector<int>& cells, const std::vector<double>& weights);

/// Diagonal second moments integral(xi_l^2 f) - rho u_l^2 per axis, with f
/// reconstructed in each cell as sum_i N_{alpha, i} eta_{alpha, i}.
std::array<double, 3> directional_pressures(const Partition& p, const DualSet& duals, std::span<const double> values);

/// max_l |P_ll - p| / p with p the mean of the diagonal.
double pressure_anisotropy(const std::array<double, 3>& pressures);

/// dN_{alpha, j}/dt = 1/2 sum b_jkn N_{beta, k} N_{gamma, n}. `out` is overwritten.
void collision_rhs(std::span<const double> values, const CollisionTensor& b, std::span<double> out);
StateHomogeneous rhs_homogeneous(const StateHomogeneous& s, const CollisionTensor& b);

using RhsFunction = std::function<void(std::span<const double>, std::span<double>)>;

/// Classical four-stage Runge-Kutta step. Throws NonFiniteState.
std::vector<double> rk4_step(std::span<const double> y, const RhsFunction& rhs, double dt);
StateHomogeneous rk4_step(const StateHomogeneous& s, const RhsFunction& rhs, double dt);

struct ConservationReport {
  std::array<double, 5> initial{};
  std::array<double, 5> final_sums{};
  /// max over recorded steps of |S_j(t) - S_j(0)|.
  std::array<double, 5> max_abs_drift{};
  /// max_abs_drift / (1 + |S_j(0)|).
  std::array<double, 5> max_rel_drift{};
  std::int64_t steps = 0;

  void observe(const std::array<double, 5>& sums);
  double worst() const;
  std::string to_json() const;
};

struct Snapshot {
  std::int64_t step = 0;
  double t = 0.0;
  std::vector<double> values;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  ConservationReport report;
};

/// Integrates the homogeneous system. Snapshots every `output_every` steps
/// plus the initial and final states. NonFiniteState names the step.
Trajectory run_homogeneous(const StateHomogeneous& s0, const CollisionTensor& b, double dt, std::int64_t steps,
                           std::int64_t output_every);

enum class Boundary { Periodic, Copy };

const char* to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

struct Grid1D {
  int cells = 0;
  double dx = 0.0;
  Boundary boundary = Boundary::Periodic;

  double x(int m) const { return (m + 0.5) * dx; }
};

/// N_{alpha, j}(x_m), spatial-major: values[(m * N + alpha) * 5 + j].
struct StateField1D {
  Grid1D grid;
  std::uint64_t partition_hash = 0;
  int velocity_cells = 0;
  std::vector<double> values;

  StateField1D() = default;
  StateField1D(Grid1D g, std::uint64_t hash, int n)
      : grid(g), partition_hash(hash), velocity_cells(n),
        values(static_cast<std::size_t>(g.cells) * 5 * static_cast<std::size_t>(n), 0.0) {}

  std::span<double> at(int m) {
    return {values.data() + static_cast<std::size_t>(m) * 5 * static_cast<std::size_t>(velocity_cells),
            5 * static_cast<std::size_t>(velocity_cells)};
  }
  std::span<const double> at(int m) const {
    return {values.data() + static_cast<std::size_t>(m) * 5 * static_cast<std::size_t>(velocity_cells),
            5 * static_cast<std::size_t>(velocity_cells)};
  }
};

/// Flux splitting of the per-cell transport matrices M = R Lambda R^-1 along
/// one velocity axis: M = A+ + A-. The eigenbasis comes from the cell
/// geometry and is checked against the drift tensor.
struct UpwindOperator {
  std::uint64_t partition_hash = 0;
  int axis = 0;
  std::vector<Mat5> plus;
  std::vector<Mat5> minus;
  std::vector<Eigen::Matrix<double, 5, 1>> eigenvalues;
  double max_speed = 0.0;

  /// Throws EigenFailure when the decomposition does not reproduce M to
  /// 1e-8 relative (e.g. a corrupted drift tensor with a complex spectrum).
  static UpwindOperator build(const DriftTensor& a, const Partition& p, int axis);
};

/// Upwind transport derivative -(F_{m+1/2} - F_{m-1/2}) / dx; overwrites out.
void rhs_transport_1d(const StateField1D& s, const UpwindOperator& op, std::span<double> out);

struct Run1DOptions {
  int axis = 0;
  double cfl = 0.9;
  /// Reject (throw CflViolation) when true, otherwise only report.
  bool enforce_cfl = true;
};

struct Trajectory1D {
  std::vector<Snapshot> snapshots;
  ConservationReport report;
  double cfl_number = 0.0;
};

/// RK4 on transport + collision right-hand side. `b` may be null for
/// collisionless streaming. Global sums are integrals sum_m sum_alpha N dx.
Trajectory1D run_1d(const StateField1D& s0, const Partition& p, const DriftTensor& a, const CollisionTensor* b, double dt,
                    std::int64_t steps, std::int64_t output_every, const Run1DOptions& opts = {});

std::array<double, 5> field_sums(const StateField1D& s);

}  // namespace kcel
