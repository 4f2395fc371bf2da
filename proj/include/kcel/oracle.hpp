#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "kcel/basis.hpp"
#include "kcel/coefficients.hpp"
#include "kcel/geometry.hpp"
#include "kcel/kinematics.hpp"

namespace kcel {

/// Orders for the reference integrators. The cost guard applies to the
/// total node count of a single call.
struct QuadratureSpec {
  /// Gauss-Legendre points per axis for cell grids.
  int gauss_order = 6;
  /// Sphere grid: Gauss points in cos(theta), twice as many in phi.
  int sphere_order = 8;
  /// Tanh-sinh points per panel for the outer radial integrals of the
  /// exact-geometry collision integrator.
  int outer_order = 31;
  int max_cells = 8;
  double max_nodes = 5e10;

  void validate() const;
  QuadratureSpec doubled() const;
};

struct Monomial {
  double coef = 1.0;
  int p = 0, q = 0, r = 0;
};

/// Tensor-grid Gauss integral over the box, exact for polynomials up to
/// degree 2 * order - 1 per axis.
double oracle_cell_integral(const Cell& c, const std::function<double(const Vec3&)>& integrand, int degree);
double oracle_cell_integral(const Cell& c, const std::vector<Monomial>& poly);

/// Integral over the box of a Maxwellian (rho, u, T) times psi_j, from
/// per-axis truncated-Gaussian moments built by the integration-by-parts
/// recurrence in raw coordinates. Infinite box bounds are allowed.
double oracle_gaussian_moment(const Cell& c, double rho, const Vec3& u, double temperature, int j);

enum class CollisionQuadrature {
  /// Exact slab geometry when the partition allows it, else tensor grid.
  Automatic,
  /// Cells are slabs along one axis covering the cutoff ball in the other
  /// two; integrates in centre-of-mass / relative coordinates with every
  /// discontinuity (energy cutoff, cell faces, cap edges) resolved exactly.
  Slab,
  /// Gauss nodes over C_beta x C_gamma and a product sphere grid.
  TensorGrid,
};

/// Axis along which every cell is a slab that spans the cutoff ball in the
/// two transverse axes, if any.
std::optional<int> slab_axis(const Partition& p, double energy_cap);

/// All entries of the blocks (alpha, beta, gamma), alpha = 0..N-1, for one
/// ordered pair. Returned in alpha order, zero blocks included.
std::vector<CollisionBlock> oracle_collision_pair(const Partition& p, const DualSet& duals,
                                                  const ScatteringModel& model, double energy_cap, int beta,
                                                  int gamma, const QuadratureSpec& spec,
                                                  CollisionQuadrature mode = CollisionQuadrature::Automatic);

double oracle_collision_entry(const Partition& p, const DualSet& duals, const ScatteringModel& model,
                              double energy_cap, int alpha, int beta, int gamma, int j, int k, int n,
                              const QuadratureSpec& spec, CollisionQuadrature mode = CollisionQuadrature::Automatic);

/// Deterministic dense-quadrature collision tensor (test oracle). Throws
/// CostGuard when N exceeds spec.max_cells.
CollisionTensor collision_tensor_quadrature(const Partition& p, const DualSet& duals, const ScatteringModel& model,
                                            double energy_cap, const QuadratureSpec& spec,
                                            CollisionQuadrature mode = CollisionQuadrature::Automatic);

}  // namespace kcel
