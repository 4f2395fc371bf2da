#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "kcel/geometry.hpp"

namespace kcel {

using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec5 = Eigen::Matrix<double, 5, 1>;

inline constexpr int kInvariants = 5;
inline constexpr double kDefaultConditionThreshold = 1e12;

/// psi_j for j = 0..4: {1, xi1, xi2, xi3, |xi|^2}. Throws on j outside 0..4.
double eval_psi(int j, const Vec3& xi);

inline Vec5 psi_vector(const Vec3& xi) {
  Vec5 v;
  v << 1.0, xi[0], xi[1], xi[2], norm2(xi);
  return v;
}

struct GramMatrix {
  int cell = 0;
  Mat5 entries = Mat5::Zero();
  /// Condition estimate of the preconditioned problem (see LocalFrame).
  double condition = 0.0;
};

/// Cell-centred, cell-scaled coordinates y = (xi - center) / scale with an
/// isotropic scale, so span{1, y, |y|^2} equals span{psi}. psi(xi) =
/// to_psi * phi(y) with phi = (1, y1, y2, y3, |y|^2).
struct LocalFrame {
  Vec3 center;
  double scale = 1.0;
  Mat5 to_psi = Mat5::Identity();
  Mat5 from_psi = Mat5::Identity();
  Cell local_box;

  explicit LocalFrame(const Cell& c);
  LocalFrame() = default;

  Vec3 to_local(const Vec3& xi) const { return (1.0 / scale) * (xi - center); }

  /// Integral over the cell (xi-measure) of phi phi^T y1^e0 y2^e1 y3^e2.
  Mat5 phi_gram(int e0 = 0, int e1 = 0, int e2 = 0) const;
  /// Integral over the cell (xi-measure) of phi y1^e0 y2^e1 y3^e2.
  Vec5 phi_moment(int e0 = 0, int e1 = 0, int e2 = 0) const;
};

inline Vec5 phi_vector(const Vec3& y) { return psi_vector(y); }

/// G_ij = integral over the cell of psi_i psi_j, from exact monomial moments.
GramMatrix gram(const Cell& c);

/// Dual functions eta_i = sum_p coeffs(i, p) psi_p with
/// integral(eta_i psi_j) = delta_ij over the cell. Evaluation goes through the
/// local frame, which stays accurate for small cells far from the origin.
struct DualBasis {
  int cell = 0;
  Mat5 coeffs = Mat5::Zero();
  Vec3 center;
  double scale = 1.0;
  /// eta(xi) = local_coeffs * phi((xi - center) / scale).
  Mat5 local_coeffs = Mat5::Zero();
  double condition = 0.0;

  Vec5 eval(const Vec3& xi) const {
    const Vec3 y = (1.0 / scale) * (xi - center);
    return local_coeffs * phi_vector(y);
  }
  double eval(int i, const Vec3& xi) const { return eval(xi)(i); }
};

/// Throws IllConditionedCell when the condition estimate exceeds the threshold.
DualBasis build_dual_basis(const Cell& c, double condition_threshold = kDefaultConditionThreshold);

/// max_ij |integral(eta_i psi_j) - delta_ij| from exact moments.
double orthonormality_residual(const Cell& c, const DualBasis& d);

struct DualSet {
  std::uint64_t partition_hash = 0;
  std::vector<DualBasis> cells;

  const DualBasis& operator[](int alpha) const { return cells[static_cast<std::size_t>(alpha)]; }
  int size() const { return static_cast<int>(cells.size()); }
};

DualSet build_duals(const Partition& p, double condition_threshold = kDefaultConditionThreshold);

}  // namespace kcel
