#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kcel/vec3.hpp"

namespace kcel {

/// Truncated velocity domain: the energy cap E and the cube [-h, h]^3 that
/// holds the ball |xi|^2 <= E. A box-list partition carries n_per_axis = 0.
struct DomainSpec {
  double energy_cap = 0.0;
  int n_per_axis = 0;
  double half_width = 0.0;

  /// Builds a uniform domain spec with h = sqrt(E); throws InvalidArgument on
  /// E <= 0 or n < 1.
  static DomainSpec uniform(double energy_cap, int n_per_axis);
};

/// Axis-aligned box cell. Membership is half-open, [lower, upper) per axis.
struct Cell {
  int index = 0;
  Vec3 lower;
  Vec3 upper;

  double volume() const;
  Vec3 center() const;
  Vec3 extent() const { return upper - lower; }
  bool contains(const Vec3& xi) const;
};

/// A disjoint box tiling of the velocity domain. Immutable after construction.
class Partition {
 public:
  /// Box-list constructor. The boxes must be pairwise disjoint, tile their
  /// bounding box exactly, and the bounding box must contain the ball of
  /// radius sqrt(energy_cap).
  static Partition from_boxes(double energy_cap, const std::vector<std::pair<Vec3, Vec3>>& boxes);

  const DomainSpec& domain() const { return domain_; }
  double energy_cap() const { return domain_.energy_cap; }
  const std::vector<Cell>& cells() const { return cells_; }
  const Cell& cell(int alpha) const { return cells_[static_cast<std::size_t>(alpha)]; }
  int size() const { return static_cast<int>(cells_.size()); }
  bool is_uniform() const { return domain_.n_per_axis > 0; }
  const Vec3& lower() const { return lower_; }
  const Vec3& upper() const { return upper_; }
  std::uint64_t hash() const { return hash_; }
  /// 16 hex digits of the geometry digest.
  std::string content_hash() const;

  /// Unique cell containing xi, or nullopt outside the domain. Interior faces
  /// are half-open; the outer upper faces of the domain are closed so that
  /// every point of the closed cube has exactly one owner.
  std::optional<int> locate(const Vec3& xi) const;

  /// Like locate(), after clamping xi into the closed domain cube. Used for
  /// post-collision points that leave the cube by an ulp.
  int locate_clamped(const Vec3& xi) const;

  /// Structured text block (domain spec, cell corners, content hash).
  std::string to_text() const;
  /// Parses to_text() output; throws HashMismatch if the stored hash does
  /// not match the geometry, CorruptFile on malformed input.
  static Partition from_text(const std::string& text);

 private:
  friend Partition build_uniform_partition(const DomainSpec& spec);
  Partition(DomainSpec domain, std::vector<Cell> cells);

  DomainSpec domain_;
  std::vector<Cell> cells_;
  Vec3 lower_;
  Vec3 upper_;
  std::uint64_t hash_ = 0;
};

Partition build_uniform_partition(const DomainSpec& spec);

inline std::optional<int> locate_cell(const Partition& p, const Vec3& xi) { return p.locate(xi); }

/// Exact integral of xi1^p xi2^q xi3^r over the box.
double box_monomial_moment(const Cell& c, int p, int q, int r);

/// Integral of x^p over [lo, hi].
double interval_power_integral(double lo, double hi, int p);

}  // namespace kcel
