#pragma once

#include <string>
#include <utility>

#include "kcel/vec3.hpp"

namespace kcel {

enum class ModelKind { HardSphere, VariableHardSphere };

const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

/// Scattering rate B(|V|) = C |V|^nu, isotropic in the scattering direction.
/// The delta-reduction Jacobian and any normalisation of the interaction law
/// are absorbed into C.
struct ScatteringModel {
  ModelKind kind = ModelKind::HardSphere;
  double rate_constant = 1.0;
  double exponent = 1.0;

  static ScatteringModel hard_sphere(double c = 1.0) { return {ModelKind::HardSphere, c, 1.0}; }
  static ScatteringModel vhs(double c, double nu) { return {ModelKind::VariableHardSphere, c, nu}; }

  /// Throws InvalidArgument unless C > 0, nu in [0, 1], and nu == 1 for hard spheres.
  void validate() const;
};

struct CollisionSample {
  Vec3 xi;
  Vec3 xi_star;
  Vec3 omega;
  Vec3 xi_post;
  Vec3 xi_star_post;
};

/// xi' = (xi + xi*)/2 + |V|/2 omega, xi*' = (xi + xi*)/2 - |V|/2 omega.
std::pair<Vec3, Vec3> post_collision(const Vec3& xi, const Vec3& xi_star, const Vec3& omega);

CollisionSample make_collision(const Vec3& xi, const Vec3& xi_star, const Vec3& omega);

/// 1 if |xi|^2 + |xi*|^2 <= E (closed inequality), else 0.
inline int chi_E(const Vec3& xi, const Vec3& xi_star, double energy_cap) {
  return norm2(xi) + norm2(xi_star) <= energy_cap ? 1 : 0;
}

double rate_B(const ScatteringModel& model, const Vec3& xi, const Vec3& xi_star);

/// B as a function of the relative speed |V|.
double rate_B_speed(const ScatteringModel& model, double relative_speed);

/// Uniform direction on the unit sphere from two uniforms in [0, 1).
Vec3 sphere_direction(double u, double v);

}  // namespace kcel
