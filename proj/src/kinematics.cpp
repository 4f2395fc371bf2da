#include "kcel/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kcel/errors.hpp"

namespace kcel {

const char* to_string(ModelKind k) {
  return k == ModelKind::HardSphere ? "hard-sphere" : "variable-hard-sphere";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "hard-sphere" || s == "hs") return ModelKind::HardSphere;
  if (s == "variable-hard-sphere" || s == "vhs") return ModelKind::VariableHardSphere;
  throw InvalidArgument("unknown scattering model kind '" + s + "'");
}

void ScatteringModel::validate() const {
  if (!(rate_constant > 0.0) || !std::isfinite(rate_constant)) throw InvalidArgument("rate_constant must be > 0");
  if (!(exponent >= 0.0 && exponent <= 1.0)) throw InvalidArgument("exponent must lie in [0, 1]");
  if (kind == ModelKind::HardSphere && exponent != 1.0)
    throw InvalidArgument("hard-sphere model requires exponent = 1");
}

std::pair<Vec3, Vec3> post_collision(const Vec3& xi, const Vec3& xi_star, const Vec3& omega) {
  const Vec3 mid = 0.5 * (xi + xi_star);
  const double half_speed = 0.5 * norm(xi - xi_star);
  const Vec3 d = half_speed * omega;
  return {mid + d, mid - d};
}

CollisionSample make_collision(const Vec3& xi, const Vec3& xi_star, const Vec3& omega) {
  auto [a, b] = post_collision(xi, xi_star, omega);
  return {xi, xi_star, omega, a, b};
}

double rate_B_speed(const ScatteringModel& model, double relative_speed) {
  if (model.exponent == 1.0) return model.rate_constant * relative_speed;
  if (model.exponent == 0.0) return model.rate_constant;
  return model.rate_constant * std::pow(relative_speed, model.exponent);
}

double rate_B(const ScatteringModel& model, const Vec3& xi, const Vec3& xi_star) {
  return rate_B_speed(model, norm(xi - xi_star));
}

Vec3 sphere_direction(double u, double v) {
  const double z = 2.0 * u - 1.0;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = 2.0 * std::numbers::pi * v;
  return {r * std::cos(phi), r * std::sin(phi), z};
}

}  // namespace kcel
