#include "kcel/basis.hpp"

#include <cmath>
#include <string>

#include "kcel/errors.hpp"

namespace kcel {

using Mat5L = Eigen::Matrix<long double, 5, 5>;
using Vec5L = Eigen::Matrix<long double, 5, 1>;
namespace {

// phi_a as a short list of monomials in y.
struct Term {
  double coef;
  int e[3];
};
using Poly = std::vector<Term>;

const std::array<Poly, 5>& phi_polys() {
  static const std::array<Poly, 5> polys = {
      Poly{{1.0, {0, 0, 0}}},
      Poly{{1.0, {1, 0, 0}}},
      Poly{{1.0, {0, 1, 0}}},
      Poly{{1.0, {0, 0, 1}}},
      Poly{{1.0, {2, 0, 0}}, {1.0, {0, 2, 0}}, {1.0, {0, 0, 2}}},
  };
  return polys;
}

double product_moment(const Cell& box, const Poly& a, const Poly& b, const int extra[3]) {
  double sum = 0.0;
  for (const auto& ta : a)
    for (const auto& tb : b)
      sum += ta.coef * tb.coef *
             box_monomial_moment(box, ta.e[0] + tb.e[0] + extra[0], ta.e[1] + tb.e[1] + extra[1],
                                 ta.e[2] + tb.e[2] + extra[2]);
  return sum;
}

double two_norm_condition(const Mat5& m) {
  Eigen::JacobiSVD<Mat5> svd(m);
  const auto& s = svd.singularValues();
  return s(0) / s(4);
}

}  // namespace

double eval_psi(int j, const Vec3& xi) {
  switch (j) {
    case 0: return 1.0;
    case 1: return xi[0];
    case 2: return xi[1];
    case 3: return xi[2];
    case 4: return norm2(xi);
    default: throw InvalidArgument("invariant index " + std::to_string(j) + " outside 0..4");
  }
}

LocalFrame::LocalFrame(const Cell& c) : center(c.center()) {
  const Vec3 half = 0.5 * c.extent();
  scale = std::max({half[0], half[1], half[2]});
  local_box.index = c.index;
  local_box.lower = to_local(c.lower);
  local_box.upper = to_local(c.upper);

  to_psi = Mat5::Zero();
  to_psi(0, 0) = 1.0;
  for (int l = 0; l < 3; ++l) {
    to_psi(1 + l, 0) = center[l];
    to_psi(1 + l, 1 + l) = scale;
    to_psi(4, 1 + l) = 2.0 * scale * center[l];
  }
  to_psi(4, 0) = norm2(center);
  to_psi(4, 4) = scale * scale;

  from_psi = Mat5::Zero();
  from_psi(0, 0) = 1.0;
  for (int l = 0; l < 3; ++l) {
    from_psi(1 + l, 0) = -center[l] / scale;
    from_psi(1 + l, 1 + l) = 1.0 / scale;
    from_psi(4, 1 + l) = -2.0 * center[l] / (scale * scale);
  }
  from_psi(4, 0) = norm2(center) / (scale * scale);
  from_psi(4, 4) = 1.0 / (scale * scale);
}

Mat5 LocalFrame::phi_gram(int e0, int e1, int e2) const {
  const auto& polys = phi_polys();
  const int extra[3] = {e0, e1, e2};
  const double jac = scale * scale * scale;
  Mat5 g;
  for (int a = 0; a < 5; ++a)
    for (int b = a; b < 5; ++b) {
      g(a, b) = jac * product_moment(local_box, polys[static_cast<std::size_t>(a)],
                                     polys[static_cast<std::size_t>(b)], extra);
      g(b, a) = g(a, b);
    }
  return g;
}

Vec5 LocalFrame::phi_moment(int e0, int e1, int e2) const {
  const auto& polys = phi_polys();
  const int extra[3] = {e0, e1, e2};
  const Poly one{{1.0, {0, 0, 0}}};
  const double jac = scale * scale * scale;
  Vec5 v;
  for (int a = 0; a < 5; ++a) v(a) = jac * product_moment(local_box, polys[static_cast<std::size_t>(a)], one, extra);
  return v;
}

GramMatrix gram(const Cell& c) {
  const Vec3 e = c.extent();
  if (!(e[0] > 0 && e[1] > 0 && e[2] > 0)) throw InvalidArgument("gram: cell has non-positive volume");
  static const std::array<Poly, 5> psi = phi_polys();
  const int none[3] = {0, 0, 0};
  GramMatrix g;
  g.cell = c.index;
  for (int a = 0; a < 5; ++a)
    for (int b = a; b < 5; ++b) {
      g.entries(a, b) = product_moment(c, psi[static_cast<std::size_t>(a)], psi[static_cast<std::size_t>(b)], none);
      g.entries(b, a) = g.entries(a, b);
    }
  const LocalFrame frame(c);
  const Mat5 gy = frame.phi_gram();
  const Vec5 d = gy.diagonal().cwiseSqrt().cwiseInverse();
  g.condition = two_norm_condition(d.asDiagonal() * gy * d.asDiagonal());
  return g;
}

DualBasis build_dual_basis(const Cell& c, double condition_threshold) {
  const Vec3 e = c.extent();
  if (!(e[0] > 0 && e[1] > 0 && e[2] > 0)) throw InvalidArgument("dual basis: cell has non-positive volume");
  const LocalFrame frame(c);
  const Mat5 gy = frame.phi_gram();
  const Vec5 d = gy.diagonal().cwiseSqrt().cwiseInverse();
  const Mat5 scaled = d.asDiagonal() * gy * d.asDiagonal();
  // The inversion happens in the local frame, so its conditioning is what
  // limits accuracy; evaluation never goes through the raw coefficients.
  const double condition = two_norm_condition(scaled);
  if (!(condition <= condition_threshold))
    throw IllConditionedCell("cell " + std::to_string(c.index) + ": condition estimate " + std::to_string(condition) +
                             " exceeds " + std::to_string(condition_threshold));

  const Eigen::LDLT<Mat5L> ldlt(scaled.cast<long double>());
  const Vec5L dl = d.cast<long double>();
  const Mat5L gy_inv = dl.asDiagonal() * ldlt.solve(Mat5L::Identity()) * dl.asDiagonal();

  DualBasis out;
  out.cell = c.index;
  out.center = frame.center;
  out.scale = frame.scale;
  const Mat5L local = frame.from_psi.transpose().cast<long double>() * gy_inv;
  out.local_coeffs = local.cast<double>();
  out.coeffs = (local * frame.from_psi.cast<long double>()).cast<double>();
  out.condition = condition;
  return out;
}

double orthonormality_residual(const Cell& c, const DualBasis& d) {
  const LocalFrame frame(c);
  // integral(eta psi^T) = local_coeffs * integral(phi phi^T) * to_psi^T
  // Extended precision keeps the measurement itself below the tolerance.
  const Mat5L r = d.local_coeffs.cast<long double>() * frame.phi_gram().cast<long double>() *
                      frame.to_psi.transpose().cast<long double>() -
                  Mat5L::Identity();
  return static_cast<double>(r.cwiseAbs().maxCoeff());
}

DualSet build_duals(const Partition& p, double condition_threshold) {
  DualSet s;
  s.partition_hash = p.hash();
  s.cells.reserve(static_cast<std::size_t>(p.size()));
  for (const auto& c : p.cells()) s.cells.push_back(build_dual_basis(c, condition_threshold));
  return s;
}

}  // namespace kcel
