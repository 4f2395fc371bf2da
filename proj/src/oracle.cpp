#include "kcel/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "kcel/errors.hpp"
#include "kcel/quadrature.hpp"

namespace kcel {

void QuadratureSpec::validate() const {
  if (gauss_order < 2) throw InvalidArgument("quadrature gauss_order must be >= 2");
  if (sphere_order < 2) throw InvalidArgument("quadrature sphere_order must be >= 2");
  if (outer_order < 3 || outer_order % 2 == 0) throw InvalidArgument("quadrature outer_order must be odd and >= 3");
}

QuadratureSpec QuadratureSpec::doubled() const {
  QuadratureSpec s = *this;
  s.gauss_order *= 2;
  s.sphere_order *= 2;
  s.outer_order = 2 * outer_order - 1;
  return s;
}

double oracle_cell_integral(const Cell& c, const std::function<double(const Vec3&)>& integrand, int degree) {
  if (degree < 0 || degree > 64) throw CostGuard("cell integral degree must lie in 0..64");
  const int n = std::max(1, (degree + 2) / 2);
  const auto& rule = gauss_legendre(n);
  const Vec3 mid = c.center();
  const Vec3 half = 0.5 * c.extent();
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j), uk = static_cast<std::size_t>(k);
        const Vec3 x{mid[0] + half[0] * rule.nodes[ui], mid[1] + half[1] * rule.nodes[uj],
                     mid[2] + half[2] * rule.nodes[uk]};
        sum += rule.weights[ui] * rule.weights[uj] * rule.weights[uk] * integrand(x);
      }
  return sum * half[0] * half[1] * half[2];
}

double oracle_cell_integral(const Cell& c, const std::vector<Monomial>& poly) {
  int degree = 0;
  for (const auto& m : poly) {
    if (m.p < 0 || m.q < 0 || m.r < 0) throw InvalidArgument("monomial exponents must be nonnegative");
    degree = std::max({degree, m.p, m.q, m.r});
  }
  if (degree > 12) throw CostGuard("polynomial oracle supports per-axis degree <= 12");
  auto f = [&](const Vec3& x) {
    double s = 0.0;
    for (const auto& m : poly) s += m.coef * std::pow(x[0], m.p) * std::pow(x[1], m.q) * std::pow(x[2], m.r);
    return s;
  };
  return oracle_cell_integral(c, f, degree);
}

namespace {

struct AxisMoments {
  double m0, m1, m2;
};

// Integrals of x^p N(x; mu, sigma^2) over [lo, hi], p = 0, 1, 2.
AxisMoments truncated_gaussian(double lo, double hi, double mu, double sigma) {
  const double root2 = std::numbers::sqrt2;
  const double zl = (lo - mu) / (sigma * root2);
  const double zh = (hi - mu) / (sigma * root2);
  double m0;
  if (zl >= 0.0)
    m0 = 0.5 * (std::erfc(zl) - std::erfc(zh));
  else if (zh <= 0.0)
    m0 = 0.5 * (std::erfc(-zh) - std::erfc(-zl));
  else
    m0 = 0.5 * (std::erf(zh) - std::erf(zl));
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  auto density = [&](double x) {
    if (std::isinf(x)) return 0.0;
    const double d = (x - mu) / sigma;
    return norm * std::exp(-0.5 * d * d);
  };
  auto x_density = [&](double x) { return std::isinf(x) ? 0.0 : x * density(x); };
  const double s2 = sigma * sigma;
  const double m1 = mu * m0 - s2 * (density(hi) - density(lo));
  const double m2 = mu * m1 + s2 * m0 - s2 * (x_density(hi) - x_density(lo));
  return {m0, m1, m2};
}

}  // namespace

double oracle_gaussian_moment(const Cell& c, double rho, const Vec3& u, double temperature, int j) {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be > 0");
  const double sigma = std::sqrt(temperature);
  AxisMoments m[3];
  for (int i = 0; i < 3; ++i) m[i] = truncated_gaussian(c.lower[i], c.upper[i], u[i], sigma);
  switch (j) {
    case 0: return rho * m[0].m0 * m[1].m0 * m[2].m0;
    case 1: return rho * m[0].m1 * m[1].m0 * m[2].m0;
    case 2: return rho * m[0].m0 * m[1].m1 * m[2].m0;
    case 3: return rho * m[0].m0 * m[1].m0 * m[2].m1;
    case 4:
      return rho * (m[0].m2 * m[1].m0 * m[2].m0 + m[0].m0 * m[1].m2 * m[2].m0 + m[0].m0 * m[1].m0 * m[2].m2);
    default: throw InvalidArgument("invariant index " + std::to_string(j) + " outside 0..4");
  }
}

std::optional<int> slab_axis(const Partition& p, double energy_cap) {
  const double r = std::sqrt(energy_cap);
  for (int a = 0; a < 3; ++a) {
    bool ok = true;
    for (const auto& c : p.cells())
      for (int q = 0; q < 3; ++q)
        if (q != a && (c.lower[q] > -r || c.upper[q] < r)) ok = false;
    if (ok) return a;
  }
  return std::nullopt;
}

namespace {

using BlockAcc = std::vector<std::array<double, kBlockSize>>;

// Panels of [lo, hi] split at the given interior breakpoints.
std::vector<double> panel_edges(double lo, double hi, std::vector<double> breaks) {
  std::vector<double> edges{lo};
  std::sort(breaks.begin(), breaks.end());
  const double tol = 1e-13 * std::max(1.0, hi - lo);
  for (double b : breaks)
    if (b > edges.back() + tol && b < hi - tol) edges.push_back(b);
  edges.push_back(hi);
  return edges;
}

// Inner rules are exact for the polynomial dependence on the transverse
// coordinates and on the relative-velocity direction cosine.
constexpr int kInnerGauss = 5;
constexpr int kInnerAngles = 6;

void slab_pair(const Partition& p, const DualSet& duals, const ScatteringModel& model, double energy_cap, int beta,
               int gamma, const QuadratureSpec& spec, int axis, BlockAcc& acc) {
  const int N = p.size();
  const int ax = axis, ap = (axis + 1) % 3, aq = (axis + 2) % 3;
  const double r2 = 0.5 * energy_cap;
  const double rr = std::sqrt(r2);
  const Cell& cb = p.cell(beta);
  const Cell& cg = p.cell(gamma);
  const double lo_b = cb.lower[ax], hi_b = cb.upper[ax], lo_g = cg.lower[ax], hi_g = cg.upper[ax];

  std::vector<double> faces;
  for (const auto& c : p.cells()) {
    faces.push_back(c.lower[ax]);
    faces.push_back(c.upper[ax]);
  }
  std::sort(faces.begin(), faces.end());
  faces.erase(std::unique(faces.begin(), faces.end()), faces.end());

  const double cmin = std::max(-rr, 0.5 * (lo_b + lo_g));
  const double cmax = std::min(rr, 0.5 * (hi_b + hi_g));
  if (!(cmin < cmax)) return;

  std::vector<double> cbreaks;
  for (double f : faces) {
    cbreaks.push_back(f);
    for (double g : faces) cbreaks.push_back(0.5 * (f + g));
    if (energy_cap >= f * f) {
      const double d = std::sqrt(energy_cap - f * f);
      cbreaks.push_back(0.5 * (f + d));
      cbreaks.push_back(0.5 * (f - d));
    }
  }
  const auto cedges = panel_edges(cmin, cmax, cbreaks);

  const auto& outer = tanh_sinh(spec.outer_order);
  const auto& inner = gauss_legendre(kInnerGauss);
  const double dtheta = 2.0 * std::numbers::pi / kInnerAngles;
  double cosv[kInnerAngles], sinv[kInnerAngles];
  for (int i = 0; i < kInnerAngles; ++i) {
    cosv[i] = std::cos(dtheta * (i + 0.5));
    sinv[i] = std::sin(dtheta * (i + 0.5));
  }
  const double four_pi = 4.0 * std::numbers::pi;
  const DualBasis& db = duals[beta];
  const DualBasis& dg = duals[gamma];

  std::vector<double> a0(static_cast<std::size_t>(N)), a1(static_cast<std::size_t>(N));
  double loss_b[kBlockSize], loss_g[kBlockSize], q[25];

  for (std::size_t pc = 0; pc + 1 < cedges.size(); ++pc) {
    const double c0 = cedges[pc], c1 = cedges[pc + 1];
    const double cmid = 0.5 * (c0 + c1), chalf = 0.5 * (c1 - c0);
    for (int ic = 0; ic < outer.size(); ++ic) {
      const double c = cmid + chalf * outer.nodes[static_cast<std::size_t>(ic)];
      const double wc = chalf * outer.weights[static_cast<std::size_t>(ic)];
      const double l2 = r2 - c * c;
      if (!(l2 > 0.0)) continue;
      const double ll = std::sqrt(l2);
      std::vector<double> sbreaks;
      for (double f : faces) sbreaks.push_back(std::abs(f - c));
      const auto sedges = panel_edges(0.0, ll, sbreaks);

      for (std::size_t ps = 0; ps + 1 < sedges.size(); ++ps) {
        const double s0 = sedges[ps], s1 = sedges[ps + 1];
        const double smid = 0.5 * (s0 + s1), shalf = 0.5 * (s1 - s0);
        for (int is = 0; is < outer.size(); ++is) {
          const double s = smid + shalf * outer.nodes[static_cast<std::size_t>(is)];
          const double ws = shalf * outer.weights[static_cast<std::size_t>(is)];
          if (!(s > 0.0)) continue;
          double ulo = -1.0, uhi = 1.0;
          ulo = std::max({ulo, (lo_b - c) / s, (c - hi_g) / s});
          uhi = std::min({uhi, (hi_b - c) / s, (c - lo_g) / s});
          if (!(ulo < uhi)) continue;
          const double p2 = l2 - s * s;
          if (!(p2 > 0.0)) continue;
          const double pmax = std::sqrt(p2);
          const double bval = rate_B_speed(model, 2.0 * s);
          if (bval == 0.0) continue;

          // Band of the post-collision sphere inside each slab.
          bool any_gain = false;
          for (int a = 0; a < N; ++a) {
            const Cell& ca = p.cell(a);
            const double t1 = std::max(-1.0, (ca.lower[ax] - c) / s);
            const double t2 = std::min(1.0, (ca.upper[ax] - c) / s);
            const auto ua = static_cast<std::size_t>(a);
            if (t2 > t1) {
              a0[ua] = 2.0 * std::numbers::pi * (t2 - t1);
              a1[ua] = std::numbers::pi * (t2 * t2 - t1 * t1);
              any_gain = true;
            } else {
              a0[ua] = a1[ua] = 0.0;
            }
          }

          const double w_outer = 8.0 * wc * ws * s * s * bval * dtheta * dtheta;
          const double uhalf = 0.5 * (uhi - ulo), umid = 0.5 * (uhi + ulo);
          std::fill(std::begin(loss_b), std::end(loss_b), 0.0);
          std::fill(std::begin(loss_g), std::end(loss_g), 0.0);

          for (int ir = 0; ir < inner.size(); ++ir) {
            const double rho_c = 0.5 * pmax * (1.0 + inner.nodes[static_cast<std::size_t>(ir)]);
            const double wr = 0.5 * pmax * inner.weights[static_cast<std::size_t>(ir)] * rho_c;
            for (int tc = 0; tc < kInnerAngles; ++tc) {
              const double cp = rho_c * cosv[tc], cq = rho_c * sinv[tc];
              std::fill(std::begin(q), std::end(q), 0.0);
              for (int iu = 0; iu < inner.size(); ++iu) {
                const double u = umid + uhalf * inner.nodes[static_cast<std::size_t>(iu)];
                const double wu = uhalf * inner.weights[static_cast<std::size_t>(iu)] * wr;
                const double ga = s * u;
                const double rho_g = s * std::sqrt(std::max(0.0, 1.0 - u * u));
                for (int tg = 0; tg < kInnerAngles; ++tg) {
                  const double gp = rho_g * cosv[tg], gq = rho_g * sinv[tg];
                  Vec3 xi, xs;
                  xi[ax] = c + ga;
                  xi[ap] = cp + gp;
                  xi[aq] = cq + gq;
                  xs[ax] = c - ga;
                  xs[ap] = cp - gp;
                  xs[aq] = cq - gq;
                  const Vec5 e = db.eval(xi);
                  const Vec5 es = dg.eval(xs);
                  const Vec5 pi = psi_vector(xi);
                  const Vec5 ps_ = psi_vector(xs);
                  for (int k = 0; k < 5; ++k) {
                    const double ek = wu * e(k);
                    for (int n = 0; n < 5; ++n) {
                      const double pkn = ek * es(n);
                      q[k * 5 + n] += pkn;
                      for (int j = 0; j < 5; ++j) {
                        loss_b[bidx(j, k, n)] += pi(j) * pkn;
                        loss_g[bidx(j, k, n)] += ps_(j) * pkn;
                      }
                    }
                  }
                }
              }
              if (!any_gain) continue;
              const double c2 = c * c + rho_c * rho_c;
              for (int a = 0; a < N; ++a) {
                const auto ua = static_cast<std::size_t>(a);
                if (a0[ua] == 0.0) continue;
                double gain[5];
                gain[0] = a0[ua];
                double comp[3];
                comp[ax] = c * a0[ua] + s * a1[ua];
                comp[ap] = cp * a0[ua];
                comp[aq] = cq * a0[ua];
                gain[1] = comp[0];
                gain[2] = comp[1];
                gain[3] = comp[2];
                gain[4] = (c2 + s * s) * a0[ua] + 2.0 * s * c * a1[ua];
                auto& blk = acc[ua];
                for (int j = 0; j < 5; ++j) {
                  const double gj = 2.0 * gain[j] * w_outer;
                  for (int kn = 0; kn < 25; ++kn) blk[static_cast<std::size_t>(j * 25 + kn)] += gj * q[kn];
                }
              }
            }
          }
          auto& bb = acc[static_cast<std::size_t>(beta)];
          auto& bg = acc[static_cast<std::size_t>(gamma)];
          for (int i = 0; i < kBlockSize; ++i) {
            bb[static_cast<std::size_t>(i)] -= four_pi * w_outer * loss_b[i];
            bg[static_cast<std::size_t>(i)] -= four_pi * w_outer * loss_g[i];
          }
        }
      }
    }
  }
}

void tensor_pair(const Partition& p, const DualSet& duals, const ScatteringModel& model, double energy_cap,
                 int beta, int gamma, const QuadratureSpec& spec, BlockAcc& acc) {
  const int N = p.size();
  const int n = spec.gauss_order;
  const auto& rule = gauss_legendre(n);
  const auto& zrule = gauss_legendre(spec.sphere_order);
  const int nphi = 2 * spec.sphere_order;
  const double nodes = std::pow(static_cast<double>(n), 6) * zrule.size() * nphi;
  if (nodes > spec.max_nodes) throw CostGuard("tensor-grid collision quadrature exceeds node budget");

  std::vector<Vec3> omega;
  std::vector<double> womega;
  for (int iz = 0; iz < zrule.size(); ++iz)
    for (int ip = 0; ip < nphi; ++ip) {
      const double z = zrule.nodes[static_cast<std::size_t>(iz)];
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = 2.0 * std::numbers::pi * (ip + 0.5) / nphi;
      omega.push_back({r * std::cos(phi), r * std::sin(phi), z});
      womega.push_back(zrule.weights[static_cast<std::size_t>(iz)] * 2.0 * std::numbers::pi / nphi);
    }

  auto cell_nodes = [&](const Cell& c, std::vector<Vec3>& x, std::vector<double>& w) {
    const Vec3 mid = c.center(), half = 0.5 * c.extent();
    const double jac = half[0] * half[1] * half[2];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j), uk = static_cast<std::size_t>(k);
          x.push_back({mid[0] + half[0] * rule.nodes[ui], mid[1] + half[1] * rule.nodes[uj],
                       mid[2] + half[2] * rule.nodes[uk]});
          w.push_back(jac * rule.weights[ui] * rule.weights[uj] * rule.weights[uk]);
        }
  };
  std::vector<Vec3> xb, xg;
  std::vector<double> wb, wg;
  cell_nodes(p.cell(beta), xb, wb);
  cell_nodes(p.cell(gamma), xg, wg);

  const DualBasis& db = duals[beta];
  const DualBasis& dg = duals[gamma];
  const double four_pi = 4.0 * std::numbers::pi;
  std::vector<Vec5> bracket(static_cast<std::size_t>(N));
  std::vector<char> hit(static_cast<std::size_t>(N));

  for (std::size_t a = 0; a < xb.size(); ++a)
    for (std::size_t b = 0; b < xg.size(); ++b) {
      const Vec3& xi = xb[a];
      const Vec3& xs = xg[b];
      if (!chi_E(xi, xs, energy_cap)) continue;
      const double w = wb[a] * wg[b] * rate_B(model, xi, xs);
      if (w == 0.0) continue;
      std::fill(bracket.begin(), bracket.end(), Vec5::Zero());
      std::fill(hit.begin(), hit.end(), 0);
      for (std::size_t o = 0; o < omega.size(); ++o) {
        const auto [xp, xsp] = post_collision(xi, xs, omega[o]);
        const auto i1 = static_cast<std::size_t>(p.locate_clamped(xp));
        const auto i2 = static_cast<std::size_t>(p.locate_clamped(xsp));
        bracket[i1] += womega[o] * psi_vector(xp);
        bracket[i2] += womega[o] * psi_vector(xsp);
        hit[i1] = hit[i2] = 1;
      }
      bracket[static_cast<std::size_t>(beta)] -= four_pi * psi_vector(xi);
      bracket[static_cast<std::size_t>(gamma)] -= four_pi * psi_vector(xs);
      hit[static_cast<std::size_t>(beta)] = hit[static_cast<std::size_t>(gamma)] = 1;
      const Vec5 e = db.eval(xi);
      const Vec5 es = dg.eval(xs);
      double pkn[25];
      for (int k = 0; k < 5; ++k)
        for (int m = 0; m < 5; ++m) pkn[k * 5 + m] = w * e(k) * es(m);
      for (int al = 0; al < N; ++al) {
        const auto ua = static_cast<std::size_t>(al);
        if (!hit[ua]) continue;
        for (int j = 0; j < 5; ++j)
          for (int kn = 0; kn < 25; ++kn) acc[ua][static_cast<std::size_t>(j * 25 + kn)] += bracket[ua](j) * pkn[kn];
      }
    }
}

}  // namespace

std::vector<CollisionBlock> oracle_collision_pair(const Partition& p, const DualSet& duals,
                                                  const ScatteringModel& model, double energy_cap, int beta,
                                                  int gamma, const QuadratureSpec& spec, CollisionQuadrature mode) {
  spec.validate();
  model.validate();
  if (p.size() > spec.max_cells)
    throw CostGuard("collision quadrature limited to " + std::to_string(spec.max_cells) + " cells, partition has " +
                    std::to_string(p.size()));
  if (duals.partition_hash != p.hash() || duals.size() != p.size())
    throw HashMismatch("collision quadrature: dual basis set does not belong to partition " + p.content_hash());
  if (beta < 0 || gamma < 0 || beta >= p.size() || gamma >= p.size())
    throw InvalidArgument("cell index out of range");

  BlockAcc acc(static_cast<std::size_t>(p.size()));
  for (auto& b : acc) b.fill(0.0);

  if (pair_reachable(p.cell(beta), p.cell(gamma), energy_cap)) {
    const auto axis = slab_axis(p, energy_cap);
    if (mode == CollisionQuadrature::Slab && !axis)
      throw InvalidArgument("partition cells are not slabs spanning the cutoff ball");
    if (mode != CollisionQuadrature::TensorGrid && axis)
      slab_pair(p, duals, model, energy_cap, beta, gamma, spec, *axis, acc);
    else
      tensor_pair(p, duals, model, energy_cap, beta, gamma, spec, acc);
  }

  std::vector<CollisionBlock> out(static_cast<std::size_t>(p.size()));
  for (int a = 0; a < p.size(); ++a) {
    auto& b = out[static_cast<std::size_t>(a)];
    b.alpha = a;
    b.beta = beta;
    b.gamma = gamma;
    b.value = acc[static_cast<std::size_t>(a)];
  }
  return out;
}

double oracle_collision_entry(const Partition& p, const DualSet& duals, const ScatteringModel& model,
                              double energy_cap, int alpha, int beta, int gamma, int j, int k, int n,
                              const QuadratureSpec& spec, CollisionQuadrature mode) {
  if (alpha < 0 || alpha >= p.size()) throw InvalidArgument("cell index out of range");
  if (j < 0 || j > 4 || k < 0 || k > 4 || n < 0 || n > 4) throw InvalidArgument("invariant index outside 0..4");
  const auto blocks = oracle_collision_pair(p, duals, model, energy_cap, beta, gamma, spec, mode);
  return blocks[static_cast<std::size_t>(alpha)].value[static_cast<std::size_t>(bidx(j, k, n))];
}

CollisionTensor collision_tensor_quadrature(const Partition& p, const DualSet& duals, const ScatteringModel& model,
                                            double energy_cap, const QuadratureSpec& spec, CollisionQuadrature mode) {
  if (p.size() > spec.max_cells)
    throw CostGuard("collision quadrature limited to " + std::to_string(spec.max_cells) + " cells, partition has " +
                    std::to_string(p.size()));
  CollisionTensor t;
  t.partition_hash = p.hash();
  t.cells = p.size();
  t.source = TensorSource::Quadrature;
  for (int b = 0; b < p.size(); ++b)
    for (int g = 0; g < p.size(); ++g) {
      if (!pair_reachable(p.cell(b), p.cell(g), energy_cap)) continue;
      for (auto& blk : oracle_collision_pair(p, duals, model, energy_cap, b, g, spec, mode)) {
        const bool nonzero = std::any_of(blk.value.begin(), blk.value.end(), [](double v) { return v != 0.0; });
        if (nonzero) t.blocks.push_back(blk);
      }
    }
  return t;
}

}  // namespace kcel
