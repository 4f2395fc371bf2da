#include "kcel/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "kcel/errors.hpp"

namespace kcel {

namespace {

void check_finite(std::span<const double> v, const std::string& where) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw NonFiniteState(where + ": component " + std::to_string(i) + " is not finite");
    }
  }
}

// Probability mass and the first two standardized partial moments of a unit
// normal on [za, zb].
struct NormalMoments {
  double m0, m1, m2;
};

NormalMoments normal_moments(double za, double zb) {
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  double mass;
  if (za >= 0.0) {
    mass = 0.5 * (std::erfc(za * inv_sqrt2) - std::erfc(zb * inv_sqrt2));
  } else if (zb <= 0.0) {
    mass = 0.5 * (std::erfc(-zb * inv_sqrt2) - std::erfc(-za * inv_sqrt2));
  } else {
    mass = 1.0 - 0.5 * (std::erfc(-za * inv_sqrt2) + std::erfc(zb * inv_sqrt2));
  }
  const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  const double pa = c * std::exp(-0.5 * za * za);
  const double pb = c * std::exp(-0.5 * zb * zb);
  const double m1 = pa - pb;
  const double m2 = mass + za * pa - zb * pb;
  return {mass, m1, m2};
}

void accumulate_collisions(std::span<const double> values, const CollisionTensor& b, std::span<double> out) {
  for (const auto& blk : b.blocks) {
    const double* nb = values.data() + 5 * blk.beta;
    const double* ng = values.data() + 5 * blk.gamma;
    double* o = out.data() + 5 * blk.alpha;
    for (int j = 0; j < 5; ++j) {
      double s = 0.0;
      for (int k = 0; k < 5; ++k) {
        if (nb[k] == 0.0) continue;
        double inner = 0.0;
        for (int n = 0; n < 5; ++n) inner += blk.value[static_cast<std::size_t>(bidx(j, k, n))] * ng[n];
        s += nb[k] * inner;
      }
      o[j] += 0.5 * s;
    }
  }
}

void check_tensor(std::uint64_t hash, int cells, const CollisionTensor& b) {
  if (b.partition_hash != hash) throw HashMismatch("collision tensor was built for a different partition");
  if (b.cells != cells) throw InvalidArgument("collision tensor cell count does not match the state");
}

void check_run_args(double dt, std::int64_t steps, std::int64_t output_every) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive and finite");
  if (steps < 0) throw InvalidArgument("step count must be non-negative");
  if (output_every < 1) throw InvalidArgument("output interval must be at least 1");
}

}  // namespace

std::array<double, 5> invariant_sums(std::span<const double> values) {
  std::array<double, 5> s{};
  std::array<double, 5> comp{};
  for (std::size_t i = 0; i < values.size(); ++i) {
    // Neumaier summation keeps long-run drift measurements honest.
    const std::size_t j = i % 5;
    const double x = values[i];
    const double t = s[j] + x;
    if (std::abs(s[j]) >= std::abs(x)) {
      comp[j] += (s[j] - t) + x;
    } else {
      comp[j] += (x - t) + s[j];
    }
    s[j] = t;
  }
  for (int j = 0; j < 5; ++j) s[static_cast<std::size_t>(j)] += comp[static_cast<std::size_t>(j)];
  return s;
}

MacroFields macroscopic_fields(std::span<const double> values) {
  const auto s = invariant_sums(values);
  if (!(s[0] > kDensityFloor)) throw ZeroDensity("density " + std::to_string(s[0]) + " is at or below the floor");
  MacroFields m;
  m.density = s[0];
  m.velocity = Vec3(s[1] / s[0], s[2] / s[0], s[3] / s[0]);
  m.energy = s[4];
  m.temperature = (s[4] - s[0] * norm2(m.velocity)) / (3.0 * s[0]);
  return m;
}

StateHomogeneous project_maxwellian(const Partition& p, double rho, const Vec3& u, double temperature) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("density must be positive and finite");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw InvalidArgument("temperature must be positive");
  const double sigma = std::sqrt(temperature);
  StateHomogeneous s(p.hash(), p.size());
  for (const auto& c : p.cells()) {
    std::array<double, 3> m0{}, m1{}, m2{};
    for (int l = 0; l < 3; ++l) {
      const auto nm = normal_moments((c.lower[l] - u[l]) / sigma, (c.upper[l] - u[l]) / sigma);
      const auto L = static_cast<std::size_t>(l);
      m0[L] = nm.m0;
      m1[L] = u[l] * nm.m0 + sigma * nm.m1;
      m2[L] = u[l] * u[l] * nm.m0 + 2.0 * u[l] * sigma * nm.m1 + temperature * nm.m2;
    }
    s(c.index, 0) = rho * m0[0] * m0[1] * m0[2];
    s(c.index, 1) = rho * m1[0] * m0[1] * m0[2];
    s(c.index, 2) = rho * m0[0] * m1[1] * m0[2];
    s(c.index, 3) = rho * m0[0] * m0[1] * m1[2];
    s(c.index, 4) = rho * (m2[0] * m0[1] * m0[2] + m0[0] * m2[1] * m0[2] + m0[0] * m0[1] * m2[2]);
  }
  return s;
}

StateHomogeneous two_beam_state(const Partition& p, const std::vector<int>& cells, const std::vector<double>& weights) {
  if (cells.size() != weights.size()) throw InvalidArgument("cells and weights differ in length");
  StateHomogeneous s(p.hash(), p.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] < 0 || cells[i] >= p.size()) throw InvalidArgument("beam cell " + std::to_string(cells[i]) + " out of range");
    const Cell& c = p.cell(cells[i]);
    const Mat5 g = gram(c).entries;
    for (int j = 0; j < 5; ++j) s(c.index, j) += weights[i] * g(0, j) / c.volume();
  }
  return s;
}

std::array<double, 3> directional_pressures(const Partition& p, const DualSet& duals, std::span<const double> values) {
  if (duals.partition_hash != p.hash()) throw HashMismatch("dual basis was built for a different partition");
  if (values.size() != 5 * static_cast<std::size_t>(p.size())) throw InvalidArgument("state size does not match partition");
  const MacroFields m = macroscopic_fields(values);
  std::array<double, 3> out{};
  for (const auto& c : p.cells()) {
    const LocalFrame frame(c);
    const DualBasis& d = duals[c.index];
    Eigen::Map<const Vec5> n(values.data() + 5 * c.index);
    for (int l = 0; l < 3; ++l) {
      const int e[3] = {l == 0, l == 1, l == 2};
      const double ml = frame.center[l];
      const double s = frame.scale;
      const Vec5 w = ml * ml * frame.phi_moment() + 2.0 * ml * s * frame.phi_moment(e[0], e[1], e[2]) +
                     s * s * frame.phi_moment(2 * e[0], 2 * e[1], 2 * e[2]);
      out[static_cast<std::size_t>(l)] += n.dot(d.local_coeffs * w);
    }
  }
  for (int l = 0; l < 3; ++l) out[static_cast<std::size_t>(l)] -= m.density * m.velocity[l] * m.velocity[l];
  return out;
}

double pressure_anisotropy(const std::array<double, 3>& pressures) {
  const double mean = (pressures[0] + pressures[1] + pressures[2]) / 3.0;
  if (!(mean > 0.0)) throw InvalidArgument("mean pressure must be positive");
  double worst = 0.0;
  for (double v : pressures) worst = std::max(worst, std::abs(v - mean) / mean);
  return worst;
}

void collision_rhs(std::span<const double> values, const CollisionTensor& b, std::span<double> out) {
  if (values.size() != out.size() || values.size() != 5 * static_cast<std::size_t>(b.cells)) {
    throw InvalidArgument("state size does not match the collision tensor");
  }
  std::fill(out.begin(), out.end(), 0.0);
  accumulate_collisions(values, b, out);
}

StateHomogeneous rhs_homogeneous(const StateHomogeneous& s, const CollisionTensor& b) {
  check_tensor(s.partition_hash, s.cells, b);
  StateHomogeneous out(s.partition_hash, s.cells);
  collision_rhs(s.values, b, out.values);
  return out;
}

std::vector<double> rk4_step(std::span<const double> y, const RhsFunction& rhs, double dt) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  rhs(y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
  rhs(tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
  rhs(tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
  rhs(tmp, k4);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  check_finite(out, "rk4 step");
  return out;
}

StateHomogeneous rk4_step(const StateHomogeneous& s, const RhsFunction& rhs, double dt) {
  StateHomogeneous out(s.partition_hash, s.cells);
  out.values = rk4_step(s.values, rhs, dt);
  return out;
}

void ConservationReport::observe(const std::array<double, 5>& sums) {
  final_sums = sums;
  for (std::size_t j = 0; j < 5; ++j) {
    const double d = std::abs(sums[j] - initial[j]);
    max_abs_drift[j] = std::max(max_abs_drift[j], d);
    max_rel_drift[j] = max_abs_drift[j] / (1.0 + std::abs(initial[j]));
  }
}

double ConservationReport::worst() const { return *std::max_element(max_rel_drift.begin(), max_rel_drift.end()); }

std::string ConservationReport::to_json() const {
  nlohmann::ordered_json j;
  const char* names[5] = {"mass", "momentum_1", "momentum_2", "momentum_3", "energy"};
  j["steps"] = steps;
  for (std::size_t i = 0; i < 5; ++i) {
    j["invariants"][names[i]] = {{"initial", initial[i]},
                                 {"final", final_sums[i]},
                                 {"max_abs_drift", max_abs_drift[i]},
                                 {"max_rel_drift", max_rel_drift[i]}};
  }
  j["worst_rel_drift"] = worst();
  return j.dump(2) + "\n";
}

Trajectory run_homogeneous(const StateHomogeneous& s0, const CollisionTensor& b, double dt, std::int64_t steps,
                           std::int64_t output_every) {
  check_tensor(s0.partition_hash, s0.cells, b);
  check_run_args(dt, steps, output_every);
  check_finite(s0.values, "initial state");
  const RhsFunction rhs = [&b](std::span<const double> y, std::span<double> out) { collision_rhs(y, b, out); };
  Trajectory tr;
  tr.report.initial = invariant_sums(s0.values);
  tr.report.observe(tr.report.initial);
  tr.snapshots.push_back({0, 0.0, s0.values});
  std::vector<double> y = s0.values;
  for (std::int64_t n = 1; n <= steps; ++n) {
    try {
      y = rk4_step(y, rhs, dt);
    } catch (const NonFiniteState& e) {
      throw NonFiniteState("step " + std::to_string(n) + ": " + e.detail());
    }
    tr.report.observe(invariant_sums(y));
    tr.report.steps = n;
    if (n % output_every == 0 || n == steps) tr.snapshots.push_back({n, static_cast<double>(n) * dt, y});
  }
  return tr;
}

const char* to_string(Boundary b) { return b == Boundary::Periodic ? "periodic" : "copy"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::Periodic;
  if (s == "copy" || s == "outflow") return Boundary::Copy;
  throw InvalidArgument("unknown boundary '" + s + "' (expected periodic or copy)");
}

UpwindOperator UpwindOperator::build(const DriftTensor& a, const Partition& p, int axis) {
  if (axis < 0 || axis > 2) throw InvalidArgument("transport axis must be 0, 1 or 2");
  if (a.partition_hash != p.hash()) throw HashMismatch("drift tensor was built for a different partition");
  if (a.size() != p.size()) throw InvalidArgument("drift tensor size does not match the partition");
  UpwindOperator op;
  op.partition_hash = a.partition_hash;
  op.axis = axis;
  Vec3 dir;
  dir[axis] = 1.0;
  int e[3] = {0, 0, 0};
  e[axis] = 1;
  for (int alpha = 0; alpha < a.size(); ++alpha) {
    const Mat5 m = a.transport_matrix(alpha, dir);
    // In the local frame M = T (c I + s H G^-1) T^-1 with G, H symmetric and
    // G positive definite, so H v = mu G v yields a real spectrum and a
    // G-orthonormal eigenbasis even when eigenvalues repeat.
    const LocalFrame frame(p.cell(alpha));
    const Mat5 g = frame.phi_gram();
    Mat5 h = frame.phi_gram(e[0], e[1], e[2]);
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat5> es(h, g);
    if (es.info() != Eigen::Success) throw EigenFailure("cell " + std::to_string(alpha) + ": eigensolver did not converge");
    const Mat5 v = es.eigenvectors();
    const Vec5 l = (frame.center[axis] + frame.scale * es.eigenvalues().array()).matrix();
    const Mat5 r = frame.to_psi * g * v;
    const Mat5 rinv = v.transpose() * frame.from_psi;
    const Mat5 recon = r * l.asDiagonal() * rinv;
    const double mnorm = std::max(m.norm(), 1e-300);
    if ((recon - m).norm() > 1e-8 * mnorm) {
      // The cached drift does not match a real-diagonalizable transport
      // operator for this cell; report the spectrum Eigen finds.
      Eigen::EigenSolver<Mat5> gen(m, false);
      std::ostringstream os;
      os << "cell " << alpha << ": transport matrix is inconsistent with its cell (relative mismatch "
         << (recon - m).norm() / mnorm << ")";
      if (gen.info() == Eigen::Success) {
        for (int i = 0; i < 5; ++i) {
          if (std::abs(gen.eigenvalues()(i).imag()) > 1e-10 * gen.eigenvalues().cwiseAbs().maxCoeff()) {
            os << "; complex eigenvalue " << gen.eigenvalues()(i).real() << " + " << gen.eigenvalues()(i).imag() << "i";
            break;
          }
        }
      }
      throw EigenFailure(os.str());
    }
    op.plus.push_back(r * l.cwiseMax(0.0).asDiagonal() * rinv);
    op.minus.push_back(r * l.cwiseMin(0.0).asDiagonal() * rinv);
    op.eigenvalues.push_back(l);
    op.max_speed = std::max(op.max_speed, l.cwiseAbs().maxCoeff());
  }
  return op;
}

void rhs_transport_1d(const StateField1D& s, const UpwindOperator& op, std::span<double> out) {
  if (op.partition_hash != s.partition_hash) throw HashMismatch("upwind operator was built for a different partition");
  if (static_cast<int>(op.plus.size()) != s.velocity_cells) throw InvalidArgument("upwind operator size mismatch");
  if (out.size() != s.values.size()) throw InvalidArgument("output size mismatch");
  const int mx = s.grid.cells;
  const int nv = s.velocity_cells;
  const std::size_t stride = 5 * static_cast<std::size_t>(nv);
  // Interface flux F_{m+1/2} for m = -1 .. mx-1, stored at index m + 1.
  std::vector<double> flux((static_cast<std::size_t>(mx) + 1) * stride, 0.0);
  auto cell_values = [&](int m) -> const double* {
    if (s.grid.boundary == Boundary::Periodic) m = (m % mx + mx) % mx;
    else m = std::clamp(m, 0, mx - 1);
    return s.values.data() + static_cast<std::size_t>(m) * stride;
  };
  for (int m = -1; m < mx; ++m) {
    const double* left = cell_values(m);
    const double* right = cell_values(m + 1);
    double* f = flux.data() + static_cast<std::size_t>(m + 1) * stride;
    for (int alpha = 0; alpha < nv; ++alpha) {
      Eigen::Map<const Vec5> ul(left + 5 * alpha);
      Eigen::Map<const Vec5> ur(right + 5 * alpha);
      Eigen::Map<Vec5> fa(f + 5 * alpha);
      fa = op.plus[static_cast<std::size_t>(alpha)] * ul + op.minus[static_cast<std::size_t>(alpha)] * ur;
    }
  }
  const double inv_dx = 1.0 / s.grid.dx;
  for (int m = 0; m < mx; ++m) {
    const double* fl = flux.data() + static_cast<std::size_t>(m) * stride;
    const double* fr = flux.data() + static_cast<std::size_t>(m + 1) * stride;
    double* o = out.data() + static_cast<std::size_t>(m) * stride;
    for (std::size_t i = 0; i < stride; ++i) o[i] = -(fr[i] - fl[i]) * inv_dx;
  }
}

std::array<double, 5> field_sums(const StateField1D& s) {
  auto sums = invariant_sums(s.values);
  for (double& v : sums) v *= s.grid.dx;
  return sums;
}

Trajectory1D run_1d(const StateField1D& s0, const Partition& p, const DriftTensor& a, const CollisionTensor* b, double dt,
                    std::int64_t steps, std::int64_t output_every, const Run1DOptions& opts) {
  check_run_args(dt, steps, output_every);
  if (s0.grid.cells < 1 || !(s0.grid.dx > 0.0)) throw InvalidArgument("spatial grid needs at least one cell and dx > 0");
  if (a.partition_hash != s0.partition_hash) throw HashMismatch("drift tensor was built for a different partition");
  if (b != nullptr) check_tensor(s0.partition_hash, s0.velocity_cells, *b);
  check_finite(s0.values, "initial state");
  const UpwindOperator op = UpwindOperator::build(a, p, opts.axis);
  Trajectory1D tr;
  tr.cfl_number = dt * op.max_speed / s0.grid.dx;
  if (opts.enforce_cfl && tr.cfl_number > opts.cfl) {
    std::ostringstream os;
    os << "CFL number " << tr.cfl_number << " exceeds the limit " << opts.cfl << " (dt <= "
       << opts.cfl * s0.grid.dx / op.max_speed << ")";
    throw CflViolation(os.str());
  }
  StateField1D work = s0;
  const std::size_t stride = 5 * static_cast<std::size_t>(s0.velocity_cells);
  const RhsFunction rhs = [&](std::span<const double> y, std::span<double> out) {
    std::copy(y.begin(), y.end(), work.values.begin());
    rhs_transport_1d(work, op, out);
    if (b != nullptr) {
      for (int m = 0; m < s0.grid.cells; ++m) {
        accumulate_collisions(y.subspan(static_cast<std::size_t>(m) * stride, stride), *b,
                              out.subspan(static_cast<std::size_t>(m) * stride, stride));
      }
    }
  };
  tr.report.initial = field_sums(s0);
  tr.report.observe(tr.report.initial);
  tr.snapshots.push_back({0, 0.0, s0.values});
  StateField1D cur = s0;
  for (std::int64_t n = 1; n <= steps; ++n) {
    try {
      cur.values = rk4_step(cur.values, rhs, dt);
    } catch (const NonFiniteState& e) {
      throw NonFiniteState("step " + std::to_string(n) + ": " + e.detail());
    }
    tr.report.observe(field_sums(cur));
    tr.report.steps = n;
    if (n % output_every == 0 || n == steps) tr.snapshots.push_back({n, static_cast<double>(n) * dt, cur.values});
  }
  return tr;
}

}  // namespace kcel
