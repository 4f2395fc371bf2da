#include "kcel/coefficients.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <thread>

#include "kcel/errors.hpp"

namespace kcel {

Mat5 DriftTensor::transport_matrix(int alpha, const Vec3& direction) const {
  const auto& b = blocks[static_cast<std::size_t>(alpha)];
  Mat5 a = direction[0] * b.axis[0] + direction[1] * b.axis[1] + direction[2] * b.axis[2];
  return a.transpose();
}

DriftBlock drift_block(const Cell& c, const DualBasis& dual) {
  const LocalFrame frame(c);
  DriftBlock out;
  const Mat5 tail = frame.to_psi.transpose();
  for (int l = 0; l < 3; ++l) {
    const int e[3] = {l == 0, l == 1, l == 2};
    const Mat5 h = frame.phi_gram(e[0], e[1], e[2]);
    out.axis[static_cast<std::size_t>(l)] =
        frame.center[l] * Mat5::Identity() + frame.scale * (dual.local_coeffs * h * tail);
  }
  return out;
}

DriftTensor drift_tensor(const Partition& p, const DualSet& duals) {
  if (duals.partition_hash != p.hash() || duals.size() != p.size())
    throw HashMismatch("drift_tensor: dual basis set does not belong to partition " + p.content_hash());
  DriftTensor t;
  t.partition_hash = p.hash();
  t.blocks.reserve(static_cast<std::size_t>(p.size()));
  for (int a = 0; a < p.size(); ++a) t.blocks.push_back(drift_block(p.cell(a), duals[a]));
  return t;
}

void McConfig::validate() const {
  if (samples_per_pair < 1) throw InvalidArgument("samples_per_pair must be >= 1");
  if (workers < 0) throw InvalidArgument("workers must be >= 0");
}

const CollisionBlock* CollisionTensor::find(int alpha, int beta, int gamma) const {
  auto key = [](const CollisionBlock& b) { return std::array<int, 3>{b.beta, b.gamma, b.alpha}; };
  const std::array<int, 3> want{beta, gamma, alpha};
  auto it = std::lower_bound(blocks.begin(), blocks.end(), want,
                             [&](const CollisionBlock& b, const std::array<int, 3>& w) { return key(b) < w; });
  if (it == blocks.end() || key(*it) != want) return nullptr;
  return &*it;
}

double CollisionTensor::entry(int alpha, int beta, int gamma, int j, int k, int n) const {
  const auto* b = find(alpha, beta, gamma);
  return b ? b->value[static_cast<std::size_t>(bidx(j, k, n))] : 0.0;
}

double CollisionTensor::max_abs() const {
  double m = 0.0;
  for (const auto& b : blocks)
    for (double v : b.value) m = std::max(m, std::abs(v));
  return m;
}

double min_norm2(const Cell& c) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (c.lower[i] > 0.0)
      s += c.lower[i] * c.lower[i];
    else if (c.upper[i] < 0.0)
      s += c.upper[i] * c.upper[i];
  }
  return s;
}

bool pair_reachable(const Cell& beta, const Cell& gamma, double energy_cap) {
  return min_norm2(beta) + min_norm2(gamma) <= energy_cap;
}

std::uint64_t pair_seed(std::uint64_t seed, int beta, int gamma) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t z = mix(seed);
  z = mix(z ^ static_cast<std::uint64_t>(beta));
  z = mix(z ^ (static_cast<std::uint64_t>(gamma) << 32));
  return z;
}

namespace {

struct Accumulator {
  std::array<double, kBlockSize> sum{};
  std::array<double, kBlockSize> comp{};
  std::array<double, kBlockSize> sumsq{};
  bool touched = false;

  void add(int idx, double x) {
    const auto i = static_cast<std::size_t>(idx);
    const double t = sum[i] + x;
    if (std::abs(sum[i]) >= std::abs(x))
      comp[i] += (sum[i] - t) + x;
    else
      comp[i] += (x - t) + sum[i];
    sum[i] = t;
    sumsq[i] += x * x;
  }
};

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<CollisionBlock> sample_pair(const Partition& p, const DualSet& duals, const ScatteringModel& model,
                                        double energy_cap, const McConfig& cfg, int beta, int gamma,
                                        std::vector<Accumulator>& acc) {
  const Cell& cb = p.cell(beta);
  const Cell& cg = p.cell(gamma);
  const Vec3 eb = cb.extent(), eg = cg.extent();
  const double weight_base = cb.volume() * cg.volume() * 4.0 * std::numbers::pi;
  const DualBasis& db = duals[beta];
  const DualBasis& dg = duals[gamma];

  std::mt19937_64 rng(pair_seed(cfg.seed, beta, gamma));
  std::vector<int> touched;

  for (std::int64_t s = 0; s < cfg.samples_per_pair; ++s) {
    Vec3 xi, xs;
    for (int i = 0; i < 3; ++i) xi[i] = cb.lower[i] + eb[i] * uniform01(rng);
    for (int i = 0; i < 3; ++i) xs[i] = cg.lower[i] + eg[i] * uniform01(rng);
    const double u = uniform01(rng), v = uniform01(rng);
    if (!chi_E(xi, xs, energy_cap)) continue;

    const Vec3 omega = sphere_direction(u, v);
    const auto [xp, xsp] = post_collision(xi, xs, omega);
    const double w = weight_base * rate_B(model, xi, xs);
    if (w == 0.0) continue;

    // Signed psi sums per touched cell; the cell of xi takes minus the rest,
    // which is the collision-invariant identity written so that all-in-one-cell
    // collisions contribute exactly zero.
    struct Touch {
      int alpha;
      Vec5 s;
    };
    Touch t[4];
    int nt = 0;
    auto add_touch = [&](int a, const Vec5& val) {
      for (int i = 0; i < nt; ++i)
        if (t[i].alpha == a) {
          t[i].s += val;
          return;
        }
      t[nt++] = Touch{a, val};
    };
    add_touch(beta, Vec5::Zero());
    add_touch(p.locate_clamped(xp), psi_vector(xp));
    add_touch(p.locate_clamped(xsp), psi_vector(xsp));
    add_touch(gamma, -psi_vector(xs));
    Vec5 rest = Vec5::Zero();
    for (int i = 1; i < nt; ++i) rest += t[i].s;
    t[0].s = -rest;

    const Vec5 e = db.eval(xi);
    const Vec5 es = dg.eval(xs);
    double ee[25];
    for (int k = 0; k < 5; ++k)
      for (int n = 0; n < 5; ++n) ee[k * 5 + n] = w * e(k) * es(n);

    for (int i = 0; i < nt; ++i) {
      auto& a = acc[static_cast<std::size_t>(t[i].alpha)];
      if (!a.touched) {
        a.touched = true;
        touched.push_back(t[i].alpha);
      }
      for (int j = 0; j < 5; ++j) {
        const double sj = t[i].s(j);
        for (int kn = 0; kn < 25; ++kn) a.add(j * 25 + kn, sj * ee[kn]);
      }
    }
  }

  std::sort(touched.begin(), touched.end());
  std::vector<CollisionBlock> out;
  out.reserve(touched.size());
  const auto S = static_cast<double>(cfg.samples_per_pair);
  for (int alpha : touched) {
    auto& a = acc[static_cast<std::size_t>(alpha)];
    CollisionBlock b;
    b.alpha = alpha;
    b.beta = beta;
    b.gamma = gamma;
    for (std::size_t i = 0; i < kBlockSize; ++i) {
      const double total = a.sum[i] + a.comp[i];
      b.value[i] = total / S;
      if (cfg.samples_per_pair > 1) {
        const double var = std::max(0.0, a.sumsq[i] - total * total / S) / (S - 1.0);
        b.std_error[i] = std::sqrt(var / S);
      }
    }
    out.push_back(b);
    a = Accumulator{};
  }
  return out;
}

}  // namespace

CollisionTensor collision_tensor_mc(const Partition& p, const DualSet& duals, const ScatteringModel& model,
                                    double energy_cap, const McConfig& cfg) {
  cfg.validate();
  model.validate();
  if (duals.partition_hash != p.hash() || duals.size() != p.size())
    throw HashMismatch("collision_tensor_mc: dual basis set does not belong to partition " + p.content_hash());
  const double r = std::sqrt(energy_cap);
  if (!(energy_cap > 0.0))
    throw InvalidArgument("energy_cap must be > 0");
  for (int i = 0; i < 3; ++i)
    if (p.lower()[i] > -r || p.upper()[i] < r)
      throw InvalidArgument("energy_cap ball is not contained in the partition domain");

  const int n = p.size();
  std::vector<std::pair<int, int>> pairs;
  for (int b = 0; b < n; ++b)
    for (int g = 0; g < n; ++g)
      if (pair_reachable(p.cell(b), p.cell(g), energy_cap)) pairs.emplace_back(b, g);

  std::vector<std::vector<CollisionBlock>> results(pairs.size());
  int workers = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<int>(workers, static_cast<int>(std::max<std::size_t>(1, pairs.size())));

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    std::vector<Accumulator> acc(static_cast<std::size_t>(n));
    for (std::size_t i = next++; i < pairs.size(); i = next++)
      results[i] = sample_pair(p, duals, model, energy_cap, cfg, pairs[i].first, pairs[i].second, acc);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  CollisionTensor t;
  t.partition_hash = p.hash();
  t.cells = n;
  t.source = TensorSource::MonteCarlo;
  t.seed = cfg.seed;
  t.samples_per_pair = cfg.samples_per_pair;
  t.target_relative_error = cfg.target_relative_error;
  for (auto& r_ : results)
    for (auto& b : r_) t.blocks.push_back(b);
  return t;
}

}  // namespace kcel
