#include "kcel/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "kcel/errors.hpp"

namespace kcel {
namespace {

QuadratureRule make_gauss_legendre(int n) {
  QuadratureRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    r.nodes[static_cast<std::size_t>(i)] = x;
    r.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

QuadratureRule make_tanh_sinh(int points) {
  const int m = points / 2;
  const double h = 3.0 / m;
  QuadratureRule r;
  for (int i = -m; i <= m; ++i) {
    const double t = i * h;
    const double s = 0.5 * std::numbers::pi * std::sinh(t);
    const double c = std::cosh(s);
    r.nodes.push_back(std::tanh(s));
    r.weights.push_back(h * 0.5 * std::numbers::pi * std::cosh(t) / (c * c));
  }
  return r;
}

template <class Make>
const QuadratureRule& cached(std::map<int, std::unique_ptr<QuadratureRule>>& cache, std::mutex& mu, int n,
                             Make make) {
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<QuadratureRule>(make(n));
  return *slot;
}

}  // namespace

const QuadratureRule& gauss_legendre(int n) {
  if (n < 1 || n > 512) throw InvalidArgument("Gauss-Legendre order must lie in 1..512");
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  static std::mutex mu;
  return cached(cache, mu, n, make_gauss_legendre);
}

const QuadratureRule& tanh_sinh(int points) {
  if (points < 3 || points % 2 == 0) throw InvalidArgument("tanh-sinh point count must be odd and >= 3");
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  static std::mutex mu;
  return cached(cache, mu, points, make_tanh_sinh);
}

}  // namespace kcel
