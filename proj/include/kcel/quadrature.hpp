#pragma once

#include <vector>

namespace kcel {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  int size() const { return static_cast<int>(nodes.size()); }
};

/// n-point Gauss-Legendre rule on [-1, 1] (exact for degree 2n - 1).
const QuadratureRule& gauss_legendre(int n);

/// Tanh-sinh rule on [-1, 1] with `points` nodes (odd), step chosen so the
/// outermost node sits at t = 3. Robust to algebraic and logarithmic endpoint
/// singularities.
const QuadratureRule& tanh_sinh(int points);

/// Integrates f over [a, b] with the rule mapped affinely.
template <class F>
double integrate(const QuadratureRule& rule, double a, double b, F&& f) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < rule.size(); ++i) sum += rule.weights[static_cast<std::size_t>(i)] * f(mid + half * rule.nodes[static_cast<std::size_t>(i)]);
  return half * sum;
}

}  // namespace kcel
