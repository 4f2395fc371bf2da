#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "kcel/errors.hpp"
#include "kcel/oracle.hpp"
#include "kcel/quadrature.hpp"
#include "test_util.hpp"

using namespace kcel;

namespace {

Cell unit_cube() {
  Cell c;
  c.lower = Vec3(-1, -1, -1);
  c.upper = Vec3(1, 1, 1);
  return c;
}

Cell whole_space() {
  const double inf = std::numeric_limits<double>::infinity();
  Cell c;
  c.lower = Vec3(-inf, -inf, -inf);
  c.upper = Vec3(inf, inf, inf);
  return c;
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
    for (int n : {1, 2, 5, 9}) {
      const auto rule = gauss_legendre(n);
      for (int d = 0; d <= 2 * n - 1; ++d) {
        const double v = integrate(rule, -0.3, 1.7, [d](double x) { return std::pow(x, d); });
        CHECK(v == doctest::Approx(interval_power_integral(-0.3, 1.7, d)).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("tanh-sinh handles endpoint singularities") {
    const auto rule = tanh_sinh(61);
    CHECK(integrate(rule, 0.0, 1.0, [](double x) { return std::sqrt(x); }) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(integrate(rule, 0.0, 1.0, [](double x) { return std::sqrt(1.0 - x * x); }) ==
          doctest::Approx(std::numbers::pi / 4.0).epsilon(1e-12));
    // Integrable blow-up: the truncated tails cost about 2e-7.
    CHECK(integrate(rule, 0.0, 1.0, [](double x) { return 1.0 / std::sqrt(x); }) == doctest::Approx(2.0).epsilon(1e-6));
  }

  TEST_CASE("cell integrals") {
    CHECK(oracle_cell_integral(unit_cube(), {Monomial{1.0, 0, 0, 0}}) == doctest::Approx(8.0).epsilon(1e-15));
    const std::vector<Monomial> r4 = {{1, 4, 0, 0}, {1, 0, 4, 0}, {1, 0, 0, 4}, {2, 2, 2, 0}, {2, 2, 0, 2}, {2, 0, 2, 2}};
    CHECK(oracle_cell_integral(unit_cube(), r4) == doctest::Approx(152.0 / 15.0).epsilon(1e-14));
    CHECK(std::abs(oracle_cell_integral(unit_cube(), {Monomial{1.0, 3, 1, 0}})) <= 1e-15);
    CHECK_THROWS_AS(oracle_cell_integral(unit_cube(), {Monomial{1.0, 40, 0, 0}}), CostGuard);
  }

  TEST_CASE("Gaussian moments") {
    const Cell all = whole_space();
    CHECK(oracle_gaussian_moment(all, 2.0, Vec3(0.3, -0.1, 0.2), 1.5, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(oracle_gaussian_moment(unit_cube(), 1.0, Vec3(), 0.7, 1)) <= 1e-16);
    CHECK(oracle_gaussian_moment(all, 1.3, Vec3(), 0.8, 4) == doctest::Approx(3 * 1.3 * 0.8).epsilon(1e-14));
    const Vec3 u(0.5, -1.0, 0.25);
    CHECK(oracle_gaussian_moment(all, 1.0, u, 1.0, 4) == doctest::Approx(norm2(u) + 3.0).epsilon(1e-14));
    // 1D check against numerical integration on a finite box.
    Cell c;
    c.lower = Vec3(0.1, -0.4, -2.0);
    c.upper = Vec3(0.9, 0.6, 0.3);
    const double rho = 1.2, T = 0.6;
    const auto f = [&](const Vec3& xi) {
      const Vec3 d = xi - u;
      return rho * std::exp(-norm2(d) / (2 * T)) / std::pow(2 * std::numbers::pi * T, 1.5) * norm2(xi);
    };
    const double quad = oracle_cell_integral(c, f, 40);
    CHECK(oracle_gaussian_moment(c, rho, u, T, 4) == doctest::Approx(quad).epsilon(1e-12));
  }

  TEST_CASE("slab mode is detected only for slab partitions") {
    CHECK(slab_axis(testing::split_partition(), 1.0) == 0);
    const auto one = build_uniform_partition(DomainSpec::uniform(1.0, 1));
    CHECK(slab_axis(one, 1.0).has_value());
    CHECK_FALSE(slab_axis(build_uniform_partition(DomainSpec::uniform(1.0, 2)), 1.0).has_value());
  }

  TEST_CASE("one-cell partition: quadrature tensor vanishes") {
    const auto p = build_uniform_partition(DomainSpec::uniform(1.0, 1));
    const auto d = build_duals(p);
    const auto blocks = oracle_collision_pair(p, d, ScatteringModel::hard_sphere(), 1.0, 0, 0, QuadratureSpec{});
    double worst = 0.0;
    for (const auto& b : blocks)
      for (double v : b.value) worst = std::max(worst, std::abs(v));
    CHECK(worst <= 1e-12);
    const auto grid = oracle_collision_pair(p, d, ScatteringModel::hard_sphere(), 1.0, 0, 0, QuadratureSpec{},
                                            CollisionQuadrature::TensorGrid);
    worst = 0.0;
    for (const auto& b : grid)
      for (double v : b.value) worst = std::max(worst, std::abs(v));
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("split partition: self-convergence, swap symmetry and the tensor-grid cross-check") {
    const auto p = testing::split_partition();
    const auto d = build_duals(p);
    const auto m = ScatteringModel::hard_sphere();
    const QuadratureSpec spec;
    const auto base = oracle_collision_pair(p, d, m, 1.0, 0, 1, spec);
    const auto fine = oracle_collision_pair(p, d, m, 1.0, 0, 1, spec.doubled());
    const auto swapped = oracle_collision_pair(p, d, m, 1.0, 1, 0, spec);
    double scale = 0.0;
    for (const auto& b : base)
      for (double v : b.value) scale = std::max(scale, std::abs(v));
    double conv = 0.0, sym = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int j = 0; j < 5; ++j)
        for (int k = 0; k < 5; ++k)
          for (int n = 0; n < 5; ++n) {
            const double v = base[static_cast<std::size_t>(a)].value[static_cast<std::size_t>(bidx(j, k, n))];
            conv = std::max(conv, std::abs(v - fine[static_cast<std::size_t>(a)].value[static_cast<std::size_t>(bidx(j, k, n))]));
            sym = std::max(sym, std::abs(v - swapped[static_cast<std::size_t>(a)].value[static_cast<std::size_t>(bidx(j, n, k))]));
          }
    CHECK(conv <= 1e-6 * scale);
    CHECK(sym <= 1e-9 * scale);
    // The tensor-grid integrator ignores the discontinuities and converges
    // slowly, but independently, toward the same values.
    QuadratureSpec g;
    g.gauss_order = 10;
    g.sphere_order = 12;
    const auto grid = oracle_collision_pair(p, d, m, 1.0, 0, 1, g, CollisionQuadrature::TensorGrid);
    double gdiff = 0.0, gss = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int t = 0; t < kBlockSize; ++t) {
        const double e = base[static_cast<std::size_t>(a)].value[static_cast<std::size_t>(t)] -
                         grid[static_cast<std::size_t>(a)].value[static_cast<std::size_t>(t)];
        gdiff = std::max(gdiff, std::abs(e));
        gss += e * e;
      }
    CHECK(gdiff <= 0.03 * scale);
    CHECK(std::sqrt(gss / 250.0) <= 0.01 * scale);
  }

  TEST_CASE("entry API, unreachable targets and the cost guard") {
    const auto p = testing::split_partition();
    const auto d = build_duals(p);
    const auto m = ScatteringModel::hard_sphere();
    CHECK(oracle_collision_entry(p, d, m, 1.0, 1, 0, 1, 4, 1, 0, QuadratureSpec{}) ==
          doctest::Approx(1.0107204099417222).epsilon(1e-9));
    const auto big = build_uniform_partition(DomainSpec::uniform(4.0, 3));
    CHECK_THROWS_AS(oracle_collision_pair(big, build_duals(big), m, 4.0, 0, 1, QuadratureSpec{}), CostGuard);
    QuadratureSpec bad;
    bad.gauss_order = 1;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    // Unreachable target: on 3^3 with E = 1 the corner pair (0, 0) has every
    // momentum component <= -2/3, so the opposite corner cell 26 is out of reach.
    const auto q = build_uniform_partition(DomainSpec::uniform(1.0, 3));
    QuadratureSpec tiny;
    tiny.gauss_order = 4;
    tiny.sphere_order = 4;
    tiny.max_cells = 27;
    const auto blocks =
        oracle_collision_pair(q, build_duals(q), m, 1.0, 0, 0, tiny, CollisionQuadrature::TensorGrid);
    double worst = 0.0, any = 0.0;
    for (double v : blocks[26].value) worst = std::max(worst, std::abs(v));
    const auto centre =
        oracle_collision_pair(q, build_duals(q), m, 1.0, 13, 13, tiny, CollisionQuadrature::TensorGrid);
    for (const auto& blk : centre)
      for (double v : blk.value) any = std::max(any, std::abs(v));
    CHECK(any > 0.0);
    CHECK(worst == 0.0);
  }
}
