#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "nsf/discretization.hpp"

using namespace nsf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

VectorXd random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  VectorXd v(n);
  for (auto& x : v) x = N(rng);
  return v;
}

}  // namespace

TEST_CASE("grid size rule", "[discretization]") {
  const ChannelDomain dom{2.0};
  const Grid g = make_grid(dom, 16, 2.0);
  CHECK(g.nx == 64);
  CHECK(g.ny == 72);
  const Grid h = make_grid(dom, 4, 1.0);
  CHECK(h.nx == 8);
  CHECK(h.ny == 18);
  CHECK_THROWS_AS(make_grid(dom, 4, 0.5), std::invalid_argument);
  CHECK_THAT(g.W.sum(), WithinRel(2.0, 1e-14));
  CHECK_THAT(g.integrate(MatrixXd::Ones(g.nx, g.ny)), WithinRel(2.0, 1e-14));
}

TEST_CASE("basis sizes", "[discretization]") {
  const Discretization d(ChannelDomain{2.0}, 16, 16);
  CHECK(d.velocity_size() == 31 * 16 + 1);
  CHECK(d.temperature_size() == 31 * 16);
  const Discretization e(ChannelDomain{2.0}, 5, 3, 2.0, false);
  CHECK(e.velocity_size() == 9 * 5);
  CHECK(e.temperature_size() == 5 * 3);
  CHECK_THROWS_AS(Discretization(ChannelDomain{2.0}, 0, 3), std::invalid_argument);
}

TEST_CASE("bases are orthonormal", "[discretization]") {
  for (int n : {3, 8}) {
    const Discretization d(ChannelDomain{2.0}, n, n);
    CHECK(gram_deviation(d) < 1e-12);
  }
  const Discretization e(ChannelDomain{3.0}, 6, 4);
  CHECK(gram_deviation(e) < 1e-12);
}

TEST_CASE("lowest velocity mode matches its closed form", "[discretization]") {
  // a = 0, l = 1: w = (pi cos(pi y), 0) / sqrt(Lx pi^2 / 2) = sqrt(2/Lx) cos(pi y)
  const double Lx = 2.0;
  const Discretization d(ChannelDomain{Lx}, 4, 4);
  double m[6];
  for (double y : {0.0, 0.1, 0.37, 1.0}) {
    d.velocity_mode(0, 0.3, y, m);
    CHECK_THAT(m[0], WithinAbs(std::sqrt(2.0 / Lx) * std::cos(pi * y), 1e-15));
    CHECK(m[1] == 0.0);
    CHECK_THAT(m[3], WithinAbs(-pi * std::sqrt(2.0 / Lx) * std::sin(pi * y), 1e-14));
  }
  // mean flow mode
  d.velocity_mode(d.velocity().mean_index(), 1.0, 0.5, m);
  CHECK_THAT(m[0], WithinRel(1.0 / std::sqrt(Lx), 1e-15));
}

TEST_CASE("general velocity mode matches its closed form", "[discretization]") {
  // a = 2 is sin(k x) with k = 2 pi / Lx; l index 2 is sin(3 pi y)
  const double Lx = 2.0, k = 2.0 * pi / Lx, w = 3.0 * pi;
  const Discretization d(ChannelDomain{Lx}, 4, 4);
  const int i = d.velocity().index(2, 2);
  const double nrm = std::sqrt(0.5 * Lx * 0.5 * (w * w + k * k));
  double m[6];
  const double x = 0.7, y = 0.2;
  d.velocity_mode(i, x, y, m);
  CHECK_THAT(m[0], WithinAbs(std::sin(k * x) * w * std::cos(w * y) / nrm, 1e-14));
  CHECK_THAT(m[1], WithinAbs(-k * std::cos(k * x) * std::sin(w * y) / nrm, 1e-14));
}

TEST_CASE("grid evaluation agrees with pointwise mode sums", "[discretization]") {
  const Discretization d(ChannelDomain{2.0}, 5, 4);
  const VectorXd c = random_vector(d.velocity_size(), 1);
  const VelocityGrid V = d.eval_velocity(c);
  const Grid& g = d.grid();
  double m[6];
  for (int i : {0, 3, g.nx - 1})
    for (int j : {0, 7, g.ny - 1}) {
      double acc[6] = {0, 0, 0, 0, 0, 0};
      for (int q = 0; q < d.velocity_size(); ++q) {
        d.velocity_mode(q, g.x[i], g.y[j], m);
        for (int r = 0; r < 6; ++r) acc[r] += c[q] * m[r];
      }
      CHECK_THAT(V.u(i, j), WithinAbs(acc[0], 1e-12));
      CHECK_THAT(V.v(i, j), WithinAbs(acc[1], 1e-12));
      CHECK_THAT(V.ux(i, j), WithinAbs(acc[2], 1e-11));
      CHECK_THAT(V.uy(i, j), WithinAbs(acc[3], 1e-11));
      CHECK_THAT(V.vx(i, j), WithinAbs(acc[4], 1e-11));
      CHECK_THAT(V.vy(i, j), WithinAbs(acc[5], 1e-11));
    }

  const VectorXd t = random_vector(d.temperature_size(), 2);
  const ScalarGrid S = d.eval_scalar(t);
  for (int i : {1, g.nx - 2})
    for (int j : {2, g.ny - 3}) {
      double acc[3] = {0, 0, 0};
      for (int q = 0; q < d.temperature_size(); ++q) {
        d.scalar_mode(q, g.x[i], g.y[j], m);
        for (int r = 0; r < 3; ++r) acc[r] += t[q] * m[r];
      }
      CHECK_THAT(S.f(i, j), WithinAbs(acc[0], 1e-12));
      CHECK_THAT(S.fx(i, j), WithinAbs(acc[1], 1e-11));
      CHECK_THAT(S.fy(i, j), WithinAbs(acc[2], 1e-11));
    }
  CHECK((d.eval_scalar_values(t) - S.f).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("velocity fields are divergence free with no wall-normal flow", "[discretization]") {
  const Discretization d(ChannelDomain{2.0}, 6, 6);
  const VectorXd c = random_vector(d.velocity_size(), 3);
  const VelocityGrid V = d.eval_velocity(c);
  CHECK(divergence(V).cwiseAbs().maxCoeff() <= 1e-12 * V.ux.cwiseAbs().maxCoeff());
  double m[6];
  for (int q = 0; q < d.velocity_size(); ++q)
    for (double x : {0.0, 0.31, 1.7}) {
      d.velocity_mode(q, x, 0.0, m);
      CHECK(m[1] == 0.0);
      d.velocity_mode(q, x, 1.0, m);
      CHECK(m[1] == 0.0);
    }
}

TEST_CASE("wall velocity is the trace of the grid field", "[discretization]") {
  const Discretization d(ChannelDomain{2.0}, 5, 5);
  const VectorXd c = random_vector(d.velocity_size(), 4);
  double m[6];
  for (int wall = 0; wall < 2; ++wall) {
    const VectorXd u = d.wall_velocity(c, wall);
    for (int i = 0; i < d.grid().nx; i += 3) {
      double acc = 0.0;
      for (int q = 0; q < d.velocity_size(); ++q) {
        d.velocity_mode(q, d.grid().x[i], wall, m);
        acc += c[q] * m[0];
      }
      CHECK_THAT(u[i], WithinAbs(acc, 1e-12));
    }
  }
}

TEST_CASE("projection inverts evaluation", "[discretization]") {
  const Discretization d(ChannelDomain{2.0}, 8, 7);
  const VectorXd c = random_vector(d.velocity_size(), 5);
  const VelocityGrid V = d.eval_velocity(c);
  CHECK((d.project_velocity(V.u, V.v) - c).cwiseAbs().maxCoeff() < 1e-12);
  const VectorXd t = random_vector(d.temperature_size(), 6);
  CHECK((d.project_scalar(d.eval_scalar_values(t)) - t).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("scalar projection of closed-form fields", "[discretization]") {
  const double Lx = 2.0;
  const Discretization d(ChannelDomain{Lx}, 4, 4);
  const Grid& g = d.grid();
  const VectorXd one = d.project_scalar(MatrixXd::Ones(g.nx, g.ny));
  CHECK_THAT(one[0], WithinRel(std::sqrt(Lx), 1e-14));
  CHECK_THAT(one[0], WithinRel(d.constant_mode_integral(), 1e-14));
  CHECK(one.tail(one.size() - 1).cwiseAbs().maxCoeff() < 1e-14);
  // cos(pi y) = sqrt(Lx/2) * basis function (a = 0, l = 1)
  VectorXd cy = d.project_scalar(sample(g, [](double, double y) { return std::cos(pi * y); }));
  const int j = d.temperature().index(0, 1);
  CHECK_THAT(cy[j], WithinRel(std::sqrt(Lx / 2.0), 1e-14));
  cy[j] = 0.0;
  CHECK(cy.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("weak forms agree with pointwise quadrature", "[discretization]") {
  const Discretization d(ChannelDomain{2.0}, 4, 4);
  const Grid& g = d.grid();
  const MatrixXd G11 = sample(g, [](double x, double y) { return std::sin(pi * x) + y * y; });
  const MatrixXd G12 = sample(g, [](double x, double y) { return std::cos(pi * x) * y; });
  const MatrixXd G21 = sample(g, [](double x, double y) { return x * (1.0 - y); });
  const MatrixXd G22 = sample(g, [](double, double y) { return std::exp(y); });
  const MatrixXd F1 = sample(g, [](double x, double y) { return x + y; });
  const MatrixXd F2 = sample(g, [](double x, double y) { return x * y; });
  const VectorXd rows = d.project_velocity_forms(F1, F2, &G11, &G12, &G21, &G22);
  double m[6];
  for (int q : {0, 5, 13}) {
    double s = 0.0;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        d.velocity_mode(q, g.x[i], g.y[j], m);
        s += g.W(i, j) * (F1(i, j) * m[0] + F2(i, j) * m[1] + G11(i, j) * m[2] +
                          G12(i, j) * m[3] + G21(i, j) * m[4] + G22(i, j) * m[5]);
      }
    CHECK_THAT(rows[q], WithinAbs(s, 1e-12));
  }
  const VectorXd srows = d.project_scalar_forms(&F1, &G11, &G22);
  for (int q : {0, 6, 11}) {
    double s = 0.0;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        d.scalar_mode(q, g.x[i], g.y[j], m);
        s += g.W(i, j) * (F1(i, j) * m[0] + G11(i, j) * m[1] + G22(i, j) * m[2]);
      }
    CHECK_THAT(srows[q], WithinAbs(s, 1e-12));
  }
}

TEST_CASE("Neumann eigenvalues of the cosine modes", "[discretization]") {
  const double Lx = 2.0;
  const Discretization d(ChannelDomain{Lx}, 4, 4);
  CHECK(d.scalar_laplace_eigenvalue(0) == 0.0);
  CHECK_THAT(d.scalar_laplace_eigenvalue(d.temperature().index(0, 3)), WithinRel(9 * pi * pi, 1e-15));
  const double k = 2.0 * pi / Lx;  // a = 1, 2 share the first wavenumber
  CHECK_THAT(d.scalar_laplace_eigenvalue(d.temperature().index(2, 1)),
             WithinRel(k * k + pi * pi, 1e-15));
}

TEST_CASE("norms by quadrature", "[discretization]") {
  const Discretization d(ChannelDomain{2.0}, 4, 4);
  const Grid& g = d.grid();
  const MatrixXd one = MatrixXd::Ones(g.nx, g.ny);
  CHECK_THAT(lq_power(g, {&one}, 3.0), WithinRel(2.0, 1e-14));
  CHECK_THAT(lq_power(g, {&one, &one}, 2.0), WithinRel(4.0, 1e-14));
  CHECK_THAT(linf({&one, &one}), WithinRel(std::sqrt(2.0), 1e-15));
  // f = cos(pi y): ||f||_2^2 = Lx/2, ||f_y||_2^2 = pi^2 Lx/2
  VectorXd t = VectorXd::Zero(d.temperature_size());
  t[d.temperature().index(0, 1)] = 1.0;  // basis function is cos(pi y) when Lx = 2
  const ScalarGrid f = d.eval_scalar(t);
  CHECK_THAT(scalar_norm(g, f, 2.0), WithinRel(1.0, 1e-14));
  CHECK_THAT(scalar_norm(g, f, 2.0, 1), WithinRel(std::sqrt(1.0 + pi * pi), 1e-13));
  CHECK_THAT(scalar_norm(g, f, INFINITY), WithinRel(1.0, 1e-2));
  CHECK_THROWS_AS(scalar_norm(g, f, 0.5), std::invalid_argument);
}
