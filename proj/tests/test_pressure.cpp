#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "nsf/pressure.hpp"
#include "nsf/quadrature.hpp"

using namespace nsf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

FluidState random_state(const GalerkinSystem& sys, std::uint64_t seed, double vel, double tem) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  FluidState s;
  s.c.resize(sys.nv());
  s.d.resize(sys.nt());
  for (auto& x : s.c) x = vel * N(rng);
  for (auto& x : s.d) x = tem * N(rng);
  s.d[0] += 2.0 * sys.disc().constant_mode_integral();
  return s;
}

}  // namespace

TEST_CASE("hydrostatic pressure balances gravity", "[pressure]") {
  for (double T : {1.0, 3.5}) {
    RunConfig cfg;
    cfg.n = cfg.m = 10;
    const GalerkinSystem sys(cfg);
    FluidState s = prepare_initial_data(sys);
    s.d *= T;
    const PressureField pi_h = reconstruct_pressure(sys, s);
    const VectorXd expect = hydrostatic_coefficients(sys.disc(), T);
    INFO("T = " << T);
    CHECK((pi_h.coef - expect).cwiseAbs().maxCoeff() <= 1e-10 * expect.cwiseAbs().maxCoeff());
    CHECK(std::fabs(pressure_mean(sys, pi_h)) < 1e-13);
  }
}

TEST_CASE("hydrostatic coefficients are projections of T(1/2 - y)", "[pressure]") {
  // independent oracle: Gauss-Legendre projection of the closed-form profile
  const double Lx = 2.0, T = 2.0;
  const Discretization disc(ChannelDomain{Lx}, 6, 6);
  const VectorXd c = hydrostatic_coefficients(disc, T);
  const auto q = gauss_legendre(60, 0.0, 1.0);
  for (int l = 0; l < 6; ++l) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i)
      s += q.weights[i] * T * (0.5 - q.nodes[i]) * std::cos(l * pi * q.nodes[i]);
    // basis function cos(l pi y)/sqrt(Lx/2) for l >= 1; the x-integral contributes Lx
    const double expected = l == 0 ? 0.0 : Lx * s / std::sqrt(Lx / 2.0);
    CHECK_THAT(c[disc.temperature().index(0, l)], WithinAbs(expected, 1e-14));
  }
  for (int a = 1; a < disc.temperature().X.count; ++a)
    for (int l = 0; l < 6; ++l) CHECK(c[disc.temperature().index(a, l)] == 0.0);
}

TEST_CASE("pressure vanishes without forcing or flow", "[pressure]") {
  RunConfig cfg;
  cfg.n = cfg.m = 6;
  cfg.f = {0.0, 0.0};
  const GalerkinSystem sys(cfg);
  const PressureField p = reconstruct_pressure(sys, prepare_initial_data(sys));
  CHECK(p.coef.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("weak pressure identity holds on generic states", "[pressure]") {
  for (double alpha : {0.0, 0.8}) {
    for (double p : {1.6, 2.0, 2.7}) {
      RunConfig cfg;
      cfg.n = cfg.m = 8;
      cfg.alpha = alpha;
      cfg.constitutive.p = p;
      cfg.k = 3.0;  // let the cut-offs act on the larger states
      const GalerkinSystem sys(cfg);
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const FluidState s = random_state(sys, seed, 0.8, 0.5);
        const StateFields F = sys.fields(s.c, s.d);
        const PressureField pi_r = reconstruct_pressure(sys, F);
        INFO("alpha = " << alpha << " p = " << p << " seed " << seed);
        CHECK(pressure_weak_residual(sys, F, pi_r) <= 1e-8);
        CHECK(pi_r.coef[0] == 0.0);
        CHECK(std::fabs(pressure_mean(sys, pi_r)) < 1e-12);
      }
    }
  }
}

TEST_CASE("weak residual detects a wrong pressure", "[pressure]") {
  RunConfig cfg;
  cfg.n = cfg.m = 6;
  const GalerkinSystem sys(cfg);
  const FluidState s = random_state(sys, 4, 0.5, 0.5);
  const StateFields F = sys.fields(s.c, s.d);
  PressureField pi_r = reconstruct_pressure(sys, F);
  pi_r.coef[3] += 0.1 * pi_r.coef.cwiseAbs().maxCoeff();
  CHECK(pressure_weak_residual(sys, F, pi_r) > 1e-3);
}

TEST_CASE("pressure norm monitor uses the pressure exponent", "[pressure]") {
  const Grid g = make_grid(ChannelDomain{2.0}, 4, 2.0);
  const MatrixXd two = MatrixXd::Constant(g.nx, g.ny, 2.0);
  // p = 2: z' = 5/3, int |2|^(5/3) over area 2
  CHECK_THAT(pressure_norm_monitor(g, two, 2.0), WithinRel(2.0 * std::pow(2.0, 5.0 / 3.0), 1e-14));
  CHECK_THAT(pressure_norm_monitor(g, two, 1.5), WithinRel(2.0 * std::pow(2.0, 1.25), 1e-14));
  CHECK_THROWS_AS(pressure_norm_monitor(g, two, 1.2), std::invalid_argument);
}
