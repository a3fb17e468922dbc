#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "nsf/diagnostics.hpp"

using namespace nsf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

RunConfig blob_config(int n, double t_end, int outputs) {
  RunConfig cfg;
  cfg.scenario = "buoyant-blob";
  cfg.n = cfg.m = n;
  cfg.constitutive.nu_lo = cfg.constitutive.nu_hi = 0.05;
  cfg.constitutive.kappa_lo = cfg.constitutive.kappa_hi = 0.05;
  cfg.t_end = t_end;
  cfg.outputs = outputs;
  return cfg;
}

DiagnosticsSample synthetic_sample(double t, double theta_max, std::vector<double> tail) {
  DiagnosticsSample s;
  s.t = t;
  s.theta_min = 1.0;
  s.theta_max = theta_max;
  s.entropy = 0.0;
  s.tail = tail;
  s.tail_majorant = tail;
  return s;
}

}  // namespace

TEST_CASE("tail integrals of a linear temperature profile", "[diagnostics]") {
  // theta = 1 + y, |grad theta| = 1 on a channel of length 2:
  //   T(m) = m * 2 * int_{max(0, m-1)}^1 (1+y)^-2 dy,  majorant 2 * int (1+y)^-1 dy
  const Grid g = make_grid(ChannelDomain{2.0}, 8, 2.0);
  ScalarGrid th;
  th.f = sample(g, [](double, double y) { return 1.0 + y; });
  th.fx = MatrixXd::Zero(g.nx, g.ny);
  th.fy = MatrixXd::Ones(g.nx, g.ny);
  std::vector<double> tail, maj;
  tail_integrals(g, th, {0.5, 1.0, 1.5, 2.0, 4.0}, tail, maj);
  CHECK_THAT(tail[0], WithinRel(0.5 * 2.0 * 0.5, 1e-13));
  CHECK_THAT(tail[1], WithinRel(1.0 * 2.0 * 0.5, 1e-13));
  CHECK_THAT(maj[1], WithinRel(2.0 * std::log(2.0), 1e-13));
  // indicator cuts through the quadrature, so only first-order accuracy here
  CHECK_THAT(tail[2], WithinRel(1.5 * 2.0 * (1.0 / 1.5 - 0.5), 5e-2));
  CHECK(tail[3] == 0.0);
  CHECK(tail[4] == 0.0);
  CHECK(maj[4] == 0.0);
}

TEST_CASE("tail check flags increases and nonzero values above the maximum", "[diagnostics]") {
  DiagnosticsReport rep;
  rep.tail_ladder = {1.0, 2.0, 4.0};
  rep.samples.push_back(synthetic_sample(0.0, 3.0, {0.5, 0.2, 0.0}));
  CHECK(tail_check(rep).nonincreasing);
  CHECK(tail_check(rep).zero_above_max);
  rep.samples.push_back(synthetic_sample(1.0, 3.0, {0.5, 0.6, 0.0}));
  CHECK_FALSE(tail_check(rep).nonincreasing);
  rep.samples.back() = synthetic_sample(1.0, 3.0, {0.5, 0.2, 1e-300});
  CHECK_FALSE(tail_check(rep).zero_above_max);
  rep.tail_ladder = {2.0, 1.0, 4.0};
  CHECK_THROWS_AS(tail_check(rep), std::invalid_argument);
}

TEST_CASE("energy and entropy balances from samples", "[diagnostics]") {
  DiagnosticsReport rep;
  for (int i = 0; i < 3; ++i) {
    DiagnosticsSample s = synthetic_sample(0.5 * i, 2.0, {});
    s.energy = 4.0;
    s.energy_residual = i == 2 ? -4e-9 : 2e-9;
    s.entropy = 0.1 * i;
    s.acc.entropy_change = 0.1 * i;
    s.acc.conduction = 0.05 * i;
    s.acc.dissipation = 0.05 * i;
    s.min_conduction_integrand = 0.0;
    rep.samples.push_back(s);
  }
  const auto eb = energy_balance(rep);
  CHECK_THAT(eb.max_relative, WithinRel(1e-9, 1e-12));
  CHECK_THAT(eb.final_signed, WithinRel(-1e-9, 1e-12));
  const auto en = entropy_balance(rep);
  CHECK_FALSE(en.positivity_violation);
  CHECK(en.final_time_defect == 0.0);
  CHECK_THAT(en.final_space_defect, WithinAbs(0.0, 1e-16));

  rep.samples[1].theta_min = -0.01;
  const auto bad = entropy_balance(rep);
  CHECK(bad.positivity_violation);
  CHECK(std::isnan(bad.time_defect[1]));
}

TEST_CASE("monitor exponents are range checked", "[diagnostics]") {
  DiagnosticsReport rep;
  for (int i = 0; i < 3; ++i) {
    DiagnosticsSample s = synthetic_sample(0.5 * i, 2.0, {});
    s.energy = 3.0;
    rep.samples.push_back(s);
  }
  const auto rows = apriori_monitors(rep, 1.5, 1.2);
  REQUIRE(rows.front().name == "energy");
  CHECK_THAT(rows.front().integral, WithinRel(3.0, 1e-15));
  CHECK(rows.front().sup == 3.0);
  CHECK_THROWS_AS(apriori_monitors(rep, 5.0 / 3.0, 1.2), std::invalid_argument);
  CHECK_THROWS_AS(apriori_monitors(rep, 0.9, 1.2), std::invalid_argument);
  CHECK_THROWS_AS(apriori_monitors(rep, 1.5, 1.25), std::invalid_argument);
}

TEST_CASE("time cut-off", "[diagnostics]") {
  const TimeCutoff chi{2.0};
  CHECK(chi.value(0.0) == 1.0);
  CHECK_THAT(chi.value(2.0), WithinAbs(0.0, 1e-16));
  CHECK(chi.deriv(0.0) == 0.0);
  const double h = 1e-6, t = 0.7;
  CHECK_THAT(chi.deriv(t), WithinAbs((chi.value(t + h) - chi.value(t - h)) / (2 * h), 1e-9));
}

TEST_CASE("diagnostics of the rest state", "[diagnostics]") {
  RunConfig cfg;
  cfg.n = cfg.m = 6;
  const GalerkinSystem sys(cfg);
  const FluidState s = prepare_initial_data(sys);
  const DiagnosticsSample d = sample_diagnostics(sys, s, kNaN);
  CHECK(d.energy_residual == 0.0);
  CHECK(d.kinetic == 0.0);
  CHECK_THAT(d.thermal, WithinRel(2.0, 1e-14));
  CHECK_THAT(d.theta_min, WithinRel(1.0, 1e-14));
  CHECK_THAT(d.entropy, WithinAbs(0.0, 1e-14));
  CHECK(d.conv_orth == 0.0);
  for (double v : d.tail) CHECK(v < 1e-28);  // projection round-off in the gradient
  CHECK(d.pressure_residual <= 1e-10);
}

TEST_CASE("short buoyant run satisfies the monitored balances", "[diagnostics]") {
  const RunConfig cfg = blob_config(8, 0.4, 8);
  const GalerkinSystem sys(cfg);
  const RunResult r = run(sys, prepare_initial_data(sys));
  CHECK(energy_balance(r.report).max_relative < 1e-8);
  const auto en = entropy_balance(r.report);
  CHECK_FALSE(en.positivity_violation);
  CHECK(std::fabs(en.final_time_defect) < 1e-8);
  CHECK(en.min_conduction_integrand >= 0.0);
  CHECK(en.min_dissipation_integrand >= 0.0);
  const auto tc = tail_check(r.report);
  CHECK(tc.nonincreasing);
  CHECK(tc.zero_above_max);
  for (const auto& s : r.report.samples) {
    CHECK(s.conv_orth < 1e-10);
    CHECK(s.transport_orth < 1e-10);
    CHECK(s.buoyancy_cancel < 1e-10);
  }

  const auto w = weak_residuals(sys, r.trajectory, 20, 3);
  CHECK(w.momentum.size() == 20);
  CHECK(w.max_momentum < 1e-4);
  CHECK(w.min_entropy_slack >= -1e-6);
  CHECK(w.min_temperature_slack >= -1e-6);
  CHECK(w.max_energy_identity < 1e-4);
  CHECK_THROWS_AS(weak_residuals(sys, {r.trajectory[0], r.trajectory[1]}, 5, 1),
                  std::invalid_argument);
}

TEST_CASE("weak residuals vanish on the rest state", "[diagnostics]") {
  auto residuals = [](int outputs) {
    RunConfig cfg;
    cfg.n = cfg.m = 6;
    cfg.t_end = 0.2;
    cfg.outputs = outputs;
    const GalerkinSystem sys(cfg);
    const RunResult r = run(sys, prepare_initial_data(sys));
    return weak_residuals(sys, r.trajectory, 10, 1);
  };
  const auto w = residuals(4);
  CHECK(w.max_momentum < 1e-10);
  CHECK(w.min_temperature_slack >= -1e-10);
  // the energy density is constant, so what is left is the Simpson error of
  // int chi' dt, which drops by 16 per halving
  const auto w2 = residuals(8);
  CHECK(w.max_energy_identity > 0.0);
  CHECK(w.max_energy_identity / w2.max_energy_identity > 12.0);
}

TEST_CASE("empirical Korn and interpolation ratios are finite and stable", "[diagnostics]") {
  const Discretization disc(ChannelDomain{2.0}, 4, 4, 2.0, false);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<VectorXd> vs, ts;
  double korn_running = 0.0, interp_running = 0.0;
  for (int i = 0; i < 200; ++i) {
    VectorXd c(disc.velocity_size()), d(disc.temperature_size());
    for (auto& x : c) x = N(rng);
    for (auto& x : d) x = N(rng);
    vs.push_back(c);
    ts.push_back(d);
    if (i == 9) {
      korn_running = korn_check(disc, vs, 2.0);
      interp_running = interp_check(disc, ts, 2.0);
    }
  }
  const double korn = korn_check(disc, vs, 2.0), interp = interp_check(disc, ts, 2.0);
  CHECK(std::isfinite(korn));
  CHECK(korn > 0.0);
  CHECK(korn <= 10.0 * korn_running);
  CHECK(std::isfinite(interp));
  CHECK(interp <= 10.0 * interp_running);
  // zero samples are skipped, constants are fine for the interpolation ratio
  VectorXd one = VectorXd::Zero(disc.temperature_size());
  one[0] = 1.0;
  CHECK(korn_check(disc, {VectorXd::Zero(disc.velocity_size())}, 2.0) == 0.0);
  CHECK(std::isfinite(interp_check(disc, {one}, 2.0)));
  CHECK(interp_check(disc, {one}, 2.0) > 0.0);
}

TEST_CASE("identity defects stay at round-off when a term vanishes", "[diagnostics]") {
  // pure shear: the convective, transport and buoyancy terms are all zero
  RunConfig cfg;
  cfg.n = cfg.m = 6;
  cfg.scenario = "shear-decay";
  const GalerkinSystem sys(cfg);
  const FluidState s = prepare_initial_data(sys);
  const StateFields F = sys.fields(s.c, s.d);
  const RhsTerms T = sys.terms(F);
  const IdentityDefects id = identity_defects(sys, F, s.c, s.d, T);
  CHECK(id.convective < 1e-14);
  CHECK(id.transport < 1e-14);
  CHECK(id.buoyancy < 1e-14);
  CHECK(s.c.cwiseAbs().maxCoeff() > 0.1);
}
