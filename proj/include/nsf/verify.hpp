#pragma once
// Invariant suite behind `nsf verify`: one run, every structural check.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nsf/constitutive.hpp"
#include "nsf/diagnostics.hpp"

namespace nsf {

struct InvariantCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool upper = true;  // value <= bound when true, value >= bound otherwise
  bool pass() const { return upper ? value <= bound : value >= bound; }
};

struct VerifyOptions {
  int bank_size = 50;
  double slack_tol = 1e-6;
  double energy_tol = 1e-8;
  double identity_tol = 1e-10;
  double pressure_tol = 1e-8;
  std::size_t constitutive_samples = 10000;
  // the weak checks integrate in time over the output samples; the cadence is
  // doubled until halving it moves no inequality slack by more than slack_tol
  int min_outputs = 40;
  int max_outputs = 2560;
};

/// Output count that is a multiple of cfg.outputs reaching `target` where
/// possible. Fixed-step runs only refine by factors that keep dt dividing the
/// output interval.
inline int refined_outputs(const RunConfig& cfg, int target) {
  int factor = std::max(1, (target + cfg.outputs - 1) / cfg.outputs);
  if (cfg.integrator != IntegratorKind::dopri45) {
    const long steps = std::lround(cfg.t_end / cfg.outputs / cfg.dt);
    while (factor > 1 && steps % factor != 0) --factor;
  }
  return cfg.outputs * factor;
}

/// Largest change of an inequality slack between the full trajectory and
/// every other sample of it.
inline double slack_cadence_change(const WeakResidualReport& fine, const WeakResidualReport& coarse) {
  double d = 0.0;
  auto upd = [&](const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
      if (!std::isnan(a[i]) && !std::isnan(b[i])) d = std::max(d, std::fabs(a[i] - b[i]));
  };
  upd(fine.entropy_slack, coarse.entropy_slack);
  upd(fine.temperature_slack, coarse.temperature_slack);
  return d;
}

struct VerifyResult {
  std::vector<InvariantCheck> checks;
  int outputs = 0;              // cadence of the run the checks refer to
  double cadence_change = 0.0;  // slack change against half that cadence
};

inline VerifyResult verify_run(RunConfig cfg, const VerifyOptions& opt = {}) {
  VerifyResult res;
  cfg.outputs = refined_outputs(cfg, opt.min_outputs);
  RunResult r;
  WeakResidualReport w;
  for (;;) {
    const GalerkinSystem sys(cfg);
    r = run(sys, prepare_initial_data(sys));
    w = weak_residuals(sys, r.trajectory, opt.bank_size, cfg.seed);
    res.outputs = cfg.outputs;
    res.cadence_change = INFINITY;
    if (cfg.outputs % 2 == 0 && cfg.outputs >= 4) {
      std::vector<FluidState> half;
      for (std::size_t i = 0; i < r.trajectory.size(); i += 2) half.push_back(r.trajectory[i]);
      res.cadence_change =
          slack_cadence_change(w, weak_residuals(sys, half, opt.bank_size, cfg.seed));
    }
    if (res.cadence_change <= opt.slack_tol) break;
    const int next = refined_outputs(cfg, 2 * cfg.outputs);
    if (next == cfg.outputs || next > opt.max_outputs) break;
    cfg.outputs = next;
  }
  const auto& rep = r.report;
  auto& out = res.checks;
  auto upper = [&](std::string n, double v, double b) { out.push_back({std::move(n), v, b, true}); };
  auto lower = [&](std::string n, double v, double b) { out.push_back({std::move(n), v, b, false}); };

  upper("energy_residual", energy_balance(rep).max_relative, opt.energy_tol);

  double conv = 0.0, transp = 0.0, buoy = 0.0, pres = 0.0, tmin = INFINITY, tmax = -INFINITY;
  for (const auto& s : rep.samples) {
    conv = std::max(conv, s.conv_orth);
    transp = std::max(transp, s.transport_orth);
    buoy = std::max(buoy, s.buoyancy_cancel);
    pres = std::max(pres, s.pressure_residual);
    tmin = std::min(tmin, s.theta_min);
    tmax = std::max(tmax, s.theta_max);
  }
  upper("convective_orthogonality", conv, opt.identity_tol);
  upper("transport_orthogonality", transp, opt.identity_tol);
  upper("buoyancy_cancellation", buoy, opt.identity_tol);
  upper("pressure_weak_residual", pres, opt.pressure_tol);

  const auto en = entropy_balance(rep);
  lower("min_conduction_integrand", en.min_conduction_integrand, 0.0);
  lower("min_dissipation_integrand", en.min_dissipation_integrand, 0.0);
  lower("theta_min_over_theta_max", tmin / tmax, -opt.slack_tol);

  const auto tc = tail_check(rep);
  lower("tail_nonincreasing", tc.nonincreasing ? 1.0 : 0.0, 1.0);
  lower("tail_zero_above_max", tc.zero_above_max ? 1.0 : 0.0, 1.0);

  lower("entropy_inequality_slack", w.min_entropy_slack, -opt.slack_tol);
  lower("temperature_inequality_slack", w.min_temperature_slack, -opt.slack_tol);

  const auto a =
      verify_assumptions<2>(cfg.constitutive, opt.constitutive_samples, cfg.seed);
  upper("constitutive_violations", static_cast<double>(a.violations()), 0.0);
  return res;
}

}  // namespace nsf
