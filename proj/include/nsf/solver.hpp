#pragma once
// Two-level Galerkin ODE for the k-truncated system on the channel, initial
// data preparation and time integrators.
//
// Unknowns: velocity coefficients c, temperature coefficients d, and a few
// scalar accumulators that are integrated alongside the state (boundary
// dissipation and the entropy production integrals). Accumulators do not
// take part in step-size control.

#include <Eigen/Dense>
#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsf/constitutive.hpp"
#include "nsf/discretization.hpp"
#include "nsf/exponents.hpp"
#include "nsf/truncation.hpp"

namespace nsf {

/// Raised when time integration cannot proceed (non-finite values, step-size
/// underflow, nonlinear solver breakdown). `dump` carries the state summary.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, std::string dump)
      : std::runtime_error(what), dump_(std::move(dump)) {}
  const std::string& dump() const { return dump_; }

 private:
  std::string dump_;
};

enum class IntegratorKind { dopri45, dopri5_fixed, backward_euler };
enum class ConvectiveForm { skew, plain };

inline IntegratorKind parse_integrator(const std::string& s) {
  if (s == "dopri45") return IntegratorKind::dopri45;
  if (s == "dopri5-fixed") return IntegratorKind::dopri5_fixed;
  if (s == "backward-euler") return IntegratorKind::backward_euler;
  throw std::invalid_argument("unknown integrator '" + s +
                              "' (expected dopri45, dopri5-fixed or backward-euler)");
}

inline std::string integrator_tag(IntegratorKind k) {
  switch (k) {
    case IntegratorKind::dopri45: return "dopri45";
    case IntegratorKind::dopri5_fixed: return "dopri5-fixed";
    case IntegratorKind::backward_euler: return "backward-euler";
  }
  return "?";
}

inline ConvectiveForm parse_convective_form(const std::string& s) {
  if (s == "skew") return ConvectiveForm::skew;
  if (s == "plain") return ConvectiveForm::plain;
  throw std::invalid_argument("unknown convective_form '" + s + "' (expected skew or plain)");
}

inline std::string convective_tag(ConvectiveForm f) {
  return f == ConvectiveForm::skew ? "skew" : "plain";
}

struct RunConfig {
  std::string scenario = "steady";
  ConstitutiveParams constitutive;
  double k = 100.0;
  int n = 8;
  int m = 8;
  double grid_factor = 2.0;
  bool mean_flow = true;
  double Lx = 2.0;
  int dimension = 2;
  double alpha = 0.0;
  std::array<double, 2> f{0.0, -1.0};
  double t_end = 1.0;
  double dt = 0.0;  // step for fixed-step integrators; initial guess (0 = automatic) otherwise
  IntegratorKind integrator = IntegratorKind::dopri45;
  double rtol = 1e-8;
  double atol = 1e-10;
  int outputs = 20;
  double n_moll = -1.0;  // < 0: use n; 0: no mollification
  std::uint64_t seed = 1;
  ConvectiveForm convective = ConvectiveForm::skew;
  double entropy_eps = 0.0;
  bool pressure = false;
  bool dump_fields = true;

  // scenario parameters
  double blob_amplitude = 1.0;
  double blob_sigma = 0.15;
  double blob_x = -1.0;  // < 0: channel centre
  double blob_y = 0.5;
  double shear_amplitude = 1.0;

  // diagnostics
  std::vector<double> tail_ladder{1.0, 2.0, 4.0, 8.0};
  double monitor_q = 1.5;
  double monitor_r = 1.2;

  double mollifier_radius() const {
    const double nm = n_moll < 0.0 ? static_cast<double>(n) : n_moll;
    return nm == 0.0 ? 0.0 : 1.0 / nm;
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
    if (dimension != 2 && dimension != 3) fail("d must be 2 or 3");
    if (!galerkin_admissible(constitutive.p, dimension))
      fail("p = " + std::to_string(constitutive.p) + " is not admissible in dimension d = " +
           std::to_string(dimension) + ": the Galerkin construction needs p > 2d/(d+2) = " +
           std::to_string(2.0 * dimension / (dimension + 2.0)));
    if (dimension != 2) fail("the simulator runs in d = 2 only (the exponent tools accept d = 3)");
    constitutive.validate(dimension);
    TruncationLevel check(k);
    (void)check;
    if (n < 1 || m < 1) fail("n and m must be >= 1");
    if (!(grid_factor >= 1.0)) fail("grid factor must be >= 1");
    if (!(Lx > 0.0 && std::isfinite(Lx))) fail("Lx must be positive");
    if (!(alpha >= 0.0 && std::isfinite(alpha))) fail("alpha must be >= 0");
    if (!(std::isfinite(f[0]) && std::isfinite(f[1]))) fail("body force must be finite");
    if (!(t_end > 0.0 && std::isfinite(t_end))) fail("t_end must be > 0");
    if (!(dt >= 0.0 && std::isfinite(dt))) fail("dt must be >= 0");
    if (integrator != IntegratorKind::dopri45 && dt == 0.0)
      fail("fixed-step integrators need dt > 0");
    if (!(rtol > 0.0 && atol > 0.0)) fail("tolerances must be positive");
    if (outputs < 1) fail("outputs must be >= 1");
    if (!(entropy_eps >= 0.0)) fail("entropy_eps must be >= 0");
    if (!(blob_sigma > 0.0)) fail("blob_sigma must be > 0");
    if (!(blob_amplitude > -1.0)) fail("blob_amplitude must be > -1 so that theta0 > 0");
    for (std::size_t i = 1; i < tail_ladder.size(); ++i)
      if (!(tail_ladder[i] > tail_ladder[i - 1])) fail("tail_ladder must be increasing");
  }
};

/// Initial data as callables on the channel.
struct InitialData {
  std::function<double(double, double)> theta0;
  std::function<std::array<double, 2>(double, double)> v0;
};

inline InitialData scenario_initial_data(const RunConfig& cfg) {
  InitialData id;
  const double Lx = cfg.Lx;
  const double pi = std::numbers::pi;
  id.v0 = [](double, double) { return std::array<double, 2>{0.0, 0.0}; };
  id.theta0 = [](double, double) { return 1.0; };
  if (cfg.scenario == "steady") return id;
  if (cfg.scenario == "buoyant-blob") {
    const double A = cfg.blob_amplitude, s = cfg.blob_sigma;
    const double x0 = cfg.blob_x < 0.0 ? 0.5 * Lx : cfg.blob_x, y0 = cfg.blob_y;
    id.theta0 = [=](double x, double y) {
      double dx = std::fabs(x - x0);
      dx = std::min(dx, Lx - dx);  // periodic distance
      const double r2 = dx * dx + (y - y0) * (y - y0);
      return 1.0 + A * std::exp(-0.5 * r2 / (s * s));
    };
    return id;
  }
  if (cfg.scenario == "shear-decay") {
    const double U = cfg.shear_amplitude;
    id.v0 = [=](double, double y) { return std::array<double, 2>{U * std::cos(pi * y), 0.0}; };
    return id;
  }
  if (cfg.scenario == "conduction") {
    // a single cosine mode pair, so the Galerkin projection is exact; theta0 in [1, 2]
    id.theta0 = [=](double x, double y) {
      return 1.5 + 0.25 * std::cos(pi * y) * (1.0 + std::cos(2.0 * pi * x / Lx));
    };
    return id;
  }
  throw std::invalid_argument("unknown scenario '" + cfg.scenario +
                              "' (expected steady, buoyant-blob, shear-decay or conduction)");
}

/// log(theta0) extended by zero outside the channel and averaged with a
/// compactly supported bump of the given radius, evaluated on the grid.
/// radius = 0 returns log(theta0) sampled directly.
inline MatrixXd mollified_log(const Grid& g, double Lx,
                              const std::function<double(double, double)>& theta0, double radius,
                              int sub = 8) {
  auto eta0 = [&](double x, double y) {
    if (y <= 0.0 || y >= 1.0) return 0.0;
    double xp = std::fmod(x, Lx);
    if (xp < 0.0) xp += Lx;
    const double th = theta0(xp, y);
    if (!(th > 0.0) || !std::isfinite(th)) {
      std::ostringstream os;
      os << "initial temperature must be positive and finite, got " << th << " at (" << xp << ", "
         << y << ")";
      throw std::invalid_argument(os.str());
    }
    return std::log(th);
  };
  MatrixXd out(g.nx, g.ny);
  if (radius == 0.0) {
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) out(i, j) = eta0(g.x[i], g.y[j]);
    return out;
  }
  struct Tap { double dx, dy, w; };
  std::vector<Tap> taps;
  const double h = radius / sub;
  double wsum = 0.0;
  for (int a = -sub; a <= sub; ++a)
    for (int b = -sub; b <= sub; ++b) {
      const double r = h * std::sqrt(double(a * a + b * b)) / radius;
      if (r >= 1.0) continue;
      const double w = std::exp(-1.0 / (1.0 - r * r));
      taps.push_back({a * h, b * h, w});
      wsum += w;
    }
  for (auto& t : taps) t.w /= wsum;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      double s = 0.0;
      for (const auto& t : taps) s += t.w * eta0(g.x[i] + t.dx, g.y[j] + t.dy);
      out(i, j) = s;
    }
  return out;
}

struct Accumulators {
  double boundary = 0.0;       // int alpha sum_walls g_k(|u|) u^2
  double entropy_change = 0.0; // int Q[theta_t / (theta + eps)]
  double conduction = 0.0;     // int Q[kappa |grad theta|^2 / (theta + eps)^2]
  double dissipation = 0.0;    // int Q[S:D / (theta + eps)]
  double buoyancy = 0.0;       // int Q[T_k(theta*) v.f / (theta + eps)]
  static constexpr int count = 5;
};

struct FluidState {
  double t = 0.0;
  VectorXd c;
  VectorXd d;
  Accumulators acc;
};

/// Grid fields of the evaluated state and the pointwise constitutive quantities.
struct StateFields {
  VelocityGrid v;
  ScalarGrid th;
  MatrixXd S11, S12, S22;  // viscous stress
  MatrixXd SD;             // S:D
  MatrixXd g;              // g_k(|v|^2)
  MatrixXd Tk;             // T_k(theta)
  MatrixXd Tks;            // T_k(max(theta, 0))
  MatrixXd kappa;
  VectorXd u_wall[2];
};

/// Right-hand side split by physical term (used for the structural identities).
struct RhsTerms {
  VectorXd mom_viscous, mom_convective, mom_buoyancy, mom_boundary;
  VectorXd tem_transport, tem_conduction, tem_dissipation, tem_sink;
};

class GalerkinSystem {
 public:
  explicit GalerkinSystem(const RunConfig& cfg)
      : cfg_(cfg),
        disc_(ChannelDomain{cfg.Lx}, cfg.n, cfg.m, cfg.grid_factor, cfg.mean_flow) {
    cfg_.validate();
  }

  const RunConfig& config() const { return cfg_; }
  const Discretization& disc() const { return disc_; }
  int nv() const { return disc_.velocity_size(); }
  int nt() const { return disc_.temperature_size(); }
  int controlled_size() const { return nv() + nt(); }
  int size() const { return nv() + nt() + Accumulators::count; }

  VectorXd pack(const FluidState& s) const {
    VectorXd y(size());
    y.head(nv()) = s.c;
    y.segment(nv(), nt()) = s.d;
    const int o = nv() + nt();
    y[o] = s.acc.boundary;
    y[o + 1] = s.acc.entropy_change;
    y[o + 2] = s.acc.conduction;
    y[o + 3] = s.acc.dissipation;
    y[o + 4] = s.acc.buoyancy;
    return y;
  }

  FluidState unpack(double t, const VectorXd& y) const {
    FluidState s;
    s.t = t;
    s.c = y.head(nv());
    s.d = y.segment(nv(), nt());
    const int o = nv() + nt();
    s.acc.boundary = y[o];
    s.acc.entropy_change = y[o + 1];
    s.acc.conduction = y[o + 2];
    s.acc.dissipation = y[o + 3];
    s.acc.buoyancy = y[o + 4];
    return s;
  }

  StateFields fields(const VectorXd& c, const VectorXd& d) const {
    const double k = cfg_.k;
    const auto& prm = cfg_.constitutive;
    StateFields F;
    F.v = disc_.eval_velocity(c);
    F.th = disc_.eval_scalar(d);
    const int nx = disc_.grid().nx, ny = disc_.grid().ny;
    F.S11.resize(nx, ny); F.S12.resize(nx, ny); F.S22.resize(nx, ny);
    F.SD.resize(nx, ny); F.g.resize(nx, ny); F.Tk.resize(nx, ny); F.Tks.resize(nx, ny);
    F.kappa.resize(nx, ny);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double th = F.th.f(i, j);
        const double ths = std::max(th, 0.0);
        const double d11 = F.v.ux(i, j), d22 = F.v.vy(i, j);
        const double d12 = 0.5 * (F.v.uy(i, j) + F.v.vx(i, j));
        const double dn2 = d11 * d11 + 2.0 * d12 * d12 + d22 * d22;
        const double mu = dn2 == 0.0 ? 0.0 : stress_multiplier(ths, dn2, prm);
        F.S11(i, j) = mu * d11;
        F.S12(i, j) = mu * d12;
        F.S22(i, j) = mu * d22;
        F.SD(i, j) = mu * dn2;
        const double u = F.v.u(i, j), v = F.v.v(i, j);
        F.g(i, j) = g_cut(u * u + v * v, k);
        F.Tk(i, j) = t_cut(th, k);
        F.Tks(i, j) = t_cut(ths, k);
        F.kappa(i, j) = prm.kappa(th);
      }
    F.u_wall[0] = disc_.wall_velocity(c, 0);
    F.u_wall[1] = disc_.wall_velocity(c, 1);
    return F;
  }

  /// Tangential wall traction density -alpha g_k(|u|) u on each wall.
  std::array<VectorXd, 2> wall_traction(const StateFields& F) const {
    std::array<VectorXd, 2> h;
    for (int w = 0; w < 2; ++w) {
      h[w] = F.u_wall[w];
      for (Eigen::Index i = 0; i < h[w].size(); ++i) {
        const double u = F.u_wall[w][i];
        h[w][i] = -cfg_.alpha * g_cut(std::fabs(u), cfg_.k) * u;
      }
    }
    return h;
  }

  /// Rate of the boundary-dissipation accumulator.
  double boundary_rate(const StateFields& F) const {
    if (cfg_.alpha == 0.0) return 0.0;
    double s = 0.0;
    for (int w = 0; w < 2; ++w)
      for (Eigen::Index i = 0; i < F.u_wall[w].size(); ++i) {
        const double u = F.u_wall[w][i];
        s += g_cut(std::fabs(u), cfg_.k) * u * u;
      }
    return cfg_.alpha * disc_.grid().wx * s;
  }

  RhsTerms terms(const VectorXd& c, const VectorXd& d) const {
    const StateFields F = fields(c, d);
    return terms(F);
  }

  RhsTerms terms(const StateFields& F) const {
    const auto& V = F.v;
    const int nx = disc_.grid().nx, ny = disc_.grid().ny;
    const MatrixXd Z = MatrixXd::Zero(nx, ny);
    RhsTerms R;
    {
      const MatrixXd m11 = -F.S11, m12 = -F.S12, m22 = -F.S22;
      R.mom_viscous = disc_.project_velocity_forms(Z, Z, &m11, &m12, &m12, &m22);
    }
    {
      MatrixXd G11, G12, G21, G22, F1, F2;
      convective_forms(F, G11, G12, G21, G22, F1, F2);
      R.mom_convective = disc_.project_velocity_forms(F1, F2, &G11, &G12, &G21, &G22);
    }
    R.mom_buoyancy = disc_.project_velocity_forms(cfg_.f[0] * F.Tks, cfg_.f[1] * F.Tks, nullptr,
                                                  nullptr, nullptr, nullptr);
    {
      const auto h = wall_traction(F);
      R.mom_boundary = disc_.project_velocity_wall(h[0], h[1]);
    }
    {
      const MatrixXd G1 = F.Tk.cwiseProduct(V.u), G2 = F.Tk.cwiseProduct(V.v);
      R.tem_transport = disc_.project_scalar_forms(nullptr, &G1, &G2);
    }
    {
      const MatrixXd G1 = -F.kappa.cwiseProduct(F.th.fx), G2 = -F.kappa.cwiseProduct(F.th.fy);
      R.tem_conduction = disc_.project_scalar_forms(nullptr, &G1, &G2);
    }
    R.tem_dissipation = disc_.project_scalar_forms(&F.SD, nullptr, nullptr);
    {
      const MatrixXd sink = -F.Tks.cwiseProduct(cfg_.f[0] * V.u + cfg_.f[1] * V.v);
      R.tem_sink = disc_.project_scalar_forms(&sink, nullptr, nullptr);
    }
    return R;
  }

  /// dy/dt for the packed state y. Returns the evaluated fields through `out`
  /// when requested.
  void rhs(const VectorXd& y, VectorXd& dy, StateFields* out = nullptr) const {
    const int nv_ = nv(), nt_ = nt();
    const VectorXd c = y.head(nv_);
    const VectorXd d = y.segment(nv_, nt_);
    StateFields F = fields(c, d);
    const auto& V = F.v;
    dy.resize(size());

    // momentum: one projection of the combined forms
    MatrixXd G11, G12, G21, G22, F1, F2;
    convective_forms(F, G11, G12, G21, G22, F1, F2);
    G11 -= F.S11;
    G12 -= F.S12;
    G21 -= F.S12;
    G22 -= F.S22;
    F1 += cfg_.f[0] * F.Tks;
    F2 += cfg_.f[1] * F.Tks;
    VectorXd mom = disc_.project_velocity_forms(F1, F2, &G11, &G12, &G21, &G22);
    if (cfg_.alpha != 0.0) {
      const auto h = wall_traction(F);
      mom += disc_.project_velocity_wall(h[0], h[1]);
    }
    dy.head(nv_) = mom;

    // temperature
    const MatrixXd T1 = F.Tk.cwiseProduct(V.u) - F.kappa.cwiseProduct(F.th.fx);
    const MatrixXd T2 = F.Tk.cwiseProduct(V.v) - F.kappa.cwiseProduct(F.th.fy);
    const MatrixXd src = F.SD - F.Tks.cwiseProduct(cfg_.f[0] * V.u + cfg_.f[1] * V.v);
    const VectorXd tem = disc_.project_scalar_forms(&src, &T1, &T2);
    dy.segment(nv_, nt_) = tem;

    // accumulators
    const int o = nv_ + nt_;
    dy[o] = boundary_rate(F);
    const Grid& g = disc_.grid();
    const double eps = cfg_.entropy_eps;
    const MatrixXd thdot = disc_.eval_scalar_values(tem);
    const MatrixXd shifted = F.th.f.array() + eps;
    if ((shifted.array() > 0.0).all()) {
      const MatrixXd inv = shifted.cwiseInverse();
      const MatrixXd grad2 = F.th.fx.cwiseAbs2() + F.th.fy.cwiseAbs2();
      dy[o + 1] = g.integrate(thdot.cwiseProduct(inv));
      dy[o + 2] = g.integrate(F.kappa.cwiseProduct(grad2).cwiseProduct(inv.cwiseAbs2()));
      dy[o + 3] = g.integrate(F.SD.cwiseProduct(inv));
      dy[o + 4] = g.integrate(
          F.Tks.cwiseProduct(cfg_.f[0] * V.u + cfg_.f[1] * V.v).cwiseProduct(inv));
    } else {
      // entropy undefined; reported as a positivity violation downstream
      const double nan = std::numeric_limits<double>::quiet_NaN();
      dy[o + 1] = dy[o + 2] = dy[o + 3] = dy[o + 4] = nan;
    }
    if (out) *out = std::move(F);
  }

  VectorXd rhs(const VectorXd& y) const {
    VectorXd dy;
    rhs(y, dy);
    return dy;
  }

  // ---- energies -----------------------------------------------------------

  double kinetic_energy(const VectorXd& c) const { return 0.5 * c.squaredNorm(); }
  /// int theta = sqrt(|Omega|) d_0 (only the constant mode has nonzero mean).
  double thermal_energy(const VectorXd& d) const { return disc_.constant_mode_integral() * d[0]; }
  double total_energy(const FluidState& s) const {
    return kinetic_energy(s.c) + thermal_energy(s.d);
  }

  // ---- initial data -------------------------------------------------------

  FluidState initial_state(const InitialData& id) const {
    const Grid& g = disc_.grid();
    FluidState s;
    s.t = 0.0;
    const MatrixXd eta = mollified_log(g, cfg_.Lx, id.theta0, cfg_.mollifier_radius());
    s.d = disc_.project_scalar(eta.array().exp().matrix());
    MatrixXd u(g.nx, g.ny), v(g.nx, g.ny);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        const auto w = id.v0(g.x[i], g.y[j]);
        if (!std::isfinite(w[0]) || !std::isfinite(w[1]))
          throw std::invalid_argument("initial velocity must be finite");
        u(i, j) = w[0];
        v(i, j) = w[1];
      }
    s.c = disc_.project_velocity(u, v);
    return s;
  }

 private:
  void convective_forms(const StateFields& F, MatrixXd& G11, MatrixXd& G12, MatrixXd& G21,
                        MatrixXd& G22, MatrixXd& F1, MatrixXd& F2) const {
    const auto& V = F.v;
    const MatrixXd gu = F.g.cwiseProduct(V.u), gv = F.g.cwiseProduct(V.v);
    G11 = gu.cwiseProduct(V.u);
    G12 = gu.cwiseProduct(V.v);
    G21 = G12;
    G22 = gv.cwiseProduct(V.v);
    if (cfg_.convective == ConvectiveForm::skew) {
      // -g grad(|v|^2/2): orthogonal to divergence-free tangential fields, and
      // cancels the quadratic term pointwise when tested with v itself
      F1 = -(gu.cwiseProduct(V.ux) + gv.cwiseProduct(V.vx));
      F2 = -(gu.cwiseProduct(V.uy) + gv.cwiseProduct(V.vy));
    } else {
      F1 = MatrixXd::Zero(V.u.rows(), V.u.cols());
      F2 = F1;
    }
  }

  RunConfig cfg_;
  Discretization disc_;
};

inline FluidState prepare_initial_data(const GalerkinSystem& sys) {
  return sys.initial_state(scenario_initial_data(sys.config()));
}

// ---- integrators --------------------------------------------------------------

struct StepStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
  long newton_iterations = 0;
  long picard_fallbacks = 0;
  double dt_min = std::numeric_limits<double>::infinity();
  double dt_max = 0.0;

  void record(double h) {
    ++accepted;
    dt_min = std::min(dt_min, h);
    dt_max = std::max(dt_max, h);
  }
};

namespace detail {

inline bool all_finite(const VectorXd& v, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

inline std::string state_dump(const GalerkinSystem& sys, double t, double h, const VectorXd& y) {
  std::ostringstream os;
  os.precision(17);
  const int nv = sys.nv(), nt = sys.nt();
  os << "t = " << t << "\nh = " << h << "\n|c|_2 = " << y.head(nv).norm()
     << "\n|d|_2 = " << y.segment(nv, nt).norm() << "\nd_0 = " << y[nv] << '\n';
  return os.str();
}

}  // namespace detail

/// Dormand-Prince 5(4) tableau.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  /// One step from (y, k1 = f(y)); writes the 5th-order solution, its
  /// derivative (FSAL) and the embedded error estimate.
  static void step(const GalerkinSystem& sys, const VectorXd& y, const VectorXd& k1, double h,
                   VectorXd& ynew, VectorXd& k7, VectorXd& err, StepStats& st) {
    VectorXd k2, k3, k4, k5, k6;
    sys.rhs(y + h * a21 * k1, k2);
    sys.rhs(y + h * (a31 * k1 + a32 * k2), k3);
    sys.rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3), k4);
    sys.rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
    sys.rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    sys.rhs(ynew, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    st.rhs_evals += 6;
  }
};

/// Backward Euler step y1 = y0 + h f(y1): modified Newton with a
/// finite-difference Jacobian, falling back to damped Picard iteration.
inline VectorXd backward_euler_step(const GalerkinSystem& sys, const VectorXd& y0, double h,
                                    StepStats& st, double tol = 1e-12) {
  const int N = sys.size();
  VectorXd f0;
  sys.rhs(y0, f0);
  ++st.rhs_evals;
  MatrixXd J(N, N);
  for (int j = 0; j < N; ++j) {
    VectorXd yp = y0;
    const double dj = 1e-7 * std::max(1.0, std::fabs(y0[j]));
    yp[j] += dj;
    VectorXd fp;
    sys.rhs(yp, fp);
    J.col(j) = (fp - f0) / dj;
  }
  st.rhs_evals += N;
  const Eigen::PartialPivLU<MatrixXd> lu(MatrixXd::Identity(N, N) - h * J);
  const int nc = sys.controlled_size();
  auto resid_norm = [&](const VectorXd& r, const VectorXd& y) {
    double s = 0.0;
    for (int i = 0; i < nc; ++i) s = std::max(s, std::fabs(r[i]) / (1.0 + std::fabs(y[i])));
    return s;
  };
  VectorXd y = y0 + h * f0;
  VectorXd f;
  for (int it = 0; it < 25; ++it) {
    sys.rhs(y, f);
    ++st.rhs_evals;
    ++st.newton_iterations;
    const VectorXd r = y - y0 - h * f;
    if (!detail::all_finite(r, nc)) break;
    if (resid_norm(r, y) < tol) return y;
    y -= lu.solve(r);
  }
  ++st.picard_fallbacks;
  y = y0;
  double omega = 0.5;
  double prev = INFINITY;
  for (int it = 0; it < 400; ++it) {
    sys.rhs(y, f);
    ++st.rhs_evals;
    const VectorXd r = y0 + h * f - y;
    const double rn = resid_norm(r, y);
    if (!std::isfinite(rn)) break;
    if (rn < tol) return y;
    if (rn > prev) omega *= 0.5;
    prev = rn;
    y += omega * r;
  }
  throw NumericalFailure("backward Euler: nonlinear solve did not converge",
                         detail::state_dump(sys, 0.0, h, y0));
}

/// Integrates from s0 to t_end and calls `sample` at t = 0 and at each of the
/// `outputs` equally spaced output times.
inline StepStats integrate(const GalerkinSystem& sys, const FluidState& s0,
                           const std::function<void(const FluidState&)>& sample) {
  const RunConfig& cfg = sys.config();
  StepStats st;
  VectorXd y = sys.pack(s0);
  double t = s0.t;
  const int nc = sys.controlled_size();
  const double interval = (cfg.t_end - t) / cfg.outputs;
  if (!(interval > 0.0)) throw std::invalid_argument("t_end must exceed the initial time");
  sample(sys.unpack(t, y));

  if (cfg.integrator == IntegratorKind::dopri45) {
    VectorXd k1;
    sys.rhs(y, k1);
    ++st.rhs_evals;
    auto scaled_norm = [&](const VectorXd& v, const VectorXd& a, const VectorXd& b) {
      double s = 0.0;
      for (int i = 0; i < nc; ++i) {
        const double sc = cfg.atol + cfg.rtol * std::max(std::fabs(a[i]), std::fabs(b[i]));
        s += (v[i] / sc) * (v[i] / sc);
      }
      return std::sqrt(s / nc);
    };
    double h = cfg.dt;
    if (h == 0.0) {
      const double d0 = scaled_norm(y, y, y), d1 = scaled_norm(k1, y, y);
      h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    }
    // keep the diffusive modes inside the real stability interval of DP5 (about -3.3),
    // otherwise the controller lets round-off in stiff modes grow to the tolerance
    const double kx = 2.0 * std::numbers::pi * std::max(cfg.n, cfg.m) / cfg.Lx;
    const double ky = std::numbers::pi * (std::max(cfg.n, cfg.m) + 1);
    const double diff = std::max(cfg.constitutive.nu_hi, cfg.constitutive.kappa_hi);
    const double h_stab = 3.0 / (diff * (kx * kx + ky * ky));
    h = std::min({h, interval, h_stab});
    VectorXd ynew, k7, err;
    const double t0 = t;
    for (int out = 1; out <= cfg.outputs; ++out) {
      const double t_out = out == cfg.outputs ? cfg.t_end : t0 + out * interval;
      while (t < t_out) {
        const bool last =
            t + h >= t_out - 4 * std::numeric_limits<double>::epsilon() * std::fabs(t_out);
        const double hs = last ? t_out - t : h;
        if (hs < 1e-14 * std::max(1.0, std::fabs(t)))
          throw NumericalFailure("step size underflow", detail::state_dump(sys, t, hs, y));
        Dopri5::step(sys, y, k1, hs, ynew, k7, err, st);
        const double en = detail::all_finite(ynew, nc) && detail::all_finite(k7, nc)
                              ? scaled_norm(err, y, ynew)
                              : INFINITY;
        if (en <= 1.0) {
          st.record(hs);
          t = last ? t_out : t + hs;
          y.swap(ynew);
          k1.swap(k7);
          const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
          // a step shortened to hit an output time says little about the next one
          h = std::min(last ? std::max(hs * fac, h * std::min(fac, 1.0)) : hs * fac, h_stab);
        } else {
          ++st.rejected;
          h = hs * (std::isfinite(en) ? std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9) : 0.25);
        }
      }
      sample(sys.unpack(t, y));
    }
    return st;
  }

  // fixed step: dt must divide the output interval
  const double steps_f = interval / cfg.dt;
  const long steps = std::lround(steps_f);
  if (steps < 1 || std::fabs(steps_f - steps) > 1e-9 * steps_f)
    throw std::invalid_argument("dt must divide the output interval (t_end/outputs)");
  const double h = interval / steps;
  const double t0 = t;
  VectorXd k1, ynew, k7, err;
  for (int out = 1; out <= cfg.outputs; ++out) {
    for (long s = 0; s < steps; ++s) {
      if (cfg.integrator == IntegratorKind::dopri5_fixed) {
        sys.rhs(y, k1);
        ++st.rhs_evals;
        Dopri5::step(sys, y, k1, h, ynew, k7, err, st);
      } else {
        ynew = backward_euler_step(sys, y, h, st);
      }
      if (!detail::all_finite(ynew, nc))
        throw NumericalFailure("non-finite state after fixed step", detail::state_dump(sys, t, h, y));
      y.swap(ynew);
      st.record(h);
      t = t0 + ((out - 1) * steps + s + 1) * h;
    }
    t = out == cfg.outputs ? cfg.t_end : t0 + out * interval;
    sample(sys.unpack(t, y));
  }
  return st;
}

/// Advances a state by one step of the configured integrator with step h
/// (the adaptive integrator takes a single unconditioned DP5 step).
inline FluidState step(const GalerkinSystem& sys, const FluidState& s, double h) {
  StepStats st;
  const VectorXd y = sys.pack(s);
  VectorXd ynew;
  if (sys.config().integrator == IntegratorKind::backward_euler) {
    ynew = backward_euler_step(sys, y, h, st);
  } else {
    VectorXd k1, k7, err;
    sys.rhs(y, k1);
    Dopri5::step(sys, y, k1, h, ynew, k7, err, st);
  }
  if (!detail::all_finite(ynew, sys.controlled_size()))
    throw NumericalFailure("non-finite state after step", detail::state_dump(sys, s.t, h, y));
  return sys.unpack(s.t + h, ynew);
}

}  // namespace nsf
