#pragma once
// Spectral bases on the periodic channel [0, Lx) x [0, 1].
//
// Velocity modes come from streamfunctions psi = X(x) sin(l pi y) with
// w = (d_y psi, -d_x psi), so every mode is divergence free and tangential at
// the walls y = 0, 1. An optional x-mean mode (1/sqrt(Lx), 0) completes the
// divergence-free tangential fields. Temperature (and pressure) modes are
// X(x) cos(l pi y), which satisfy the Neumann condition at the walls.
// X runs over 1, cos(2 pi j x/Lx), sin(2 pi j x/Lx) for j = 1..N-1.
//
// All modes are normalized analytically to be L2-orthonormal. Integrals use a
// uniform grid in x (exact for trigonometric products below the Nyquist band)
// and Gauss-Legendre nodes in y.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsf/quadrature.hpp"

namespace nsf {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ChannelDomain {
  double Lx = 2.0;
  static constexpr double Ly = 1.0;
  double area() const { return Lx * Ly; }
};

/// Collocation/quadrature grid: nx uniform nodes in x, ny Gauss-Legendre in y.
struct Grid {
  int nx = 0;
  int ny = 0;
  std::vector<double> x;
  std::vector<double> y;
  double wx = 0.0;
  std::vector<double> wy;
  MatrixXd W;  // nx x ny tensor weights

  Grid() = default;
  Grid(const ChannelDomain& dom, int nx_, int ny_) : nx(nx_), ny(ny_) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("grid sizes must be positive");
    x.resize(nx);
    for (int i = 0; i < nx; ++i) x[i] = dom.Lx * i / nx;
    wx = dom.Lx / nx;
    auto gl = gauss_legendre(ny, 0.0, 1.0);
    y = std::move(gl.nodes);
    wy = std::move(gl.weights);
    W.resize(nx, ny);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) W(i, j) = wx * wy[j];
  }

  /// Quadrature of a grid field.
  double integrate(const MatrixXd& f) const {
    const MatrixXd p = W.cwiseProduct(f);
    return pairwise_sum(std::span<const double>(p.data(), p.size()));
  }
};

/// Grid size rule: nx = 2 * factor * N, ny = factor * (ceil(3N/2) + 12).
/// This integrates products of three in-band modes exactly (to round-off).
inline Grid make_grid(const ChannelDomain& dom, int modes_per_dir, double factor) {
  if (factor < 1.0) throw std::invalid_argument("grid factor must be >= 1");
  const int nx = static_cast<int>(std::ceil(2.0 * factor * modes_per_dir));
  const int ny = static_cast<int>(std::ceil(factor * ((3 * modes_per_dir + 1) / 2 + 12)));
  return Grid(dom, std::max(nx, 4), std::max(ny, 8));
}

/// Periodic x-functions 1, cos(kx), sin(kx), ... up to wavenumber index J-1.
struct XFunctions {
  int count = 0;
  std::vector<double> wavenumber;  // per function
  MatrixXd E0, E1, E2;             // nx x count: values, first, second derivative

  XFunctions() = default;
  XFunctions(const ChannelDomain& dom, const Grid& g, int J) {
    count = 2 * J - 1;
    wavenumber.assign(count, 0.0);
    E0.resize(g.nx, count);
    E1.resize(g.nx, count);
    E2.resize(g.nx, count);
    for (int a = 0; a < count; ++a) {
      const int j = (a + 1) / 2;
      const double k = 2.0 * std::numbers::pi * j / dom.Lx;
      wavenumber[a] = k;
      for (int i = 0; i < g.nx; ++i) {
        const double x = g.x[i];
        if (a == 0) {
          E0(i, a) = 1.0; E1(i, a) = 0.0; E2(i, a) = 0.0;
        } else if (a % 2 == 1) {
          E0(i, a) = std::cos(k * x); E1(i, a) = -k * std::sin(k * x); E2(i, a) = -k * k * std::cos(k * x);
        } else {
          E0(i, a) = std::sin(k * x); E1(i, a) = k * std::cos(k * x); E2(i, a) = -k * k * std::sin(k * x);
        }
      }
    }
  }

  /// (X, X', X'') at an arbitrary abscissa.
  static void eval(int a, double k, double x, double& f, double& f1, double& f2) {
    if (a == 0) { f = 1.0; f1 = 0.0; f2 = 0.0; return; }
    const double c = std::cos(k * x), s = std::sin(k * x);
    if (a % 2 == 1) { f = c; f1 = -k * s; f2 = -k * k * c; }
    else { f = s; f1 = k * c; f2 = -k * k * s; }
  }

  /// integral over one period of X_a^2
  double mass(int a, double Lx) const { return a == 0 ? Lx : 0.5 * Lx; }
};

/// Wall-normal functions sin(l pi y), l = 1..L (kind = sine) or
/// cos(l pi y), l = 0..L-1 (kind = cosine), with two derivatives.
struct YFunctions {
  enum class Kind { sine, cosine };
  Kind kind = Kind::sine;
  int count = 0;
  MatrixXd S0, S1, S2;   // ny x count
  MatrixXd wall0, wall1; // 3 x count: value, first, second derivative at y=0 and y=1

  YFunctions() = default;
  YFunctions(const Grid& g, int L, Kind k) : kind(k), count(L) {
    S0.resize(g.ny, L);
    S1.resize(g.ny, L);
    S2.resize(g.ny, L);
    wall0.resize(3, L);
    wall1.resize(3, L);
    for (int c = 0; c < L; ++c) {
      for (int j = 0; j < g.ny; ++j) eval(c, g.y[j], S0(j, c), S1(j, c), S2(j, c));
      eval(c, 0.0, wall0(0, c), wall0(1, c), wall0(2, c));
      eval(c, 1.0, wall1(0, c), wall1(1, c), wall1(2, c));
    }
  }

  int wavenumber_index(int c) const { return kind == Kind::sine ? c + 1 : c; }

  void eval(int c, double y, double& f, double& f1, double& f2) const {
    const double w = wavenumber_index(c) * std::numbers::pi;
    if (kind == Kind::sine) {
      f = std::sin(w * y); f1 = w * std::cos(w * y); f2 = -w * w * std::sin(w * y);
    } else {
      f = std::cos(w * y); f1 = -w * std::sin(w * y); f2 = -w * w * std::cos(w * y);
    }
    // exact zeros at the walls where the analytic value vanishes
    if (y == 0.0 || y == 1.0) {
      if (kind == Kind::sine) f = 0.0; else f1 = 0.0;
    }
  }
};

/// Velocity fields and their first derivatives on the grid.
struct VelocityGrid {
  MatrixXd u, v, ux, uy, vx, vy;
};

/// Temperature-type scalar and gradient on the grid.
struct ScalarGrid {
  MatrixXd f, fx, fy;
};

/// Divergence-free tangential basis built from streamfunctions.
struct VelocityBasis {
  int modes_per_dir = 0;
  bool mean_flow = true;
  XFunctions X;
  YFunctions Y;
  RowMatrix inv_norm;  // Mx x L, scales orthonormal coefficients to raw ones
  double mean_scale = 0.0;  // 1/sqrt(Lx)

  int size() const { return X.count * Y.count + (mean_flow ? 1 : 0); }
  int mean_index() const { return X.count * Y.count; }
  int index(int a, int l) const { return a * Y.count + l; }
};

/// Neumann-compatible cosine basis (temperature and pressure).
struct TemperatureBasis {
  int modes_per_dir = 0;
  XFunctions X;
  YFunctions Y;
  RowMatrix inv_norm;

  int size() const { return X.count * Y.count; }
  int index(int a, int l) const { return a * Y.count + l; }
  /// integral of basis function 0 (the constant mode) over the domain
};

class Discretization {
 public:
  Discretization(const ChannelDomain& dom, int n_vel, int n_temp, double grid_factor = 2.0,
                 bool mean_flow = true)
      : dom_(dom), grid_factor_(grid_factor) {
    if (n_vel < 1 || n_temp < 1) throw std::invalid_argument("mode counts must be >= 1");
    if (!(dom.Lx > 0.0)) throw std::invalid_argument("channel length must be positive");
    grid_ = make_grid(dom, std::max(n_vel, n_temp), grid_factor);

    vel_.modes_per_dir = n_vel;
    vel_.mean_flow = mean_flow;
    vel_.X = XFunctions(dom, grid_, n_vel);
    vel_.Y = YFunctions(grid_, n_vel, YFunctions::Kind::sine);
    vel_.inv_norm.resize(vel_.X.count, n_vel);
    for (int a = 0; a < vel_.X.count; ++a)
      for (int l = 0; l < n_vel; ++l) {
        const double k = vel_.X.wavenumber[a];
        const double w = (l + 1) * std::numbers::pi;
        // ||w||^2 = int X^2 * int s'^2 + int X'^2 * int s^2, with int s^2 = int s'^2/w^2 = 1/2
        const double mx = vel_.X.mass(a, dom.Lx);
        vel_.inv_norm(a, l) = 1.0 / std::sqrt(mx * 0.5 * (w * w + k * k));
      }
    vel_.mean_scale = 1.0 / std::sqrt(dom.Lx);

    tmp_.modes_per_dir = n_temp;
    tmp_.X = XFunctions(dom, grid_, n_temp);
    tmp_.Y = YFunctions(grid_, n_temp, YFunctions::Kind::cosine);
    tmp_.inv_norm.resize(tmp_.X.count, n_temp);
    for (int a = 0; a < tmp_.X.count; ++a)
      for (int l = 0; l < n_temp; ++l)
        tmp_.inv_norm(a, l) = 1.0 / std::sqrt(tmp_.X.mass(a, dom.Lx) * (l == 0 ? 1.0 : 0.5));
  }

  const ChannelDomain& domain() const { return dom_; }
  const Grid& grid() const { return grid_; }
  const VelocityBasis& velocity() const { return vel_; }
  const TemperatureBasis& temperature() const { return tmp_; }
  double grid_factor() const { return grid_factor_; }

  int velocity_size() const { return vel_.size(); }
  int temperature_size() const { return tmp_.size(); }

  /// Integral of the constant temperature mode, sqrt(|Omega|); all other modes have zero mean.
  double constant_mode_integral() const { return std::sqrt(dom_.area()); }

  // ---- velocity ---------------------------------------------------------

  VelocityGrid eval_velocity(const VectorXd& c) const {
    const RowMatrix Cs = scaled(c, vel_.X.count, vel_.Y.count, vel_.inv_norm);
    const MatrixXd T0 = Cs * vel_.Y.S0.transpose();
    const MatrixXd T1 = Cs * vel_.Y.S1.transpose();
    const MatrixXd T2 = Cs * vel_.Y.S2.transpose();
    VelocityGrid g;
    g.u.noalias() = vel_.X.E0 * T1;
    g.v.noalias() = -(vel_.X.E1 * T0);
    g.ux.noalias() = vel_.X.E1 * T1;
    g.uy.noalias() = vel_.X.E0 * T2;
    g.vx.noalias() = -(vel_.X.E2 * T0);
    g.vy = -g.ux;
    if (vel_.mean_flow) g.u.array() += c[vel_.mean_index()] * vel_.mean_scale;
    return g;
  }

  /// Tangential velocity u(x, y_wall) on the uniform x nodes; wall = 0 or 1.
  VectorXd wall_velocity(const VectorXd& c, int wall) const {
    const RowMatrix Cs = scaled(c, vel_.X.count, vel_.Y.count, vel_.inv_norm);
    const MatrixXd& wv = wall == 0 ? vel_.Y.wall0 : vel_.Y.wall1;
    VectorXd u = vel_.X.E0 * (Cs * wv.row(1).transpose());
    if (vel_.mean_flow) u.array() += c[vel_.mean_index()] * vel_.mean_scale;
    return u;
  }

  /// Rows  Q[F . w_i + G : grad w_i]  for all velocity modes, where
  /// G_ab pairs with d_b w_a. Inputs are unweighted grid fields.
  VectorXd project_velocity_forms(const MatrixXd& F1, const MatrixXd& F2, const MatrixXd* G11,
                                  const MatrixXd* G12, const MatrixXd* G21,
                                  const MatrixXd* G22) const {
    const MatrixXd& W = grid_.W;
    const auto& Y = vel_.Y;
    const auto& X = vel_.X;
    MatrixXd A0 = W.cwiseProduct(F1) * Y.S1;  // pairs with X
    MatrixXd A1 = -(W.cwiseProduct(F2) * Y.S0);  // pairs with X'
    MatrixXd A2;                                 // pairs with X''
    if (G12) A0.noalias() += W.cwiseProduct(*G12) * Y.S2;
    if (G11 || G22) {
      MatrixXd d = MatrixXd::Zero(grid_.nx, grid_.ny);
      if (G11) d += *G11;
      if (G22) d -= *G22;
      A1.noalias() += W.cwiseProduct(d) * Y.S1;
    }
    RowMatrix R = X.E0.transpose() * A0;
    R.noalias() += X.E1.transpose() * A1;
    if (G21) {
      A2 = W.cwiseProduct(*G21) * Y.S0;
      R.noalias() -= X.E2.transpose() * A2;
    }
    R = R.cwiseProduct(vel_.inv_norm);
    VectorXd out(vel_.size());
    std::copy(R.data(), R.data() + R.size(), out.data());
    if (vel_.mean_flow) out[vel_.mean_index()] = grid_.integrate(F1) * vel_.mean_scale;
    return out;
  }

  /// Rows  sum_walls int_0^Lx h(x) w_i1(x, wall) dx  for a tangential wall density h.
  VectorXd project_velocity_wall(const VectorXd& h0, const VectorXd& h1) const {
    const auto& X = vel_.X;
    const auto& Y = vel_.Y;
    // sum over walls of (E0^T h) (outer) s'(wall)
    const VectorXd x0 = grid_.wx * (X.E0.transpose() * h0);
    const VectorXd x1 = grid_.wx * (X.E0.transpose() * h1);
    RowMatrix R = x0 * Y.wall0.row(1) + x1 * Y.wall1.row(1);
    R = R.cwiseProduct(vel_.inv_norm);
    VectorXd out(vel_.size());
    std::copy(R.data(), R.data() + R.size(), out.data());
    if (vel_.mean_flow) out[vel_.mean_index()] = grid_.wx * (h0.sum() + h1.sum()) * vel_.mean_scale;
    return out;
  }

  /// L2 projection of a grid vector field onto the velocity basis.
  VectorXd project_velocity(const MatrixXd& u, const MatrixXd& v) const {
    return project_velocity_forms(u, v, nullptr, nullptr, nullptr, nullptr);
  }

  // ---- temperature / cosine basis --------------------------------------

  ScalarGrid eval_scalar(const VectorXd& d) const {
    const RowMatrix Ds = scaled(d, tmp_.X.count, tmp_.Y.count, tmp_.inv_norm);
    const MatrixXd T0 = Ds * tmp_.Y.S0.transpose();
    const MatrixXd T1 = Ds * tmp_.Y.S1.transpose();
    ScalarGrid g;
    g.f.noalias() = tmp_.X.E0 * T0;
    g.fx.noalias() = tmp_.X.E1 * T0;
    g.fy.noalias() = tmp_.X.E0 * T1;
    return g;
  }

  MatrixXd eval_scalar_values(const VectorXd& d) const {
    const RowMatrix Ds = scaled(d, tmp_.X.count, tmp_.Y.count, tmp_.inv_norm);
    return tmp_.X.E0 * (Ds * tmp_.Y.S0.transpose());
  }

  /// Rows  Q[F phi_j + G . grad phi_j + H : hess phi_j]  for all cosine modes.
  /// Any of the tensor inputs may be null.
  VectorXd project_scalar_forms(const MatrixXd* F, const MatrixXd* G1, const MatrixXd* G2,
                                const MatrixXd* H11 = nullptr, const MatrixXd* H12 = nullptr,
                                const MatrixXd* H22 = nullptr) const {
    const MatrixXd& W = grid_.W;
    const auto& Y = tmp_.Y;
    const auto& X = tmp_.X;
    const int nx = grid_.nx, L = Y.count;
    MatrixXd A0 = MatrixXd::Zero(nx, L), A1 = MatrixXd::Zero(nx, L), A2 = MatrixXd::Zero(nx, L);
    if (F) A0.noalias() += W.cwiseProduct(*F) * Y.S0;
    if (G2) A0.noalias() += W.cwiseProduct(*G2) * Y.S1;
    if (H22) A0.noalias() += W.cwiseProduct(*H22) * Y.S2;
    if (G1) A1.noalias() += W.cwiseProduct(*G1) * Y.S0;
    if (H12) A1.noalias() += 2.0 * (W.cwiseProduct(*H12) * Y.S1);
    if (H11) A2.noalias() += W.cwiseProduct(*H11) * Y.S0;
    RowMatrix R = X.E0.transpose() * A0;
    R.noalias() += X.E1.transpose() * A1;
    if (H11) R.noalias() += X.E2.transpose() * A2;
    R = R.cwiseProduct(tmp_.inv_norm);
    VectorXd out(tmp_.size());
    std::copy(R.data(), R.data() + R.size(), out.data());
    return out;
  }

  /// Rows  sum_walls int h(x) d_x phi_j(x, wall) dx.
  VectorXd project_scalar_wall_dx(const VectorXd& h0, const VectorXd& h1) const {
    const auto& X = tmp_.X;
    const auto& Y = tmp_.Y;
    const VectorXd x0 = grid_.wx * (X.E1.transpose() * h0);
    const VectorXd x1 = grid_.wx * (X.E1.transpose() * h1);
    RowMatrix R = x0 * Y.wall0.row(0) + x1 * Y.wall1.row(0);
    R = R.cwiseProduct(tmp_.inv_norm);
    VectorXd out(tmp_.size());
    std::copy(R.data(), R.data() + R.size(), out.data());
    return out;
  }

  VectorXd project_scalar(const MatrixXd& f) const { return project_scalar_forms(&f, nullptr, nullptr); }

  /// Eigenvalue of -Laplace for cosine mode j (Neumann): k_x^2 + (l pi)^2.
  double scalar_laplace_eigenvalue(int j) const {
    const int a = j / tmp_.Y.count, l = j % tmp_.Y.count;
    const double kx = tmp_.X.wavenumber[a];
    const double ky = l * std::numbers::pi;
    return kx * kx + ky * ky;
  }

  // ---- pointwise evaluation of single modes (tests, dumps) ---------------

  /// Velocity basis function i at (x, y), with its gradient (du/dx, du/dy, dv/dx, dv/dy).
  void velocity_mode(int i, double x, double y, double out[6]) const {
    if (vel_.mean_flow && i == vel_.mean_index()) {
      out[0] = vel_.mean_scale;
      for (int k = 1; k < 6; ++k) out[k] = 0.0;
      return;
    }
    const int a = i / vel_.Y.count, l = i % vel_.Y.count;
    double X0, X1, X2, s0, s1, s2;
    XFunctions::eval(a, vel_.X.wavenumber[a], x, X0, X1, X2);
    vel_.Y.eval(l, y, s0, s1, s2);
    const double nrm = vel_.inv_norm(a, l);
    out[0] = nrm * X0 * s1;   // u
    out[1] = -nrm * X1 * s0;  // v
    out[2] = nrm * X1 * s1;   // u_x
    out[3] = nrm * X0 * s2;   // u_y
    out[4] = -nrm * X2 * s0;  // v_x
    out[5] = -nrm * X1 * s1;  // v_y
  }

  /// Cosine basis function j at (x, y) with gradient.
  void scalar_mode(int j, double x, double y, double out[3]) const {
    const int a = j / tmp_.Y.count, l = j % tmp_.Y.count;
    double X0, X1, X2, c0, c1, c2;
    XFunctions::eval(a, tmp_.X.wavenumber[a], x, X0, X1, X2);
    tmp_.Y.eval(l, y, c0, c1, c2);
    const double nrm = tmp_.inv_norm(a, l);
    out[0] = nrm * X0 * c0;
    out[1] = nrm * X1 * c0;
    out[2] = nrm * X0 * c1;
  }

 private:
  static RowMatrix scaled(const VectorXd& c, int rows, int cols, const RowMatrix& inv_norm) {
    if (c.size() < rows * cols) throw std::invalid_argument("coefficient vector too short");
    Eigen::Map<const RowMatrix> C(c.data(), rows, cols);
    return C.cwiseProduct(inv_norm);
  }

  ChannelDomain dom_;
  double grid_factor_;
  Grid grid_;
  VelocityBasis vel_;
  TemperatureBasis tmp_;
};

// ---- differential operators on the grid ------------------------------------

/// Symmetric gradient D = (grad v + grad v^T)/2 as (D11, D12, D22) grid fields.
struct SymGradientGrid {
  MatrixXd d11, d12, d22;
};

inline SymGradientGrid sym_gradient(const VelocityGrid& v) {
  return {v.ux, 0.5 * (v.uy + v.vx), v.vy};
}

inline MatrixXd divergence(const VelocityGrid& v) { return v.ux + v.vy; }

// ---- norms -----------------------------------------------------------------

/// ||f||_q^q by quadrature (q < inf), for a list of component grids whose
/// pointwise Euclidean norm is taken first.
inline double lq_power(const Grid& g, std::initializer_list<const MatrixXd*> comps, double q) {
  MatrixXd mag2 = MatrixXd::Zero(g.nx, g.ny);
  for (const MatrixXd* c : comps) mag2.array() += c->array().square();
  if (q == 2.0) return g.integrate(mag2);
  return g.integrate(mag2.array().pow(0.5 * q).matrix());
}

inline double linf(std::initializer_list<const MatrixXd*> comps) {
  MatrixXd mag2;
  for (const MatrixXd* c : comps) {
    if (mag2.size() == 0) mag2 = MatrixXd::Zero(c->rows(), c->cols());
    mag2.array() += c->array().square();
  }
  return std::sqrt(mag2.maxCoeff());
}

/// ||f||_{L^q} or ||f||_{W^{1,q}} (order 1) for a scalar field given with its gradient.
/// The W^{1,q} norm is (||f||_q^q + ||grad f||_q^q)^(1/q); q = inf takes the max.
inline double scalar_norm(const Grid& g, const ScalarGrid& f, double q, int order = 0) {
  if (!(q >= 1.0)) throw std::invalid_argument("norm exponent must be >= 1");
  if (std::isinf(q)) {
    const double a = linf({&f.f});
    return order == 0 ? a : std::max(a, linf({&f.fx, &f.fy}));
  }
  double s = lq_power(g, {&f.f}, q);
  if (order >= 1) s += lq_power(g, {&f.fx, &f.fy}, q);
  return std::pow(s, 1.0 / q);
}

/// Same for a velocity field; the gradient uses the Frobenius norm of grad v.
inline double velocity_norm(const Grid& g, const VelocityGrid& v, double q, int order = 0) {
  if (!(q >= 1.0)) throw std::invalid_argument("norm exponent must be >= 1");
  if (std::isinf(q)) {
    const double a = linf({&v.u, &v.v});
    return order == 0 ? a : std::max(a, linf({&v.ux, &v.uy, &v.vx, &v.vy}));
  }
  double s = lq_power(g, {&v.u, &v.v}, q);
  if (order >= 1) s += lq_power(g, {&v.ux, &v.uy, &v.vx, &v.vy}, q);
  return std::pow(s, 1.0 / q);
}

/// Evaluate a callable f(x, y) on the grid.
inline MatrixXd sample(const Grid& g, const std::function<double(double, double)>& f) {
  MatrixXd out(g.nx, g.ny);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) out(i, j) = f(g.x[i], g.y[j]);
  return out;
}

/// max |G - I| over the Gram matrices of both bases, computed by quadrature on
/// a grid refined by `refine` in each direction.
inline double gram_deviation(const Discretization& disc, double refine = 2.0) {
  const Grid g = make_grid(disc.domain(),
                           std::max(disc.velocity().modes_per_dir, disc.temperature().modes_per_dir),
                           disc.grid_factor() * refine);
  const int nv = disc.velocity_size(), nt = disc.temperature_size();
  const int np = g.nx * g.ny;
  MatrixXd Bu(np, nv), Bv(np, nv), Bt(np, nt);
  VectorXd w(np);
  double buf[6];
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const int r = i * g.ny + j;
      w[r] = g.wx * g.wy[j];
      for (int m = 0; m < nv; ++m) {
        disc.velocity_mode(m, g.x[i], g.y[j], buf);
        Bu(r, m) = buf[0];
        Bv(r, m) = buf[1];
      }
      for (int m = 0; m < nt; ++m) {
        disc.scalar_mode(m, g.x[i], g.y[j], buf);
        Bt(r, m) = buf[0];
      }
    }
  const MatrixXd Gv = Bu.transpose() * w.asDiagonal() * Bu + Bv.transpose() * w.asDiagonal() * Bv;
  const MatrixXd Gt = Bt.transpose() * w.asDiagonal() * Bt;
  const double dv = (Gv - MatrixXd::Identity(nv, nv)).cwiseAbs().maxCoeff();
  const double dt = (Gt - MatrixXd::Identity(nt, nt)).cwiseAbs().maxCoeff();
  return std::max(dv, dt);
}

}  // namespace nsf
