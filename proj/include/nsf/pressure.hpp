#pragma once
// Pressure from the Neumann problem in weak form:
//   int pi Lap(phi) = int S:hess(phi) - g v(x)v : hess(phi) - T_k(theta*) f.grad(phi)
//                     + alpha sum_walls int g_k(|u|) u d_x phi
// for all cosine modes phi (which satisfy d_n phi = 0). The cosine modes are
// eigenfunctions of the Neumann Laplacian, so the solve is a diagonal scaling;
// the constant mode is pinned to zero (mean-zero pressure).

#include <cmath>
#include <numbers>

#include "nsf/discretization.hpp"
#include "nsf/exponents.hpp"
#include "nsf/solver.hpp"

namespace nsf {

struct PressureField {
  VectorXd coef;  // cosine-basis coefficients, coef[0] == 0
};

/// Right side of the weak pressure identity for every cosine mode.
inline VectorXd pressure_weak_rhs(const GalerkinSystem& sys, const StateFields& F) {
  const auto& cfg = sys.config();
  const auto& V = F.v;
  const MatrixXd gu = F.g.cwiseProduct(V.u), gv = F.g.cwiseProduct(V.v);
  const MatrixXd H11 = F.S11 - gu.cwiseProduct(V.u);
  const MatrixXd H12 = F.S12 - gu.cwiseProduct(V.v);
  const MatrixXd H22 = F.S22 - gv.cwiseProduct(V.v);
  const MatrixXd G1 = -cfg.f[0] * F.Tks, G2 = -cfg.f[1] * F.Tks;
  VectorXd rhs = sys.disc().project_scalar_forms(nullptr, &G1, &G2, &H11, &H12, &H22);
  if (cfg.alpha != 0.0) {
    VectorXd h[2];
    for (int w = 0; w < 2; ++w) {
      h[w] = F.u_wall[w];
      for (Eigen::Index i = 0; i < h[w].size(); ++i)
        h[w][i] = cfg.alpha * g_cut(std::fabs(F.u_wall[w][i]), cfg.k) * F.u_wall[w][i];
    }
    rhs += sys.disc().project_scalar_wall_dx(h[0], h[1]);
  }
  return rhs;
}

inline PressureField reconstruct_pressure(const GalerkinSystem& sys, const StateFields& F) {
  const VectorXd rhs = pressure_weak_rhs(sys, F);
  PressureField pi;
  pi.coef = VectorXd::Zero(rhs.size());
  for (Eigen::Index j = 1; j < rhs.size(); ++j)
    pi.coef[j] = -rhs[j] / sys.disc().scalar_laplace_eigenvalue(static_cast<int>(j));
  return pi;
}

inline PressureField reconstruct_pressure(const GalerkinSystem& sys, const FluidState& s) {
  return reconstruct_pressure(sys, sys.fields(s.c, s.d));
}

/// max_j |Q[pi Lap(phi_j)] - rhs_j| / max_j |rhs_j| over modes j >= 1, with
/// Q[pi Lap(phi_j)] evaluated by quadrature of the grid pressure.
inline double pressure_weak_residual(const GalerkinSystem& sys, const StateFields& F,
                                     const PressureField& pi) {
  const VectorXd rhs = pressure_weak_rhs(sys, F);
  const MatrixXd p = sys.disc().eval_scalar_values(pi.coef);
  const MatrixXd Z = MatrixXd::Zero(p.rows(), p.cols());
  const VectorXd lhs = sys.disc().project_scalar_forms(nullptr, nullptr, nullptr, &p, &Z, &p);
  const Eigen::Index n = rhs.size();
  if (n < 2) return 0.0;
  const double scale = rhs.tail(n - 1).cwiseAbs().maxCoeff();
  const double err = (lhs - rhs).tail(n - 1).cwiseAbs().maxCoeff();
  return scale == 0.0 ? err : err / scale;
}

/// Integral of pi over the channel (zero up to round-off by construction).
inline double pressure_mean(const GalerkinSystem& sys, const PressureField& pi) {
  return sys.disc().grid().integrate(sys.disc().eval_scalar_values(pi.coef));
}

/// int |pi|^z' for the pressure exponent z' of the growth exponent p.
inline double pressure_norm_monitor(const Grid& g, const MatrixXd& pi_grid, double p) {
  const double z = pressure_exponent(p);
  return g.integrate(pi_grid.cwiseAbs().array().pow(z).matrix());
}

/// Cosine coefficients of the hydrostatic pressure T (1/2 - y) (mean zero),
/// balancing the force -T e_2. Only x-constant modes with odd l contribute:
/// int_0^1 (1/2 - y) cos(l pi y) dy = 2/(l pi)^2.
inline VectorXd hydrostatic_coefficients(const Discretization& disc, double T) {
  const auto& tb = disc.temperature();
  VectorXd out = VectorXd::Zero(tb.size());
  const double Lx = disc.domain().Lx;
  for (int l = 1; l < tb.Y.count; l += 2) {
    const double w = l * std::numbers::pi;
    // basis function cos(l pi y) / sqrt(Lx/2)
    out[tb.index(0, l)] = T * Lx * (2.0 / (w * w)) * std::sqrt(2.0 / Lx);
  }
  return out;
}

}  // namespace nsf
