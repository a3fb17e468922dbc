#pragma once
// Constitutive relations: power-law viscous stress and Fourier heat flux,
// plus a sampling checker for the structural assumptions the analysis needs
// (monotonicity, coercivity, growth).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nsf {

/// Symmetric Dim x Dim tensor stored as its upper triangle (row-major).
template <int Dim>
class SymTensor {
  static_assert(Dim == 2 || Dim == 3, "SymTensor supports d = 2 or 3");

 public:
  static constexpr int dim = Dim;
  static constexpr int size = Dim * (Dim + 1) / 2;

  SymTensor() { data_.fill(0.0); }

  static SymTensor identity() {
    SymTensor t;
    for (int a = 0; a < Dim; ++a) t(a, a) = 1.0;
    return t;
  }

  static SymTensor diag(std::array<double, Dim> d) {
    SymTensor t;
    for (int a = 0; a < Dim; ++a) t(a, a) = d[a];
    return t;
  }

  double& operator()(int a, int b) { return data_[index(a, b)]; }
  double operator()(int a, int b) const { return data_[index(a, b)]; }

  const std::array<double, size>& upper() const { return data_; }

  SymTensor& operator+=(const SymTensor& o) {
    for (int i = 0; i < size; ++i) data_[i] += o.data_[i];
    return *this;
  }
  SymTensor& operator-=(const SymTensor& o) {
    for (int i = 0; i < size; ++i) data_[i] -= o.data_[i];
    return *this;
  }
  SymTensor& operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
  }
  friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
  friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
  friend SymTensor operator*(double s, SymTensor a) { return a *= s; }

  /// Full contraction A:B.
  friend double ddot(const SymTensor& A, const SymTensor& B) {
    double s = 0.0;
    for (int a = 0; a < Dim; ++a) {
      s += A(a, a) * B(a, a);
      for (int b = a + 1; b < Dim; ++b) s += 2.0 * A(a, b) * B(a, b);
    }
    return s;
  }

  /// Frobenius norm |A|.
  double norm() const { return std::sqrt(ddot(*this, *this)); }

  bool finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  /// Q A Q^T for a (row-major) Dim x Dim matrix Q.
  SymTensor rotated(const std::array<std::array<double, Dim>, Dim>& Q) const {
    SymTensor r;
    for (int a = 0; a < Dim; ++a)
      for (int b = a; b < Dim; ++b) {
        double s = 0.0;
        for (int i = 0; i < Dim; ++i)
          for (int j = 0; j < Dim; ++j) s += Q[a][i] * (*this)(i, j) * Q[b][j];
        r(a, b) = s;
      }
    return r;
  }

 private:
  static constexpr int index(int a, int b) {
    if (a > b) std::swap(a, b);
    // offset of row a in the packed upper triangle
    return a * Dim - a * (a - 1) / 2 + (b - a);
  }

  std::array<double, size> data_;
};

template <int Dim>
using Vec = std::array<double, Dim>;

/// Temperature dependence of a bounded material coefficient.
enum class Profile {
  constant,          // c(theta) = lo
  rational_bounded,  // c(theta) = lo + (hi - lo) / (1 + theta)
};

inline Profile parse_profile(std::string_view tag) {
  if (tag == "const") return Profile::constant;
  if (tag == "rational-bounded") return Profile::rational_bounded;
  throw std::invalid_argument("unknown profile tag '" + std::string(tag) +
                              "' (expected const or rational-bounded)");
}

inline std::string_view profile_tag(Profile p) {
  return p == Profile::constant ? "const" : "rational-bounded";
}

/// Evaluate a profile on [lo, hi]. Negative temperatures are clamped to 0, so
/// the value stays inside the bounds for every real argument.
inline double eval_profile(Profile p, double lo, double hi, double theta) {
  switch (p) {
    case Profile::constant:
      return lo;
    case Profile::rational_bounded:
      return lo + (hi - lo) / (1.0 + std::max(theta, 0.0));
  }
  return lo;
}

struct ConstitutiveParams {
  double p = 2.0;
  double nu_lo = 1.0;
  double nu_hi = 1.0;
  double kappa_lo = 1.0;
  double kappa_hi = 1.0;
  double eps_reg = 0.0;
  Profile nu_profile = Profile::constant;
  Profile kappa_profile = Profile::constant;

  double nu(double theta) const { return eval_profile(nu_profile, nu_lo, nu_hi, theta); }
  double kappa(double theta) const {
    return eval_profile(kappa_profile, kappa_lo, kappa_hi, theta);
  }

  /// Throws std::invalid_argument naming the first violated bound. The growth
  /// exponent must exceed 2d/(d+2) in dimension d.
  void validate(int d = 2) const {
    auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
    if (!(std::isfinite(p) && p > 1.0)) fail("p must be a finite number > 1");
    if (!(p > 2.0 * d / (d + 2.0)))
      fail("p = " + std::to_string(p) + " must exceed 2d/(d+2) = " +
           std::to_string(2.0 * d / (d + 2.0)) + " in dimension d = " + std::to_string(d));
    if (!(nu_lo > 0.0 && nu_lo <= nu_hi && std::isfinite(nu_hi)))
      fail("viscosity bounds must satisfy 0 < nu_lo <= nu_hi < inf");
    if (!(kappa_lo > 0.0 && kappa_lo <= kappa_hi && std::isfinite(kappa_hi)))
      fail("conductivity bounds must satisfy 0 < kappa_lo <= kappa_hi < inf");
    if (!(eps_reg >= 0.0 && std::isfinite(eps_reg))) fail("eps_reg must be finite and >= 0");
  }
};

namespace detail {
inline void require_finite_theta(double theta) {
  if (!std::isfinite(theta)) throw std::domain_error("non-finite temperature");
  if (theta < 0.0) throw std::domain_error("constitutive laws need theta >= 0");
}
}  // namespace detail

/// Scalar multiplier m with S = m D, i.e. nu(theta) (eps + |D|^2)^((p-2)/2).
/// Returns 0 when D = 0 and the power is singular (p < 2, eps = 0).
inline double stress_multiplier(double theta, double d_norm_sq, const ConstitutiveParams& prm) {
  const double nu = prm.nu(theta);
  if (prm.p == 2.0) return nu;
  const double base = prm.eps_reg + d_norm_sq;
  if (base == 0.0) return 0.0;  // only reached with D = 0, where S = 0
  return nu * std::pow(base, 0.5 * (prm.p - 2.0));
}

/// Viscous stress S = nu(theta) (eps_reg + |D|^2)^((p-2)/2) D with S(theta, 0) = 0.
template <int Dim>
SymTensor<Dim> stress(double theta, const SymTensor<Dim>& D, const ConstitutiveParams& prm) {
  detail::require_finite_theta(theta);
  if (!D.finite()) throw std::domain_error("non-finite symmetric gradient");
  const double dn2 = ddot(D, D);
  if (dn2 == 0.0) return SymTensor<Dim>{};
  return stress_multiplier(theta, dn2, prm) * D;
}

/// Fourier heat flux q = -kappa(theta) grad theta.
template <int Dim>
Vec<Dim> heat_flux(double theta, const Vec<Dim>& grad, const ConstitutiveParams& prm) {
  detail::require_finite_theta(theta);
  for (double g : grad)
    if (!std::isfinite(g)) throw std::domain_error("non-finite temperature gradient");
  const double k = prm.kappa(theta);
  Vec<Dim> q{};
  for (int a = 0; a < Dim; ++a) q[a] = -k * grad[a];
  return q;
}

struct AssumptionReport {
  std::size_t samples = 0;
  std::size_t monotonicity_violations = 0;
  std::size_t coercivity_violations = 0;
  std::size_t growth_violations = 0;
  double min_monotonicity = 0.0;       // min (S1-S2):(D1-D2) / (1+|D1|+|D2|)^p
  double min_coercivity_slack = 0.0;   // min (S:D - nu_lo|D|^p + nu_hi) / scale
  double min_growth_slack = 0.0;       // min (nu_hi(1+|D|)^(p-1) - |S|) / scale

  std::size_t violations() const {
    return monotonicity_violations + coercivity_violations + growth_violations;
  }
};

/// Random symmetric tensor with entries spread over several magnitudes.
template <int Dim, class Rng>
SymTensor<Dim> random_sym_tensor(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> log_scale(-3.0, 2.0);
  const double scale = std::pow(10.0, log_scale(rng));
  SymTensor<Dim> D;
  for (int a = 0; a < Dim; ++a)
    for (int b = a; b < Dim; ++b) D(a, b) = scale * normal(rng);
  return D;
}

/// Samples (theta, D1, D2) and checks the monotonicity, coercivity and growth
/// conditions for an arbitrary stress law `law(theta, D) -> SymTensor`.
/// Slacks are normalized by the natural scale of each inequality; a violation
/// is a normalized slack below -tol.
template <int Dim, class Law>
AssumptionReport verify_assumptions(const ConstitutiveParams& prm, std::size_t sample_count,
                                    std::uint64_t seed, Law&& law, double tol = 1e-12) {
  if (sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> theta_dist(0.0, 10.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AssumptionReport rep;
  rep.samples = sample_count;
  rep.min_monotonicity = rep.min_coercivity_slack = rep.min_growth_slack = INFINITY;
  const double p = prm.p;
  for (std::size_t s = 0; s < sample_count; ++s) {
    const double theta = theta_dist(rng);
    const SymTensor<Dim> D1 = random_sym_tensor<Dim>(rng);
    SymTensor<Dim> D2 = random_sym_tensor<Dim>(rng);
    // a quarter of the pairs are close, which is where monotonicity is tight
    if (unit(rng) < 0.25) D2 = D1 + 1e-3 * D2;
    const SymTensor<Dim> S1 = law(theta, D1);
    const SymTensor<Dim> S2 = law(theta, D2);
    const double n1 = D1.norm(), n2 = D2.norm();

    const double mono = ddot(S1 - S2, D1 - D2) / std::pow(1.0 + n1 + n2, p);
    rep.min_monotonicity = std::min(rep.min_monotonicity, mono);
    if (mono < -tol) ++rep.monotonicity_violations;

    const double scale = prm.nu_hi * std::pow(1.0 + n1, p);
    const double coer = (ddot(S1, D1) - prm.nu_lo * std::pow(n1, p) + prm.nu_hi) / scale;
    rep.min_coercivity_slack = std::min(rep.min_coercivity_slack, coer);
    if (coer < -tol) ++rep.coercivity_violations;

    const double growth = (prm.nu_hi * std::pow(1.0 + n1, p - 1.0) - S1.norm()) / scale;
    rep.min_growth_slack = std::min(rep.min_growth_slack, growth);
    if (growth < -tol) ++rep.growth_violations;
  }
  return rep;
}

template <int Dim>
AssumptionReport verify_assumptions(const ConstitutiveParams& prm, std::size_t sample_count,
                                    std::uint64_t seed) {
  return verify_assumptions<Dim>(prm, sample_count, seed,
                                 [&prm](double th, const SymTensor<Dim>& D) {
                                   return stress(th, D, prm);
                                 });
}

}  // namespace nsf
