#pragma once
// Cut-off operators used by the k-truncated system and their primitives.
//
//   t_cut(z)  = sign(z) min{k, |z|}
//   g_cut(z)  = 1 for z <= k, 0 for z >= 2k, cubic smoothstep in between
//
// The primitives vanish at 0 and are used to evaluate the convective
// identities in closed form.

#include <cmath>
#include <stdexcept>

namespace nsf {

class TruncationLevel {
 public:
  explicit TruncationLevel(double k) : k_(k) {
    if (!(k >= 1.0) || !std::isfinite(k))
      throw std::invalid_argument("truncation level k must be a finite number >= 1");
  }
  double k() const { return k_; }

 private:
  double k_;
};

inline double t_cut(double z, double k) {
  return std::fabs(z) <= k ? z : std::copysign(k, z);
}

/// Primitive of t_cut: z^2/2 inside [-k, k], linear continuation outside.
inline double t_cut_primitive(double z, double k) {
  const double a = std::fabs(z);
  return a <= k ? 0.5 * z * z : 0.5 * k * k + k * (a - k);
}

/// C^1 cut-off: 1 below k, 0 above 2k, 1 - 3s^2 + 2s^3 with s = z/k - 1 between.
inline double g_cut(double z, double k) {
  if (z <= k) return 1.0;
  if (z >= 2.0 * k) return 0.0;
  const double s = z / k - 1.0;
  return 1.0 - s * s * (3.0 - 2.0 * s);
}

/// Primitive G with G' = g_cut and G(0) = 0 (for z >= 0).
inline double g_cut_primitive(double z, double k) {
  if (z <= k) return z;
  const double s = std::fmin(z / k - 1.0, 1.0);
  // k * integral_0^s (1 - 3u^2 + 2u^3) du = k (s - s^3 + s^4/2)
  return k + k * (s - s * s * s + 0.5 * s * s * s * s);
}

inline double t_cut(double z, const TruncationLevel& t) { return t_cut(z, t.k()); }
inline double g_cut(double z, const TruncationLevel& t) { return g_cut(z, t.k()); }

}  // namespace nsf
