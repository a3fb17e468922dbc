#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "nsf/constitutive.hpp"

using namespace nsf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ConstitutiveParams params(double p, double nu_lo = 1.0, double nu_hi = 1.0) {
  ConstitutiveParams c;
  c.p = p;
  c.nu_lo = nu_lo;
  c.nu_hi = nu_hi;
  return c;
}

}  // namespace

TEST_CASE("Newtonian stress is nu D", "[constitutive]") {
  const auto prm = params(2.0, 0.7, 0.7);
  SymTensor<2> D;
  D(0, 0) = 0.3;
  D(0, 1) = -1.2;
  D(1, 1) = -0.3;
  const auto S = stress(1.0, D, prm);
  CHECK(S(0, 0) == 0.7 * 0.3);
  CHECK(S(0, 1) == 0.7 * -1.2);
  CHECK(S(1, 1) == 0.7 * -0.3);
}

TEST_CASE("shear-thickening stress scales with |D|^(p-2)", "[constitutive]") {
  // p = 3, eps = 0: S = nu |D| D. For D = diag(1, -1), |D| = sqrt(2).
  const auto prm = params(3.0, 2.0, 2.0);
  const auto D = SymTensor<2>::diag({1.0, -1.0});
  const auto S = stress(0.5, D, prm);
  CHECK_THAT(S(0, 0), WithinRel(2.0 * std::sqrt(2.0), 1e-15));
  CHECK_THAT(S(1, 1), WithinRel(-2.0 * std::sqrt(2.0), 1e-15));
  CHECK(S(0, 1) == 0.0);
}

TEST_CASE("regularized stress uses (eps + |D|^2)^((p-2)/2)", "[constitutive]") {
  auto prm = params(1.5);
  prm.eps_reg = 0.25;
  SymTensor<3> D;
  D(0, 2) = 0.5;  // |D|^2 = 2 * 0.25 = 0.5
  const auto S = stress(1.0, D, prm);
  CHECK_THAT(S(0, 2), WithinRel(0.5 * std::pow(0.75, -0.25), 1e-15));
}

TEST_CASE("stress vanishes at D = 0 for every p", "[constitutive]") {
  for (double p : {1.3, 2.0, 3.0}) {
    const auto S = stress(2.0, SymTensor<2>{}, params(p));
    CHECK(S.norm() == 0.0);
  }
}

TEST_CASE("stress is rotation equivariant", "[constitutive]") {
  const auto prm = params(1.7);
  std::mt19937_64 rng(11);
  const double a = 0.4;
  const std::array<std::array<double, 2>, 2> Q{{{std::cos(a), -std::sin(a)},
                                                {std::sin(a), std::cos(a)}}};
  for (int i = 0; i < 50; ++i) {
    const auto D = random_sym_tensor<2>(rng);
    const auto lhs = stress(1.0, D.rotated(Q), prm);
    const auto rhs = stress(1.0, D, prm).rotated(Q);
    CHECK((lhs - rhs).norm() <= 1e-13 * (1.0 + rhs.norm()));
  }
}

TEST_CASE("dissipation S:D is nonnegative", "[constitutive]") {
  std::mt19937_64 rng(5);
  for (double p : {1.3, 2.0, 3.5}) {
    const auto prm = params(p, 0.5, 2.0);
    for (int i = 0; i < 1000; ++i) {
      const auto D = random_sym_tensor<3>(rng);
      CHECK(ddot(stress(1.0, D, prm), D) >= 0.0);
    }
  }
}

TEST_CASE("rational profile interpolates between its bounds", "[constitutive]") {
  ConstitutiveParams c;
  c.nu_lo = 1.0;
  c.nu_hi = 3.0;
  c.nu_profile = Profile::rational_bounded;
  CHECK(c.nu(0.0) == 3.0);
  CHECK(c.nu(1.0) == 2.0);
  CHECK(c.nu(-5.0) == 3.0);
  CHECK_THAT(c.nu(1e12), WithinAbs(1.0, 1e-11));
  CHECK(parse_profile("rational-bounded") == Profile::rational_bounded);
  CHECK(profile_tag(Profile::constant) == "const");
  CHECK_THROWS_AS(parse_profile("linear"), std::invalid_argument);
}

TEST_CASE("heat flux is Fourier's law", "[constitutive]") {
  ConstitutiveParams c;
  c.kappa_lo = c.kappa_hi = 0.25;
  const auto q = heat_flux<2>(1.0, {2.0, -4.0}, c);
  CHECK(q[0] == -0.5);
  CHECK(q[1] == 1.0);
  CHECK_THROWS_AS(heat_flux<2>(-1.0, {0.0, 0.0}, c), std::domain_error);
  CHECK_THROWS_AS(heat_flux<2>(1.0, {NAN, 0.0}, c), std::domain_error);
}

TEST_CASE("constitutive inputs are checked", "[constitutive]") {
  const auto prm = params(2.0);
  CHECK_THROWS_AS(stress(-0.1, SymTensor<2>{}, prm), std::domain_error);
  CHECK_THROWS_AS(stress(NAN, SymTensor<2>{}, prm), std::domain_error);
  SymTensor<2> bad;
  bad(0, 1) = INFINITY;
  CHECK_THROWS_AS(stress(1.0, bad, prm), std::domain_error);
}

TEST_CASE("parameter validation names the violated bound", "[constitutive]") {
  CHECK_NOTHROW(params(1.6).validate(3));
  CHECK_THROWS_WITH(params(1.1).validate(3), Catch::Matchers::ContainsSubstring("2d/(d+2)"));
  CHECK_NOTHROW(params(1.1).validate(2));
  CHECK_THROWS(params(0.9).validate(2));
  CHECK_THROWS(params(2.0, 2.0, 1.0).validate(2));
  auto c = params(2.0);
  c.kappa_lo = 0.0;
  CHECK_THROWS_WITH(c.validate(2), Catch::Matchers::ContainsSubstring("conductivity"));
}

TEST_CASE("assumption suite passes for the power law", "[constitutive]") {
  for (double p : {1.5, 2.0, 3.0}) {
    auto prm = params(p, 0.5, 2.0);
    const auto rep = verify_assumptions<2>(prm, 10000, 42);
    INFO("p = " << p);
    CHECK(rep.samples == 10000);
    CHECK(rep.violations() == 0);
    const auto rep3 = verify_assumptions<3>(prm, 2000, 43);
    CHECK(rep3.violations() == 0);
  }
}

TEST_CASE("assumption suite detects broken laws", "[constitutive]") {
  const auto prm = params(2.0);
  // anti-monotone: S = -D
  const auto anti = verify_assumptions<2>(prm, 1000, 1, [](double, const SymTensor<2>& D) {
    return -1.0 * D;
  });
  CHECK(anti.monotonicity_violations > 0);
  CHECK(anti.coercivity_violations > 0);
  // too strong growth: S = |D|^2 D at p = 2
  const auto steep = verify_assumptions<2>(prm, 1000, 2, [](double, const SymTensor<2>& D) {
    return ddot(D, D) * D;
  });
  CHECK(steep.growth_violations > 0);
}
