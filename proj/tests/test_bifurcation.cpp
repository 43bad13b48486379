#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qkayak/bifurcation.hpp"
#include "qkayak/models.hpp"
#include "test_util.hpp"

using namespace qkayak;
using namespace qkayak::testutil;

namespace {

SpectralData default_spectral(double omega = 0.05) {
  const Equilibrium eq = ldg_equilibrium({1.0, 1.0, 1.0 / 30.0});
  return spectral_quantities(eq.lambda, eq.mu, omega, eq.a);
}

}  // namespace

TEST_CASE("spectral quantities worked example") {
  const SpectralData s = default_spectral();
  CHECK(s.tau_lambda == doctest::Approx(-4.17807).epsilon(1e-5));
  CHECK(s.tau_mu == doctest::Approx(-2.56777).epsilon(1e-5));
  CHECK(s.rho() == doctest::Approx(1.62712).epsilon(1e-5));
  // polar-coordinate identities r cos(2g) = nu, r sin(2g) = 2w
  CHECK(s.r_lambda * std::cos(2 * s.gamma_lambda) ==
        doctest::Approx(s.lambda).epsilon(1e-12));
  CHECK(s.r_lambda * std::sin(2 * s.gamma_lambda) ==
        doctest::Approx(2 * s.omega).epsilon(1e-12));
  CHECK(s.r_mu * std::cos(2 * s.gamma_mu) == doctest::Approx(s.mu).epsilon(1e-12));
  CHECK(s.r_mu * std::sin(2 * s.gamma_mu) ==
        doctest::Approx(2 * s.omega).epsilon(1e-12));
  // sign cross-check: rho > 1 matches (lambda - mu)(4 w^2 - lambda mu) < 0
  const double k = (s.lambda - s.mu) * (4 * s.omega * s.omega - s.lambda * s.mu);
  CHECK(k < 0.0);
  CHECK(k == doctest::Approx(0.3078689 * -0.0095138).epsilon(1e-4));
}

TEST_CASE("spectral quantities edge cases") {
  CHECK_THROWS_AS(spectral_quantities(0.0, -1.0, 0.5, 0.2), DegenerateModelError);
  const SpectralData equal = spectral_quantities(-0.3, -0.3, 0.4, 0.2);
  CHECK(equal.rho() == doctest::Approx(1.0).epsilon(1e-15));
  // large-omega limit: tau -> 0 and rho -> lambda/mu
  const SpectralData lim = spectral_quantities(-0.2, -0.5, 1e6, 0.2);
  CHECK(std::abs(lim.tau_lambda) < 1e-12);
  CHECK(lim.rho() == doctest::Approx(-0.2 / -0.5).epsilon(1e-9));
}

TEST_CASE("lambda coefficients across families") {
  SUBCASE("Beris-Edwards collapses to a single Lambda for every a") {
    for (double a = 0.01; a < 0.33; a += 0.02) {
      const BifCoefficients c =
          lambda_coeffs(ThreeTermAlignment::beris_edwards(), a);
      const double expected = 4.0 / 9.0 + (4.0 / 3.0) * a - 8.0 * a * a;
      CHECK(std::abs(c.lambda0 - c.lambda2) < 1e-14);
      CHECK(c.lambda0 == doctest::Approx(expected).epsilon(1e-13));
    }
  }
  SUBCASE("degenerate triples rejected") {
    const double a = 0.2;
    CHECK_THROWS_AS(
        lambda_coeffs(ThreeTermAlignment{-12 * a * a, 3 * a, 1.0}, a),
        DegenerateModelError);
    CHECK_THROWS_AS(lambda_coeffs(ThreeTermAlignment{6 * a * a, 3 * a, -2.0}, a),
                    DegenerateModelError);
    CHECK_THROWS_AS(lambda_coeffs(ThreeTermAlignment{0.0, 0.0, 1.3}, a),
                    DegenerateModelError);
  }
  SUBCASE("seven-term worked example") {
    SevenTermAlignment s;
    s.v = {1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0};
    const BifCoefficients c = lambda_coeffs(s, 0.1);
    CHECK(c.lambda0 == doctest::Approx(1.0812).epsilon(1e-12));
    CHECK(c.lambda2 == doctest::Approx(1.0404).epsilon(1e-12));
  }
  SUBCASE("seven-term with v3..v7 = 0 reproduces the three-term formulas") {
    for (int k = 0; k < 30; ++k) {
      const double a = uniform(0.02, 0.32);
      const double mc = uniform(-2, 2), ml = uniform(-2, 2), mq = uniform(-2, 2);
      SevenTermAlignment s;
      s.v = {mc, ml, 0.0, mq, 0.0, 0.0, 0.0};
      BifCoefficients c7, c3;
      bool deg7 = false, deg3 = false;
      try {
        c7 = lambda_coeffs(s, a);
      } catch (const DegenerateModelError&) {
        deg7 = true;
      }
      try {
        c3 = lambda_coeffs(ThreeTermAlignment{mc, ml, mq}, a);
      } catch (const DegenerateModelError&) {
        deg3 = true;
      }
      CHECK(deg7 == deg3);
      if (!deg7) {
        CHECK(c7.lambda0 == doctest::Approx(c3.lambda0).epsilon(1e-13));
        CHECK(c7.lambda2 == doctest::Approx(c3.lambda2).epsilon(1e-13));
      }
    }
  }
  SUBCASE("scaling the family by s > 0 scales both Lambdas by s^2") {
    const double a = 0.13;
    const ThreeTermAlignment base{0.7, -0.4, 1.1};
    const BifCoefficients c1 = lambda_coeffs(base, a);
    for (double sc : {0.5, 2.0, 17.0}) {
      const BifCoefficients c2 =
          lambda_coeffs(ThreeTermAlignment{sc * base.m_c, sc * base.m_l,
                                           sc * base.m_q}, a);
      CHECK(c2.lambda0 == doctest::Approx(sc * sc * c1.lambda0).epsilon(1e-12));
      CHECK(c2.lambda2 == doctest::Approx(sc * sc * c1.lambda2).epsilon(1e-12));
    }
  }
}

TEST_CASE("fhat2 endpoint values and worked example") {
  const SpectralData s = default_spectral();
  const BifCoefficients c = lambda_coeffs(ThreeTermAlignment::beris_edwards(), s.a);
  CHECK(c.lambda0 == doctest::Approx(0.48889).epsilon(1e-4));
  CHECK(fhat2(0.0, c, s) ==
        doctest::Approx(-4.0 * c.lambda2 * s.tau_mu).epsilon(1e-13));
  CHECK(fhat2(M_PI / 2, c, s) ==
        doctest::Approx(3.0 * (c.lambda0 * s.tau_lambda - c.lambda2 * s.tau_mu))
            .epsilon(1e-13));
  CHECK(fhat2(M_PI / 2, c, s) == doctest::Approx(-2.3617).epsilon(1e-4));
}

TEST_CASE("df2/dtheta closed forms match finite differences") {
  const SpectralData s = default_spectral(0.07);
  const BifCoefficients c = lambda_coeffs(ThreeTermAlignment{0.9, -0.3, 0.4}, s.a);
  const double h = 1e-6;
  for (double theta : {0.0, 0.31, 1.0, M_PI / 2, 2.2}) {
    const double fd = (f2(theta + h, c, s) - f2(theta - h, c, s)) / (2 * h);
    CHECK(df2_dtheta(theta, c, s) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("find_zeros geometry") {
  SUBCASE("equal Lambdas, rho = 5 gives zeros at pi/6 and 5 pi/6") {
    // choose lambda, mu, omega with tau_l / tau_m = 5
    // tau_l/tau_m = 5 at: lambda = -0.1, solve for mu with omega fixed
    const double omega = 0.05, lambda = -0.1;
    const double tau_l = lambda / (lambda * lambda + 4 * omega * omega);
    // mu/(mu^2 + 4w^2) = tau_l / 5  -> quadratic in mu
    const double target = tau_l / 5.0;
    // mu = (1 - sqrt(1 - 16 w^2 target^2)) / (2 target)
    const double mu =
        (1.0 - std::sqrt(1.0 - 16.0 * omega * omega * target * target)) /
        (2.0 * target);
    const SpectralData s = spectral_quantities(lambda, mu, omega, 0.15);
    CHECK(s.rho() == doctest::Approx(5.0).epsilon(1e-10));
    BifCoefficients c;
    c.lambda0 = c.lambda2 = 0.7;
    const auto zeros = find_zeros(c, s);
    REQUIRE(zeros.size() == 4);
    CHECK(zeros[2].theta == doctest::Approx(M_PI / 6).epsilon(1e-12));
    CHECK(zeros[3].theta == doctest::Approx(5 * M_PI / 6).epsilon(1e-12));
    for (const auto& z : zeros) {
      if (z.label == "kayaking") {
        CHECK(std::abs(fhat2(z.theta, c, s)) < 1e-12);
      }
    }
  }
  SUBCASE("zeros merge at the equator as rho -> 1+") {
    BifCoefficients c;
    c.lambda0 = c.lambda2 = 1.0;
    for (double rho_excess : {0.3, 0.1, 0.01}) {
      // synthesize spectra with prescribed rho
      const double lambda = -0.2, omega = 0.1;
      const double tl = lambda / (lambda * lambda + 4 * omega * omega);
      const double target = tl / (1.0 + rho_excess);
      const double mu =
          (1.0 - std::sqrt(1.0 - 16.0 * omega * omega * target * target)) /
          (2.0 * target);
      const SpectralData s = spectral_quantities(lambda, mu, omega, 0.2);
      const auto zeros = find_zeros(c, s);
      REQUIRE(zeros.size() == 4);
      const double big_theta = M_PI / 2 - zeros[2].theta;
      CHECK(big_theta > 0.0);
      CHECK(big_theta < std::sqrt(3.0 * rho_excess));  // Theta -> 0
    }
  }
  SUBCASE("equator slope changes sign exactly at Lambda0 tau_l = Lambda2 tau_m") {
    const SpectralData s = default_spectral();
    BifCoefficients c;
    c.lambda2 = 1.0;
    c.lambda0 = s.tau_mu / s.tau_lambda;  // slope = 0 here
    CHECK(std::abs(df2_dtheta(M_PI / 2, c, s)) < 1e-10);
  }
}

TEST_CASE("kayak existence predicate") {
  SUBCASE("default configuration: exists and stable") {
    const SpectralData s = default_spectral(0.05);
    const BifCoefficients c =
        lambda_coeffs(ThreeTermAlignment::beris_edwards(), s.a);
    const KayakPrediction p = kayak_exists(s, c);
    CHECK(p.exists);
    CHECK(p.stable);
    CHECK(p.k_value < 0.0);
    CHECK(p.theta == doctest::Approx(0.970).epsilon(1e-3));
  }
  SUBCASE("omega = 0.2 kills the kayak") {
    const SpectralData s = default_spectral(0.2);
    const BifCoefficients c =
        lambda_coeffs(ThreeTermAlignment::beris_edwards(), s.a);
    const KayakPrediction p = kayak_exists(s, c);
    CHECK_FALSE(p.exists);
    CHECK(p.k_value > 0.0);
  }
  SUBCASE("lambda = mu is marginal") {
    const SpectralData s = spectral_quantities(-0.25, -0.25, 0.1, 0.2);
    BifCoefficients c;
    c.lambda0 = c.lambda2 = 1.0;
    const KayakPrediction p = kayak_exists(s, c);
    CHECK_FALSE(p.exists);
    CHECK(p.marginal);
  }
  SUBCASE("ratio criterion agrees with the k-sign oracle when Lambdas are equal") {
    for (int rep = 0; rep < 100; ++rep) {
      const double lambda = uniform(-1.0, -0.01), mu = uniform(-1.0, -0.01);
      const double omega = uniform(0.02, 0.8);
      if (lambda == mu) continue;
      const SpectralData s = spectral_quantities(lambda, mu, omega, 0.2);
      BifCoefficients c;
      c.lambda0 = c.lambda2 = uniform(0.1, 2.0);
      const KayakPrediction p = kayak_exists(s, c);
      CHECK(p.exists == (p.k_value < 0.0));
    }
  }
}

TEST_CASE("S and C closed forms") {
  SUBCASE("vanish at T0 for nu = 0") {
    const double omega = 0.7, t0 = 2 * M_PI / omega;
    for (double phi : {0.0, 0.9, 2.3}) {
      const auto [s, c] = sc_integrals(t0, phi, 0.0, omega);
      CHECK(std::abs(s) < 1e-13);
      CHECK(std::abs(c) < 1e-13);
    }
  }
  SUBCASE("worked values at T0, phi = 0, nu = -1, omega = 1") {
    const double t0 = 2 * M_PI;
    const auto [s, c] = sc_integrals(t0, 0.0, -1.0, 1.0);
    const double r2 = 1.0 + 4.0;
    CHECK(s == doctest::Approx((std::exp(-t0) - 1.0) * 2.0 / r2).epsilon(1e-12));
    CHECK(c ==
          doctest::Approx((std::exp(-t0) - 1.0) * (-1.0) / r2).epsilon(1e-12));
    CHECK(s == doctest::Approx(-0.399253).epsilon(1e-6));
    CHECK(c == doctest::Approx(0.199627).epsilon(1e-6));
  }
  SUBCASE("closed forms match adaptive quadrature (random)") {
    for (int rep = 0; rep < 60; ++rep) {
      const double t = uniform(0.1, 20.0), phi = uniform(0.0, 2 * M_PI);
      const double nu = rep % 5 == 0 ? 0.0 : uniform(-1.5, 0.8);
      const double omega = uniform(0.05, 1.5);
      const auto [s, c] = sc_integrals(t, phi, nu, omega);
      const double s_ref = adaptive_simpson(
          [&](double u) {
            return std::exp(nu * (t - u)) * std::sin(2 * omega * u + 2 * phi);
          },
          0.0, t);
      const double c_ref = adaptive_simpson(
          [&](double u) {
            return std::exp(nu * (t - u)) * std::cos(2 * omega * u + 2 * phi);
          },
          0.0, t);
      CHECK(s == doctest::Approx(s_ref).epsilon(1e-10));
      CHECK(c == doctest::Approx(c_ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("c coefficients") {
  SUBCASE("closed values") {
    const auto ceq = c_coeffs(M_PI / 2);
    CHECK(ceq[0] == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-14));
    CHECK(std::abs(ceq[1]) < 1e-15);
    CHECK(ceq[2] == doctest::Approx(1.0));
    CHECK(ceq[3] == doctest::Approx(0.5));
    CHECK(std::abs(ceq[4]) < 1e-15);
    const auto cpole = c_coeffs(0.0);
    CHECK(cpole[0] == 0.0);
    CHECK(cpole[1] == 0.0);
    CHECK(cpole[2] == 0.0);
    CHECK(cpole[3] == doctest::Approx(1.0));
    CHECK(cpole[4] == doctest::Approx(1.0));
  }
  SUBCASE("match direct inner products with the rotated frame") {
    // E2(pi/4 - w t) expanded over B^Z: coefficients c_ij(theta) with the
    // sin/cos(2 w t + 2 phi) carriers
    const double a = 0.2;
    for (int rep = 0; rep < 50; ++rep) {
      const SphericalPoint p = random_orbit_angles();
      const double omega = uniform(0.05, 1.0), t = uniform(0.0, 30.0);
      const FrameBasis f = frame_basis(p, a);
      const double u = M_PI / 4 - omega * t;
      const QTensor e2u = std::cos(2 * u) * basis_tensor(3) +
                          std::sin(2 * u) * basis_tensor(4);
      const auto c = c_coeffs(p.theta);
      const double sn = std::sin(2 * omega * t + 2 * p.phi);
      const double cs = std::cos(2 * omega * t + 2 * p.phi);
      CHECK(inner(e2u, f.e[0]) == doctest::Approx(c[0] * sn).epsilon(1e-12));
      CHECK(inner(e2u, f.e[1]) == doctest::Approx(c[1] * sn).epsilon(1e-12));
      CHECK(inner(e2u, f.e[2]) == doctest::Approx(c[2] * cs).epsilon(1e-12));
      CHECK(inner(e2u, f.e[3]) == doctest::Approx(c[3] * sn).epsilon(1e-12));
      CHECK(inner(e2u, f.e[4]) == doctest::Approx(c[4] * cs).epsilon(1e-12));
    }
  }
}

TEST_CASE("kappa1 bilinear form") {
  const double lambda = -0.44, mu = -0.91, a = 0.17;
  SUBCASE("unit examples") {
    Vec5 h = Vec5::Zero(), k = Vec5::Zero();
    h[0] = 1.0;
    k[1] = 1.0;
    CHECK(kappa1(h, k, lambda, mu, a) ==
          doctest::Approx(lambda / (std::sqrt(6.0) * a)).epsilon(1e-14));
    h.setZero();
    h[3] = 1.0;
    CHECK(kappa1(h, k, lambda, mu, a) ==
          doctest::Approx(-mu / (3.0 * std::sqrt(2.0) * a)).epsilon(1e-14));
    CHECK(kappa1(Vec5::Zero(), k, lambda, mu, a) == 0.0);
    CHECK(kappa1(h, Vec5::Zero(), lambda, mu, a) == 0.0);
  }
  SUBCASE("matches the finite-difference second derivative of G") {
    // D^2G(Q*)(H, K) projected on E11 for H normal, K tangent
    const LdgCoefficients ldg{1.0, 1.0, 1.0 / 30.0};
    const Equilibrium eq = ldg_equilibrium(ldg);
    const QTensor qstar = uniaxial_q(eq.a);
    const double h = 1e-4;
    for (int rep = 0; rep < 25; ++rep) {
      Vec5 hn = Vec5::Zero(), kt = Vec5::Zero();
      hn[0] = uniform(-1, 1);
      hn[3] = uniform(-1, 1);
      hn[4] = uniform(-1, 1);
      kt[1] = uniform(-1, 1);
      kt[2] = uniform(-1, 1);
      const QTensor ht(hn), kq(kt);
      const auto g = [&](double s, double t) {
        return eval_g(qstar + s * ht + t * kq, ldg);
      };
      const QTensor d2 =
          (g(h, h) - g(h, -h) - g(-h, h) + g(-h, -h)) / (4.0 * h * h);
      CHECK(d2.coords()[1] ==
            doctest::Approx(kappa1(hn, kt, eq.lambda, eq.mu, eq.a))
                .epsilon(2e-5));
      CHECK(d2.coords()[2] ==
            doctest::Approx(kappa2(hn, kt, eq.lambda, eq.mu, eq.a))
                .epsilon(2e-5));
    }
  }
}

TEST_CASE("region criteria") {
  SUBCASE("(b,c) = (1,1): omega bound sqrt(3)/2") {
    const RegionReport r = ldg_region_check(1.0, 1.0, 0.5);
    CHECK(r.b_lt_4c);
    CHECK_FALSE(r.all_omega);
    CHECK(r.omega_bound == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-14));
    CHECK(r.omega_admitted);
    CHECK(r.tau_lo == doctest::Approx(-1.0 / 3.0));
    CHECK(r.tau_hi == doctest::Approx(1.0 / 24.0));
    const RegionReport r2 = ldg_region_check(1.0, 1.0, 0.9);
    CHECK_FALSE(r2.omega_admitted);
  }
  SUBCASE("(b,c) = (1,10): all omega admitted") {
    const RegionReport r = ldg_region_check(1.0, 10.0, 123.0);
    CHECK(r.b_lt_4c);
    CHECK(r.all_omega);
    CHECK(r.omega_admitted);
  }
  SUBCASE("(b,c) = (5,1): necessary condition fails") {
    const RegionReport r = ldg_region_check(5.0, 1.0, 0.1);
    CHECK_FALSE(r.b_lt_4c);
    CHECK_FALSE(r.omega_admitted);
  }
  SUBCASE("direct criterion matches the predict pipeline") {
    for (int rep = 0; rep < 60; ++rep) {
      const double tau = uniform(0.0, 1.0 / 24.0 - 1e-4);
      const double omega = uniform(0.02, 0.5);
      const RegionVerdict direct = ldg_direct_criterion(1.0, 1.0, tau, omega);
      if (direct == RegionVerdict::no_equilibrium) continue;
      const Equilibrium eq = ldg_equilibrium({1.0, 1.0, tau});
      const SpectralData s = spectral_quantities(eq.lambda, eq.mu, omega, eq.a);
      const BifCoefficients c =
          lambda_coeffs(ThreeTermAlignment::beris_edwards(), eq.a);
      const KayakPrediction p = kayak_exists(s, c);
      CHECK(p.exists == (direct == RegionVerdict::yes));
    }
  }
  SUBCASE("the paper layer and the direct layer disagree in a known band") {
    // at (b,c,tau) = (1,1,1/30), omega = 0.2: the direct factor
    // 4w^2 - lambda*mu is positive (no kayak) but the published form
    // 4w^2 + 3b*lambda is still negative
    CHECK(ldg_direct_criterion(1.0, 1.0, 1.0 / 30.0, 0.2) == RegionVerdict::no);
    CHECK(ldg_paper_criterion(1.0, 1.0, 1.0 / 30.0, 0.2) == RegionVerdict::yes);
    // both agree well inside the existence region
    CHECK(ldg_direct_criterion(1.0, 1.0, 1.0 / 30.0, 0.05) == RegionVerdict::yes);
    CHECK(ldg_paper_criterion(1.0, 1.0, 1.0 / 30.0, 0.05) == RegionVerdict::yes);
  }
}

TEST_CASE("predict pipeline on the default configuration") {
  ModelSpec m;
  m.ldg = {1.0, 1.0, 1.0 / 30.0};
  m.omega = 0.05;
  m.align = ThreeTermAlignment::beris_edwards();
  const BifurcationReport rep = predict(m);
  CHECK(rep.prediction.exists);
  CHECK(rep.prediction.stable);
  CHECK(rep.rho == doctest::Approx(1.62712).epsilon(1e-5));
  CHECK(rep.prediction.theta == doctest::Approx(0.970).epsilon(1e-3));
  REQUIRE(rep.zeros.size() == 4);
  // zeros of fhat2 vanish to 1e-12
  for (const auto& z : rep.zeros) {
    if (z.label == "kayaking") {
      CHECK(std::abs(fhat2(z.theta, rep.coeffs, rep.spectral)) < 1e-12);
      CHECK(z.stable);
    }
    if (z.label == "tumbling") CHECK_FALSE(z.stable);
    if (z.label == "logrolling") CHECK_FALSE(z.stable);
  }
  CHECK(rep.physical);
}
