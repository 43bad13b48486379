#include "qkayak/bifurcation.hpp"

#include <cmath>
#include <sstream>

namespace qkayak {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

BifCoefficients lambda_coeffs(const Alignment& align, double a) {
  if (!(a > 0.0) || !(a < 1.0 / 3.0)) {
    throw DegenerateModelError("lambda_coeffs: a must lie in (0, 1/3)");
  }
  BifCoefficients out;
  double scale2;
  if (const auto* t = std::get_if<ThreeTermAlignment>(&align)) {
    out.source = BifCoefficients::Source::three_term;
    out.lambda0_tilde = t->m_c * t->m_c + 2.0 * a * t->m_c * t->m_l;
    out.lambda0 = out.lambda0_tilde + 6.0 * a * a * t->m_c * t->m_q;
    out.lambda2 = t->m_c * t->m_c + 2.0 * a * t->m_c * t->m_l -
                  8.0 * a * a * t->m_l * t->m_l;
    out.w3 = 0.0;
    const double m = std::abs(t->m_c) + a * std::abs(t->m_l) +
                     a * a * std::abs(t->m_q);
    scale2 = m * m;
  } else {
    const auto& s = std::get<SevenTermAlignment>(align);
    const ReducedCoefficients r = general_coeff_reduction(s, a);
    out.source = BifCoefficients::Source::seven_term;
    out.w3 = r.w3;
    out.lambda0_tilde = r.v1 * r.v1 + 2.0 * a * r.v1 * r.v2;
    out.lambda0 = out.lambda0_tilde + 6.0 * a * a * r.v1 * r.v4 -
                  r.w3 * (2.0 * a * a * r.v1 + 4.0 * a * a * a * r.v2 +
                          12.0 * a * a * a * a * r.v4);
    out.lambda2 = r.v1 * r.v1 + 2.0 * a * r.v1 * r.v2 - 8.0 * a * a * r.v2 * r.v2 -
                  r.w3 * (6.0 * a * a * r.v1 - 12.0 * a * a * a * r.v2);
    const double m = std::abs(r.v1) + a * std::abs(r.v2) + a * a * std::abs(r.v4) +
                     a * a * std::abs(r.w3);
    scale2 = m * m;
  }
  const double tol = 1e-12 * std::max(1.0, scale2);
  if (std::abs(out.lambda0) <= tol && std::abs(out.lambda2) <= tol) {
    throw DegenerateModelError(
        "lambda_coeffs: degenerate alignment family, Lambda0 = Lambda2 = 0 "
        "(excluded triples (m_c:m_l:m_q) = (0:0:1), (-12a^2:3a:1), (6a^2:3a:-2))");
  }
  return out;
}

SpectralData spectral_quantities(double lambda, double mu, double omega, double a) {
  if (lambda * mu == 0.0) {
    throw DegenerateModelError("spectral_quantities: lambda*mu must be nonzero");
  }
  if (!(omega > 0.0)) {
    throw ConfigError("spectral_quantities: omega must be positive");
  }
  SpectralData s;
  s.a = a;
  s.lambda = lambda;
  s.mu = mu;
  s.omega = omega;
  s.r_lambda = std::hypot(lambda, 2.0 * omega);
  s.r_mu = std::hypot(mu, 2.0 * omega);
  s.gamma_lambda = 0.5 * std::atan2(2.0 * omega, lambda);
  s.gamma_mu = 0.5 * std::atan2(2.0 * omega, mu);
  s.tau_lambda = lambda / (s.r_lambda * s.r_lambda);
  s.tau_mu = mu / (s.r_mu * s.r_mu);
  return s;
}

double fhat2(double theta, const BifCoefficients& c, const SpectralData& s) {
  const double st = std::sin(theta), ct = std::cos(theta);
  return 3.0 * c.lambda0 * s.tau_lambda * st * st -
         c.lambda2 * s.tau_mu * (3.0 + ct * ct);
}

double f2(double theta, const BifCoefficients& c, const SpectralData& s) {
  const double t0 = 2.0 * M_PI / s.omega;
  return t0 / (12.0 * kSqrt2 * s.a) * std::sin(2.0 * theta) * fhat2(theta, c, s);
}

double df2_dtheta(double theta, const BifCoefficients& c, const SpectralData& s) {
  const double t0 = 2.0 * M_PI / s.omega;
  const double s2 = std::sin(2.0 * theta), c2 = std::cos(2.0 * theta);
  // product rule on f2 = pref * sin(2 theta) * fhat2(theta)
  const double dfhat = (6.0 * c.lambda0 * s.tau_lambda + 2.0 * c.lambda2 * s.tau_mu) *
                       std::sin(theta) * std::cos(theta);
  return t0 / (12.0 * kSqrt2 * s.a) *
         (2.0 * c2 * fhat2(theta, c, s) + s2 * dfhat);
}

std::vector<BifZero> find_zeros(const BifCoefficients& c, const SpectralData& s) {
  std::vector<BifZero> zeros;
  const double t0 = 2.0 * M_PI / s.omega;

  const double slope_pole = -(kSqrt2 * t0 / (3.0 * s.a)) * c.lambda2 * s.tau_mu;
  zeros.push_back({0.0, slope_pole, slope_pole < 0.0, "logrolling"});

  const double slope_eq = -(t0 / (2.0 * kSqrt2 * s.a)) *
                          (c.lambda0 * s.tau_lambda - c.lambda2 * s.tau_mu);
  zeros.push_back({M_PI / 2.0, slope_eq, slope_eq < 0.0, "tumbling"});

  if (c.lambda2 == 0.0) return zeros;  // no off-equator zeros (Lambda0 != 0)

  const double ratio = (c.lambda0 / c.lambda2) * s.rho();
  if (ratio > 1.0) {
    const double s2 = 4.0 / (3.0 * ratio + 1.0);  // sin^2(theta)
    const double theta = std::asin(std::sqrt(s2));
    const double slope = (t0 / (12.0 * kSqrt2 * s.a)) *
                         std::pow(std::sin(2.0 * theta), 2) *
                         (3.0 * c.lambda0 * s.tau_lambda + c.lambda2 * s.tau_mu);
    // pi/2 - Theta and pi/2 + Theta label the same physical orbit
    zeros.push_back({theta, slope, slope < 0.0, "kayaking"});
    zeros.push_back({M_PI - theta, slope, slope < 0.0, "kayaking"});
  }
  return zeros;
}

KayakPrediction kayak_exists(const SpectralData& s, const BifCoefficients& c) {
  if (c.lambda2 == 0.0) {
    throw DegenerateModelError("kayak_exists: Lambda2 = 0, criterion undefined");
  }
  KayakPrediction p;
  p.assumption5_ok = s.lambda < 0.0 && s.mu < 0.0;
  p.ratio_criterion = (c.lambda0 / c.lambda2) * s.rho();
  p.k_value = (s.lambda - s.mu) * (4.0 * s.omega * s.omega - s.lambda * s.mu);
  p.exists = p.ratio_criterion > 1.0;
  if (s.lambda == s.mu) {
    p.exists = false;
    p.marginal = true;
    p.diagnosis = "marginal: lambda = mu puts the spectrum on the existence boundary";
    return p;
  }
  if (p.exists) {
    const double s2 = 4.0 / (3.0 * p.ratio_criterion + 1.0);
    p.theta = std::asin(std::sqrt(s2));
    const double slope = (2.0 * M_PI / s.omega) / (12.0 * kSqrt2 * s.a) *
                         std::pow(std::sin(2.0 * p.theta), 2) *
                         (3.0 * c.lambda0 * s.tau_lambda + c.lambda2 * s.tau_mu);
    p.stable = slope < 0.0;
    p.diagnosis = p.stable ? "kayaking zero with negative f2-slope (attracting)"
                           : "kayaking zero with positive f2-slope (repelling)";
  } else {
    p.diagnosis = "(Lambda0/Lambda2)(tau_lambda/tau_mu) <= 1: no off-equator zero";
  }
  if (!p.assumption5_ok) {
    p.diagnosis += "; warning: lambda, mu not both negative (orbit not attracting)";
  }
  return p;
}

std::pair<double, double> sc_integrals(double t, double phi, double nu,
                                       double omega) {
  if (nu == 0.0) {
    const double s = (std::cos(2.0 * phi) - std::cos(2.0 * omega * t + 2.0 * phi)) /
                     (2.0 * omega);
    const double c = (std::sin(2.0 * omega * t + 2.0 * phi) - std::sin(2.0 * phi)) /
                     (2.0 * omega);
    return {s, c};
  }
  const double r = std::hypot(nu, 2.0 * omega);
  const double g2 = std::atan2(2.0 * omega, nu);  // 2 gamma_nu
  const double e = std::exp(nu * t);
  const double s =
      (e * std::sin(2.0 * phi + g2) - std::sin(2.0 * omega * t + 2.0 * phi + g2)) / r;
  const double c =
      (e * std::cos(2.0 * phi + g2) - std::cos(2.0 * omega * t + 2.0 * phi + g2)) / r;
  return {s, c};
}

std::array<double, 5> c_coeffs(double theta) {
  const double st = std::sin(theta), ct = std::cos(theta);
  return {0.5 * std::sqrt(3.0) * st * st, 0.5 * std::sin(2.0 * theta), st,
          0.5 * (1.0 + ct * ct), ct};
}

double kappa1(const Vec5& h, const Vec5& k, double lambda, double mu, double a) {
  return lambda / (std::sqrt(6.0) * a) * h[0] * k[1] -
         mu / (3.0 * kSqrt2 * a) * (h[3] * k[1] + h[4] * k[2]);
}

double kappa2(const Vec5& h, const Vec5& k, double lambda, double mu, double a) {
  return lambda / (std::sqrt(6.0) * a) * h[0] * k[2] -
         mu / (3.0 * kSqrt2 * a) * (h[4] * k[1] - h[3] * k[2]);
}

RegionVerdict ldg_paper_criterion(double b, double c, double tau, double omega) {
  const double disc = b * b - 24.0 * c * tau;
  if (disc <= 0.0) return RegionVerdict::no_equilibrium;
  const double a = (b + std::sqrt(disc)) / (12.0 * c);
  const double lhs = ((a + 3.0) * b - 12.0 * a * a * c) *
                     (4.0 * omega * omega + 3.0 * b * (a * b - 12.0 * a * a * c));
  return lhs < 0.0 ? RegionVerdict::yes : RegionVerdict::no;
}

RegionVerdict ldg_direct_criterion(double b, double c, double tau, double omega) {
  const double disc = b * b - 24.0 * c * tau;
  if (disc <= 0.0) return RegionVerdict::no_equilibrium;
  const double a = (b + std::sqrt(disc)) / (12.0 * c);
  const double lambda = a * b - 12.0 * a * a * c;
  const double mu = -3.0 * a * b;
  const double lhs = (lambda - mu) * (4.0 * omega * omega - lambda * mu);
  return lhs < 0.0 ? RegionVerdict::yes : RegionVerdict::no;
}

RegionReport ldg_region_check(double b, double c, double omega, int tau_points) {
  if (!(b > 0.0) || !(c > 0.0)) {
    throw DegenerateModelError("ldg_region_check: b, c must be positive");
  }
  RegionReport rep;
  rep.b_lt_4c = b < 4.0 * c;
  rep.all_omega = 5.0 * b < 2.0 * c;
  rep.omega_bound = rep.all_omega ? 0.0 : 0.5 * std::sqrt(std::max(0.0, b * (4.0 * c - b)));
  rep.omega_admitted =
      rep.b_lt_4c && (rep.all_omega || 4.0 * omega * omega < b * (4.0 * c - b));
  rep.tau_lo = (b - 2.0 * c) / 3.0;
  rep.tau_hi = b * b / (24.0 * c);
  rep.rows.reserve(tau_points);
  for (int i = 0; i < tau_points; ++i) {
    // grid strictly inside (tau_lo, tau_hi)
    const double tau =
        rep.tau_lo + (rep.tau_hi - rep.tau_lo) * (i + 0.5) / tau_points;
    RegionReport::Row row;
    row.tau = tau;
    row.paper = ldg_paper_criterion(b, c, tau, omega);
    row.direct = ldg_direct_criterion(b, c, tau, omega);
    row.disagree = row.paper != row.direct;
    if (row.disagree) ++rep.disagreements;
    rep.rows.push_back(row);
  }
  return rep;
}

BifurcationReport predict(const ModelSpec& spec) {
  if (!(spec.omega > 0.0)) {
    throw ConfigError("predict: omega must be positive");
  }
  const Equilibrium eq = ldg_equilibrium(spec.ldg);
  BifurcationReport rep;
  rep.spectral = spectral_quantities(eq.lambda, eq.mu, spec.omega, eq.a);
  rep.physical = eq.physical;
  rep.coeffs = lambda_coeffs(spec.align, eq.a);
  rep.rho = rep.spectral.rho();
  rep.k_value = (eq.lambda - eq.mu) *
                (4.0 * spec.omega * spec.omega - eq.lambda * eq.mu);
  rep.zeros = find_zeros(rep.coeffs, rep.spectral);
  rep.prediction = kayak_exists(rep.spectral, rep.coeffs);
  rep.region = ldg_region_check(spec.ldg.b, spec.ldg.c, spec.omega);
  return rep;
}

}  // namespace qkayak
