#ifndef QKAYAK_BIFURCATION_HPP
#define QKAYAK_BIFURCATION_HPP

// Closed-form second-order bifurcation function for latitude orbits under
// the shear perturbation, its zeros and stability signs, and the analytic
// existence predicates for kayaking limit cycles.

#include <complex>
#include <string>
#include <vector>

#include "qkayak/models.hpp"

namespace qkayak {

struct BifCoefficients {
  double lambda0 = 0.0;      // coefficient of the V0 channel
  double lambda2 = 0.0;      // coefficient of the V2 channel
  double lambda0_tilde = 0.0;  // three-term value without the m_q contribution
  double w3 = 0.0;           // v3 of the 7-term family (0 for three-term)
  enum class Source { three_term, seven_term } source = Source::three_term;
};

// Three-term:  L0 = m_c^2 + 2a m_c m_l + 6a^2 m_c m_q,
//              L2 = m_c^2 + 2a m_c m_l - 8a^2 m_l^2.
// Seven-term: the same in the reduced coefficients (v1*, v2*, v4*) plus the
// w3 corrections. Throws DegenerateModelError when both vanish.
BifCoefficients lambda_coeffs(const Alignment& align, double a);

// r_nu, gamma_nu, tau_nu for nu in {lambda, mu}. Rejects lambda*mu = 0.
SpectralData spectral_quantities(double lambda, double mu, double omega,
                                 double a = 0.0);

// fhat2(theta) = 3 L0 tau_l sin^2(theta) - L2 tau_m (3 + cos^2(theta));
// f2(theta) = T0/(12 sqrt2 a) sin(2 theta) fhat2(theta), T0 = 2 pi / omega.
double fhat2(double theta, const BifCoefficients& c, const SpectralData& s);
double f2(double theta, const BifCoefficients& c, const SpectralData& s);

// d f2 / d theta from the closed forms at theta = 0, pi/2 and interior zeros.
double df2_dtheta(double theta, const BifCoefficients& c, const SpectralData& s);

struct BifZero {
  double theta;
  double slope;   // d f2 / d theta at the zero
  bool stable;    // slope < 0
  std::string label;  // "logrolling", "tumbling", "kayaking"
};

// Zeros theta = 0, pi/2 always; the pair pi/2 +- Theta exists when
// (L0/L2)(tau_l/tau_m) > 1. Requires L2 != 0 for off-equator zeros.
std::vector<BifZero> find_zeros(const BifCoefficients& c, const SpectralData& s);

struct KayakPrediction {
  bool exists = false;
  bool stable = false;
  bool marginal = false;
  double theta = 0.0;          // in [0, pi/2], zero if absent
  double ratio_criterion = 0.0;  // (L0/L2)(tau_l/tau_m)
  double k_value = 0.0;          // (lambda-mu)(4 w^2 - lambda mu)
  bool assumption5_ok = true;    // lambda, mu < 0
  std::string diagnosis;
};
KayakPrediction kayak_exists(const SpectralData& s, const BifCoefficients& c);

// S(t,phi,nu) = int_0^t e^{nu(t-s)} sin(2 w s + 2 phi) ds and the cosine
// companion, via the closed forms (nu = 0 handled by the limiting formulas).
std::pair<double, double> sc_integrals(double t, double phi, double nu,
                                       double omega);

// (c01, c11, c12, c21, c22)(theta) = (sqrt3 sin^2, sin2t, 2 sin, 1+cos^2, 2 cos)/2
std::array<double, 5> c_coeffs(double theta);

// V1-components of D^2G(Q*)(H_N, K_T) for the equivariant quadratic field:
// kappa1 = lambda/(sqrt6 a) h01 k11 - mu/(3 sqrt2 a) (h21 k11 + h22 k12).
double kappa1(const Vec5& h, const Vec5& k, double lambda, double mu, double a);
double kappa2(const Vec5& h, const Vec5& k, double lambda, double mu, double a);

// Landau-de Gennes kayaking criteria on the (omega, tau) plane.
// The "paper" layer evaluates the published inequality
//   ((a+3)b - 12 a^2 c)(4 w^2 + 3 b (a b - 12 a^2 c)) < 0
// verbatim; the "direct" layer substitutes lambda, mu from the equilibrium
// into (lambda - mu)(4 w^2 - lambda mu) < 0. The two differ by factors of a
// in part of parameter space, so both are reported with a disagreement flag.
enum class RegionVerdict { yes, no, no_equilibrium };
RegionVerdict ldg_paper_criterion(double b, double c, double tau, double omega);
RegionVerdict ldg_direct_criterion(double b, double c, double tau, double omega);

struct RegionReport {
  bool b_lt_4c = false;        // necessary condition
  bool all_omega = false;      // 5b < 2c: admitted for every omega
  double omega_bound = 0.0;    // else need 4 w^2 < b(4c - b)
  bool omega_admitted = false;
  double tau_lo = 0.0, tau_hi = 0.0;  // (b - 2c)/3 < tau < b^2/(24 c)
  struct Row {
    double tau;
    RegionVerdict paper;
    RegionVerdict direct;
    bool disagree;
  };
  std::vector<Row> rows;
  int disagreements = 0;
};
RegionReport ldg_region_check(double b, double c, double omega,
                              int tau_points = 101);

struct BifurcationReport {
  SpectralData spectral;
  BifCoefficients coeffs;
  double rho = 0.0;
  double k_value = 0.0;
  std::vector<BifZero> zeros;
  KayakPrediction prediction;
  RegionReport region;
  bool physical = true;  // a < 1/3
};

// Full analytic pipeline for one model specification.
BifurcationReport predict(const ModelSpec& spec);

}  // namespace qkayak

#endif
