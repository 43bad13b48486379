#ifndef QKAYAK_MODELS_HPP
#define QKAYAK_MODELS_HPP

// Interaction field (Landau-de Gennes), alignment fields L(Q)D in the
// 3-coefficient and 7-term general forms, and the equilibrium spectrum.

#include <array>
#include <variant>

#include "qkayak/tensor_core.hpp"

namespace qkayak {

struct LdgCoefficients {
  double b = 1.0;
  double c = 1.0;
  double tau = 1.0 / 30.0;  // free-energy coefficient (tau_ldg)
};

struct ThreeTermAlignment {
  double m_c = 0.0;
  double m_l = 0.0;
  double m_q = 0.0;
  static ThreeTermAlignment beris_edwards() { return {2.0 / 3.0, 1.0, -2.0}; }
  static ThreeTermAlignment olmsted_goldbart() { return {1.0, 0.0, 0.0}; }
};

struct SevenTermAlignment {
  std::array<double, 7> v{};  // v1..v7
};

using Alignment = std::variant<ThreeTermAlignment, SevenTermAlignment>;

struct ModelSpec {
  double omega = 0.05;  // rotational coefficient, > 0
  double beta = 0.0;    // perturbation strength
  LdgCoefficients ldg;
  Alignment align = ThreeTermAlignment::beris_edwards();
};

// Equilibrium scale and normal spectrum of DG at the uniaxial state.
struct Equilibrium {
  double a;       // larger root of tau + 6 a^2 c - a b = 0
  double lambda;  // V0 eigenvalue, = 2 tau - a b = a b - 12 a^2 c
  double mu;      // V2 eigenvalue (double), = -3 a b
  bool physical;  // a < 1/3
};

// Throws DegenerateModelError when no equilibrium exists (discriminant <= 0)
// or when the spectrum degenerates (lambda = 0 at the fold).
Equilibrium ldg_equilibrium(const LdgCoefficients& ldg);

// Derived spectral quantities shared by the bifurcation formulas.
struct SpectralData {
  double a = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  double omega = 0.0;
  double r_lambda = 0.0, r_mu = 0.0;          // sqrt(nu^2 + 4 w^2)
  double gamma_lambda = 0.0, gamma_mu = 0.0;  // half-angles: (nu,2w) = r(cos2g, sin2g)
  double tau_lambda = 0.0, tau_mu = 0.0;      // nu / r_nu^2
  double rho() const { return tau_lambda / tau_mu; }
  double k() const { return tau_lambda - tau_mu; }
};

// The rate-of-strain tensor D (shear rate normalized to k = 2).
const QTensor& shear_d();

// Landau-de Gennes field G(Q) = -(tau + c|Q|^2) Q + (b/2) [Q,Q]+.
QTensor eval_g(const QTensor& q, const LdgCoefficients& ldg);

// Alignment field L(Q) applied to a strain tensor d (defaults to D):
// three-term  m_c d + m_l [d,Q]+ + m_q tr(dQ) Q, or the 7-term general form.
QTensor eval_l(const QTensor& q, const Alignment& align, const QTensor& d);

// 5x5 Jacobian of eval_g in B* coordinates by central finite differences,
// step 1e-6 * max(1, |Q|).
Mat5 jacobian_g(const QTensor& q, const LdgCoefficients& ldg);

// Reduced coefficients of the 7-term family evaluated on the orbit:
// v1* = v1 + 4a^2 v3,  v2* = v2 + a v3,  v4* = (v4 + a v5) + 2a (v6 + a v7).
struct ReducedCoefficients {
  double v1, v2, v4, w3;
};
ReducedCoefficients general_coeff_reduction(const SevenTermAlignment& s, double a);

}  // namespace qkayak

#endif
