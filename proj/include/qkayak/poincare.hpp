#ifndef QKAYAK_POINCARE_HPP
#define QKAYAK_POINCARE_HPP

// Poincare section on a meridian of the group orbit, return maps and their
// fixed points, Floquet multipliers, and orbit classification.

#include <complex>
#include <string>
#include <vector>

#include "qkayak/bifurcation.hpp"
#include "qkayak/dynamics.hpp"

namespace qkayak {

struct SectionSpec {
  double phi0 = 0.0;      // meridian angle
  double epsilon = 0.08;  // tube radius (distance-to-orbit bound)
  int direction = +1;     // crossing sense: increasing director azimuth
};

// Maintains a continuous lift of the director azimuth along a trajectory.
// The director is tracked as a continuous curve on the sphere (sign-matched
// between samples), so the lift advances through the +-n identification.
class AzimuthTracker {
 public:
  explicit AzimuthTracker(const QTensor& q0);
  double advance(const QTensor& q);  // returns the lifted azimuth
  double psi() const { return psi_; }
  const Vec3& director() const { return n_; }
  bool near_pole() const { return near_pole_; }

 private:
  Vec3 n_;
  double psi_;
  bool near_pole_ = false;
};

struct Crossing {
  double t;
  QTensor Q;
  bool in_plane;  // director within the shear plane at the crossing
};

struct CrossingResult {
  std::vector<Crossing> crossings;
  bool exited_tube = false;
  bool pole_degenerate = false;
  double exit_t = 0.0;
};

// All times in [t0, t1] where the director azimuth crosses phi0 in the
// increasing sense. Out-of-plane trajectories cross once per revolution;
// in-plane ones every half revolution (double cover). Crossings are refined
// by bisection on the dense output to |dphi| < 1e-12.
CrossingResult detect_crossings(const DenseOutput<5>& dense, double t0, double t1,
                                const SectionSpec& section, double a);

struct ReturnResult {
  QTensor Q;
  double T;
};

// One full revolution of the director azimuth (lifted by 2*pi); the paper's
// second meeting of the meridian section. On the pole slice the return time
// is T0 = 2 pi / omega by definition.
ReturnResult return_map(const QTensor& q, const ModelSpec& spec,
                        const SectionSpec& section, const IntegratorConfig& cfg);

// Section chart: Q = Z(theta, phi0) + u0 E0^Z + u1 E21^Z + u2 E22^Z.
struct SectionChart {
  double theta;
  Vec3 u;
};
SectionChart section_coords(const QTensor& q, double phi0, double a);
QTensor section_point(const SectionChart& x, double phi0, double a);

// Newton on the vector field itself; used for the logrolling equilibrium
// where the section chart degenerates.
QTensor equilibrium_point(const QTensor& guess, const ModelSpec& spec);

// Newton on (theta, u) driving P(Q) - Q to < 1e-11. Guesses in the pole
// slice are routed to the equilibrium solver.
QTensor fixed_point(const QTensor& guess, const ModelSpec& spec,
                    const SectionSpec& section, const IntegratorConfig& cfg);

// Newton on the three normal coordinates at fixed theta: solves the normal
// fixed-point equation p_N(P(Z+s) - (Z+s)) = 0 and returns Z + s together
// with the residual tangential (E11) component of the return displacement.
struct NormalFixedPoint {
  QTensor Q;
  double e11_defect;  // <P(Q) - Q, E11^Z>, the numerical bifurcation value
  double T;
};
NormalFixedPoint normal_fixed_point(double theta, const ModelSpec& spec,
                                    const SectionSpec& section,
                                    const IntegratorConfig& cfg);

struct FloquetResult {
  std::vector<std::complex<double>> multipliers;  // all five
  int trivial_index = -1;  // flow-direction multiplier, removed for verdicts
  double period = 0.0;
  bool stable = false;
  bool marginal = false;
};

// Multipliers of the monodromy over the least return period of the orbit
// through q_periodic (half revolution for in-plane orbits).
FloquetResult floquet(const QTensor& q_periodic, const ModelSpec& spec,
                      const SectionSpec& section, const IntegratorConfig& cfg);
FloquetResult floquet_at_period(const QTensor& q_periodic, double period,
                                const ModelSpec& spec, const IntegratorConfig& cfg);

enum class OrbitKind { logrolling, tumbling, kayaking, other, indeterminate };
const char* orbit_kind_name(OrbitKind k);

struct OrbitReport {
  OrbitKind kind = OrbitKind::indeterminate;
  double period = 0.0;
  double mean_polar_angle = 0.0;  // [0, pi/2]
  std::vector<std::complex<double>> floquet;
  double out_of_plane_max = 0.0;  // max over the orbit of max(|q13|,|q23|)
  int winding = 0;                // director half-turns per period
  bool stable = false;
  bool marginal = false;
  std::string note;
};

// Classification of the periodic orbit through a fixed point of the return map.
OrbitReport classify_periodic(const QTensor& q_periodic, const ModelSpec& spec,
                              const SectionSpec& section,
                              const IntegratorConfig& cfg);

// Classification of a free trajectory from q0: settles for settle_time, then
// inspects the tail (equilibrium / converged periodic orbit / wagging).
OrbitReport classify_trajectory(const QTensor& q0, double settle_time,
                                const ModelSpec& spec, const SectionSpec& section,
                                const IntegratorConfig& cfg);

}  // namespace qkayak

#endif
