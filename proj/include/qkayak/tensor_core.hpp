#ifndef QKAYAK_TENSOR_CORE_HPP
#define QKAYAK_TENSOR_CORE_HPP

// Algebra of the 5-dimensional space V of traceless symmetric 3x3 matrices:
// the SO(3) conjugation action, the Veronese parametrization of the group
// orbit of the uniaxial tensor, and the isotypic decomposition attached to
// each orbit point.

#include <array>
#include <optional>

#include "qkayak/types.hpp"

namespace qkayak {

// A point of V. Canonical storage is the coordinate vector in the fixed
// orthonormal basis B* = {E0, E11, E12, E21, E22}; the matrix view is
// materialized on demand, so symmetry and tracelessness hold by construction.
class QTensor {
 public:
  QTensor() : c_(Vec5::Zero()) {}
  explicit QTensor(const Vec5& coords) : c_(coords) {}

  // Symmetrizes and removes the trace before projecting onto B*.
  static QTensor from_matrix(const Mat3& m);

  const Vec5& coords() const { return c_; }
  Mat3 matrix() const;
  double norm() const { return c_.norm(); }

  QTensor operator+(const QTensor& o) const { return QTensor(c_ + o.c_); }
  QTensor operator-(const QTensor& o) const { return QTensor(c_ - o.c_); }
  QTensor operator-() const { return QTensor(-c_); }
  QTensor& operator+=(const QTensor& o) { c_ += o.c_; return *this; }
  QTensor& operator-=(const QTensor& o) { c_ -= o.c_; return *this; }
  friend QTensor operator*(double s, const QTensor& q) { return QTensor(s * q.c_); }
  friend QTensor operator*(const QTensor& q, double s) { return QTensor(s * q.c_); }
  friend QTensor operator/(const QTensor& q, double s) { return QTensor(q.c_ / s); }

 private:
  Vec5 c_;
};

// Basis matrices E0, E11, E12, E21, E22 (orthonormal under <H,K> = tr(HK)).
const Mat3& basis_matrix(int i);
QTensor basis_tensor(int i);

// Antisymmetric generators W1, W2, W3 of rotations about the coordinate axes.
const Mat3& w_generator(int axis);

// tr(HK)
double inner(const QTensor& h, const QTensor& k);

// [H,K]+ = HK + KH - (2/3)tr(HK) I, defined for any symmetric 3x3 inputs.
Mat3 bracket_plus(const Mat3& h, const Mat3& k);
QTensor bracket_plus(const QTensor& h, const QTensor& k);

// Proper rotation; construction validates orthogonality and det = +1.
class Rotation {
 public:
  explicit Rotation(const Mat3& r);
  static Rotation about_axis(int axis, double angle);  // axis in {1,2,3}
  const Mat3& matrix() const { return r_; }
  Rotation operator*(const Rotation& o) const;

 private:
  struct Unchecked {};
  Rotation(const Mat3& r, Unchecked) : r_(r) {}
  Mat3 r_;
};

inline Rotation rot2(double theta) { return Rotation::about_axis(2, theta); }
inline Rotation rot3(double phi) { return Rotation::about_axis(3, phi); }

// R Q R^t
QTensor conjugate(const Rotation& r, const QTensor& q);
Mat3 conjugate(const Mat3& r, const Mat3& q);

struct SphericalPoint {
  double theta = 0.0;  // [0, pi)
  double phi = 0.0;    // [0, 2*pi)
  static SphericalPoint normalized(double theta, double phi);
};

// z(theta,phi) = R3(phi) R2(theta) e3
Vec3 sphere_point(const SphericalPoint& p);
Mat3 orbit_rotation(const SphericalPoint& p);  // R3(phi) R2(theta)

// V(z) = a (3 z z^t - |z|^2 I); rejects non-unit z.
QTensor veronese(const Vec3& z, double a);

// Z(theta,phi) on the group orbit of a*diag(-1,-1,2).
QTensor orbit_point(const SphericalPoint& p, double a);
QTensor uniaxial_q(double a);  // a*diag(-1,-1,2)

// Rotated orthonormal basis B^Z at Z(theta,phi), plus the isotypic frame.
struct FrameBasis {
  QTensor Z;
  std::array<QTensor, 5> e;  // E0^Z, E11^Z, E12^Z, E21^Z, E22^Z
  Mat5 frame;                // column i = coords of e[i] in B*
};
FrameBasis frame_basis(const SphericalPoint& p, double a);

// Component of q in the isotypic subspace V_k^Z, k in {0,1,2}.
QTensor isotypic_project(const FrameBasis& f, int k, const QTensor& q);

// [W_axis, Q]
QTensor commutator_w(int axis, const QTensor& q);

// Eigen-decomposition of a symmetric 3x3 matrix, eigenvalues ascending.
// Analytic characteristic-polynomial method with a Jacobi-rotation fallback
// when the discriminant is near zero.
struct Sym3Eigen {
  Vec3 values;
  Mat3 vectors;  // columns
};
Sym3Eigen eigen_sym3(const Mat3& m);

struct OrbitCoordinates {
  SphericalPoint point;
  Vec3 director;   // unit principal eigenvector, sign-normalized (n_z >= 0)
  double top_gap;  // separation of the two largest eigenvalues
};

// Director angles of the principal axis. Throws NumericalError when the top
// eigenvalue is degenerate (gap < 1e-10) and orbit coordinates are undefined.
OrbitCoordinates nearest_orbit_coordinates(const QTensor& q);

// Frobenius distance from q to the orbit point sharing its principal axis.
double orbit_distance(const QTensor& q, double a);

}  // namespace qkayak

#endif
