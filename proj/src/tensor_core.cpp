#include "qkayak/tensor_core.hpp"

#include <cmath>

namespace qkayak {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt6 = 2.449489742783178;

std::array<Mat3, 5> make_basis() {
  std::array<Mat3, 5> b;
  b[0] << -1, 0, 0, 0, -1, 0, 0, 0, 2;
  b[0] /= kSqrt6;
  b[1] << 0, 0, 1, 0, 0, 0, 1, 0, 0;
  b[1] /= kSqrt2;
  b[2] << 0, 0, 0, 0, 0, 1, 0, 1, 0;
  b[2] /= kSqrt2;
  b[3] << 1, 0, 0, 0, -1, 0, 0, 0, 0;
  b[3] /= kSqrt2;
  b[4] << 0, 1, 0, 1, 0, 0, 0, 0, 0;
  b[4] /= kSqrt2;
  return b;
}

std::array<Mat3, 3> make_generators() {
  std::array<Mat3, 3> w;
  w[0] << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  w[1] << 0, 0, 1, 0, 0, 0, -1, 0, 0;
  w[2] << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  return w;
}

const std::array<Mat3, 5>& basis() {
  static const std::array<Mat3, 5> b = make_basis();
  return b;
}

double wrap_angle(double x, double period) {
  double y = std::fmod(x, period);
  if (y < 0) y += period;
  return y;
}

}  // namespace

QTensor QTensor::from_matrix(const Mat3& m) {
  Mat3 s = 0.5 * (m + m.transpose());
  s -= (s.trace() / 3.0) * Mat3::Identity();
  Vec5 c;
  for (int i = 0; i < 5; ++i) c[i] = (s * basis()[i]).trace();
  return QTensor(c);
}

Mat3 QTensor::matrix() const {
  Mat3 m = Mat3::Zero();
  for (int i = 0; i < 5; ++i) m += c_[i] * basis()[i];
  return m;
}

const Mat3& basis_matrix(int i) { return basis()[i]; }

QTensor basis_tensor(int i) {
  Vec5 c = Vec5::Zero();
  c[i] = 1.0;
  return QTensor(c);
}

const Mat3& w_generator(int axis) {
  static const std::array<Mat3, 3> w = make_generators();
  return w[axis - 1];
}

double inner(const QTensor& h, const QTensor& k) { return h.coords().dot(k.coords()); }

Mat3 bracket_plus(const Mat3& h, const Mat3& k) {
  Mat3 hk = h * k;
  return hk + hk.transpose() - (2.0 / 3.0) * hk.trace() * Mat3::Identity();
}

QTensor bracket_plus(const QTensor& h, const QTensor& k) {
  return QTensor::from_matrix(bracket_plus(h.matrix(), k.matrix()));
}

Rotation::Rotation(const Mat3& r) : r_(r) {
  if ((r.transpose() * r - Mat3::Identity()).norm() > 1e-10 ||
      std::abs(r.determinant() - 1.0) > 1e-10) {
    throw ConfigError("Rotation: matrix is not a proper rotation");
  }
}

Rotation Rotation::about_axis(int axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  switch (axis) {
    case 1:
      r << 1, 0, 0, 0, c, -s, 0, s, c;
      break;
    case 2:
      r << c, 0, s, 0, 1, 0, -s, 0, c;
      break;
    case 3:
      r << c, -s, 0, s, c, 0, 0, 0, 1;
      break;
    default:
      throw ConfigError("Rotation::about_axis: axis must be 1, 2 or 3");
  }
  return Rotation(r, Unchecked{});
}

Rotation Rotation::operator*(const Rotation& o) const {
  return Rotation(Mat3(r_ * o.r_), Unchecked{});
}

QTensor conjugate(const Rotation& r, const QTensor& q) {
  return QTensor::from_matrix(r.matrix() * q.matrix() * r.matrix().transpose());
}

Mat3 conjugate(const Mat3& r, const Mat3& q) { return r * q * r.transpose(); }

SphericalPoint SphericalPoint::normalized(double theta, double phi) {
  // Z(theta + pi, phi) = Z(theta, phi), so theta reduces mod pi.
  return SphericalPoint{wrap_angle(theta, M_PI), wrap_angle(phi, 2.0 * M_PI)};
}

Vec3 sphere_point(const SphericalPoint& p) {
  const double st = std::sin(p.theta), ct = std::cos(p.theta);
  const double sp = std::sin(p.phi), cp = std::cos(p.phi);
  return Vec3(st * cp, st * sp, ct);
}

Mat3 orbit_rotation(const SphericalPoint& p) {
  return rot3(p.phi).matrix() * rot2(p.theta).matrix();
}

QTensor veronese(const Vec3& z, double a) {
  const double n2 = z.squaredNorm();
  if (std::abs(n2 - 1.0) > 2e-12) {
    throw ConfigError("veronese: input is not a unit vector");
  }
  Mat3 m = a * (3.0 * z * z.transpose() - n2 * Mat3::Identity());
  return QTensor::from_matrix(m);
}

QTensor uniaxial_q(double a) {
  Vec5 c = Vec5::Zero();
  c[0] = a * kSqrt6;
  return QTensor(c);
}

QTensor orbit_point(const SphericalPoint& p, double a) {
  return veronese(sphere_point(p), a);
}

FrameBasis frame_basis(const SphericalPoint& p, double a) {
  FrameBasis f;
  const Rotation rz = rot3(p.phi) * rot2(p.theta);
  for (int i = 0; i < 5; ++i) {
    f.e[i] = conjugate(rz, basis_tensor(i));
    f.frame.col(i) = f.e[i].coords();
  }
  f.Z = a * kSqrt6 * f.e[0];
  return f;
}

QTensor isotypic_project(const FrameBasis& f, int k, const QTensor& q) {
  switch (k) {
    case 0:
      return inner(f.e[0], q) * f.e[0];
    case 1:
      return inner(f.e[1], q) * f.e[1] + inner(f.e[2], q) * f.e[2];
    case 2:
      return inner(f.e[3], q) * f.e[3] + inner(f.e[4], q) * f.e[4];
    default:
      throw ConfigError("isotypic_project: k must be 0, 1 or 2");
  }
}

QTensor commutator_w(int axis, const QTensor& q) {
  const Mat3& w = w_generator(axis);
  const Mat3 m = q.matrix();
  return QTensor::from_matrix(w * m - m * w);
}

namespace {

// Cyclic Jacobi sweeps; robust for (near-)degenerate spectra.
Sym3Eigen jacobi_sym3(const Mat3& m) {
  Mat3 a = m;
  Mat3 v = Mat3::Identity();
  for (int sweep = 0; sweep < 32; ++sweep) {
    double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    if (off < 1e-34 * std::max(1.0, a.squaredNorm())) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a(p, q) == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        Mat3 g = Mat3::Identity();
        g(p, p) = c;
        g(q, q) = c;
        g(p, q) = s;
        g(q, p) = -s;
        a = g.transpose() * a * g;
        a(p, q) = a(q, p) = 0.0;
        v = v * g;
      }
    }
  }
  // sort ascending
  std::array<int, 3> idx = {0, 1, 2};
  std::sort(idx.begin(), idx.end(), [&](int i, int j) { return a(i, i) < a(j, j); });
  Sym3Eigen out;
  for (int i = 0; i < 3; ++i) {
    out.values[i] = a(idx[i], idx[i]);
    out.vectors.col(i) = v.col(idx[i]);
  }
  return out;
}

}  // namespace

Sym3Eigen eigen_sym3(const Mat3& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);

  Vec3 ev;
  if (p1 < 1e-30 * scale * scale) {
    ev = m.diagonal();
    std::sort(ev.data(), ev.data() + 3);
  } else {
    const double q = m.trace() / 3.0;
    const double p2 = (m(0, 0) - q) * (m(0, 0) - q) + (m(1, 1) - q) * (m(1, 1) - q) +
                      (m(2, 2) - q) * (m(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    const Mat3 b = (m - q * Mat3::Identity()) / p;
    double r = b.determinant() / 2.0;
    r = std::clamp(r, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    ev[2] = q + 2.0 * p * std::cos(phi);
    ev[0] = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    ev[1] = 3.0 * q - ev[0] - ev[2];
  }

  // Hand off to Jacobi when the spectrum is close to degenerate; the
  // trigonometric eigenvalues lose ~sqrt(ulp) accuracy there and the
  // cross-product eigenvectors degrade with 1/gap.
  const double gap = std::min(ev[1] - ev[0], ev[2] - ev[1]);
  if (gap < 1e-4 * scale) return jacobi_sym3(m);

  const auto cross_vector = [&](double lambda) -> Vec3 {
    const Mat3 s = m - lambda * Mat3::Identity();
    const Vec3 c0 = s.row(0).cross(s.row(1));
    const Vec3 c1 = s.row(0).cross(s.row(2));
    const Vec3 c2 = s.row(1).cross(s.row(2));
    Vec3 best = c0;
    if (c1.squaredNorm() > best.squaredNorm()) best = c1;
    if (c2.squaredNorm() > best.squaredNorm()) best = c2;
    return best;
  };

  // start from the best-isolated eigenvalue; its vector is the most accurate
  const int first = (ev[1] - ev[0] > ev[2] - ev[1]) ? 0 : 2;
  const int second = 2 - first;
  Vec3 vf = cross_vector(ev[first]);
  Vec3 vs = cross_vector(ev[second]);
  if (vf.squaredNorm() < 1e-28 * scale * scale ||
      vs.squaredNorm() < 1e-28 * scale * scale) {
    return jacobi_sym3(m);
  }
  vf.normalize();
  vs = (vs - vs.dot(vf) * vf).normalized();
  Sym3Eigen out;
  out.values = ev;
  out.vectors.col(first) = vf;
  out.vectors.col(second) = vs;
  out.vectors.col(1) = vf.cross(vs);  // eigenvector sign is arbitrary
  return out;
}

OrbitCoordinates nearest_orbit_coordinates(const QTensor& q) {
  const Sym3Eigen es = eigen_sym3(q.matrix());
  const double gap = es.values[2] - es.values[1];
  if (gap < 1e-10) {
    throw NumericalError("nearest_orbit_coordinates: orbit coordinates undefined "
                         "(degenerate top eigenvalue, gap < 1e-10)");
  }
  Vec3 n = es.vectors.col(2);
  if (n.z() < 0 || (n.z() == 0 && (n.x() < 0 || (n.x() == 0 && n.y() < 0)))) n = -n;
  OrbitCoordinates oc;
  oc.director = n;
  oc.top_gap = gap;
  const double theta = std::acos(std::clamp(n.z(), -1.0, 1.0));
  double phi = std::atan2(n.y(), n.x());
  if (phi < 0) phi += 2.0 * M_PI;
  if (theta == 0.0) phi = 0.0;  // azimuth is conventional at the pole
  oc.point = SphericalPoint{theta, phi};
  return oc;
}

double orbit_distance(const QTensor& q, double a) {
  const OrbitCoordinates oc = nearest_orbit_coordinates(q);
  return (q - orbit_point(oc.point, a)).norm();
}

}  // namespace qkayak
