#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qkayak/tensor_core.hpp"
#include "test_util.hpp"

using namespace qkayak;
using namespace qkayak::testutil;

namespace {
QTensor from_diag(double d1, double d2, double d3) {
  Mat3 m = Mat3::Zero();
  m.diagonal() << d1, d2, d3;
  return QTensor::from_matrix(m);
}
}  // namespace

TEST_CASE("basis is orthonormal and traceless symmetric") {
  for (int i = 0; i < 5; ++i) {
    const Mat3& bi = basis_matrix(i);
    CHECK((bi - bi.transpose()).norm() == 0.0);
    CHECK(std::abs(bi.trace()) < 1e-15);
    for (int j = 0; j < 5; ++j) {
      CHECK(std::abs((bi * basis_matrix(j)).trace() - (i == j ? 1.0 : 0.0)) < 1e-15);
    }
  }
}

TEST_CASE("matrix <-> coords round trip is exact") {
  for (int k = 0; k < 50; ++k) {
    const QTensor q = random_tensor();
    const QTensor q2 = QTensor::from_matrix(q.matrix());
    CHECK((q - q2).norm() < 1e-14);
    const Mat3 m = q.matrix();
    CHECK(std::abs(m.trace()) < 1e-14);
    CHECK((m - m.transpose()).norm() == 0.0);
  }
}

TEST_CASE("inner product examples") {
  CHECK(inner(basis_tensor(0), basis_tensor(0)) == doctest::Approx(1.0));
  const double a = 0.1;
  const QTensor qstar = uniaxial_q(a);
  CHECK(inner(qstar, qstar) == doctest::Approx(6.0 * a * a));  // = 0.06
  CHECK(std::abs(inner(basis_tensor(1), basis_tensor(3))) < 1e-15);
}

TEST_CASE("bracket_plus examples") {
  const double a = 0.17;
  const QTensor qstar = uniaxial_q(a);
  CHECK((bracket_plus(qstar, qstar) - 2.0 * a * qstar).norm() < 1e-14);

  // [E21, E11]+ = [E22, E12]+ = E11 / sqrt2
  const QTensor lhs1 = bracket_plus(basis_tensor(3), basis_tensor(1));
  CHECK((lhs1 - basis_tensor(1) / std::sqrt(2.0)).norm() < 1e-14);
  const QTensor lhs2 = bracket_plus(basis_tensor(4), basis_tensor(2));
  CHECK((lhs2 - basis_tensor(1) / std::sqrt(2.0)).norm() < 1e-14);

  CHECK(bracket_plus(random_tensor(), QTensor()).norm() == 0.0);
}

TEST_CASE("bracket_plus equivariance (random)") {
  for (int k = 0; k < 100; ++k) {
    const Rotation r = random_rotation();
    const QTensor h = random_tensor(), kk = random_tensor();
    const QTensor lhs = conjugate(r, bracket_plus(h, kk));
    const QTensor rhs = bracket_plus(conjugate(r, h), conjugate(r, kk));
    CHECK((lhs - rhs).norm() < 1e-12 * std::max(1.0, lhs.norm()));
  }
}

TEST_CASE("conjugation examples") {
  const double a = 0.21;
  const QTensor qstar = uniaxial_q(a);
  for (double phi : {0.3, 1.7, 4.4}) {
    CHECK((conjugate(rot3(phi), qstar) - qstar).norm() < 1e-14);
  }
  // R3(phi) E2(alpha) = E2(alpha + phi); E2(alpha) = cos(2a) E21 + sin(2a) E22
  const double alpha = 0.37, phi = 0.95;
  const QTensor e2a = std::cos(2 * alpha) * basis_tensor(3) +
                      std::sin(2 * alpha) * basis_tensor(4);
  const QTensor e2apf = std::cos(2 * (alpha + phi)) * basis_tensor(3) +
                        std::sin(2 * (alpha + phi)) * basis_tensor(4);
  CHECK((conjugate(rot3(phi), e2a) - e2apf).norm() < 1e-13);

  const QTensor q = random_tensor();
  CHECK((conjugate(Rotation(Mat3::Identity()), q) - q).norm() < 1e-15);
}

TEST_CASE("conjugation preserves inner products") {
  for (int k = 0; k < 20; ++k) {
    const Rotation r = random_rotation();
    const QTensor h = random_tensor(), kk = random_tensor();
    CHECK(inner(conjugate(r, h), conjugate(r, kk)) ==
          doctest::Approx(inner(h, kk)).epsilon(1e-12));
  }
}

TEST_CASE("veronese map examples") {
  const double a = 0.13;
  CHECK((veronese(Vec3(0, 0, 1), a) - uniaxial_q(a)).norm() < 1e-15);
  CHECK((veronese(Vec3(0, 0, -1), a) - uniaxial_q(a)).norm() < 1e-15);
  CHECK((veronese(Vec3(1, 0, 0), a) - from_diag(2 * a, -a, -a)).norm() < 1e-15);
  CHECK_THROWS_AS(veronese(Vec3(0.5, 0, 0), a), ConfigError);
}

TEST_CASE("veronese equivariance (random)") {
  const double a = 0.2;
  for (int k = 0; k < 100; ++k) {
    const Rotation r = random_rotation();
    const Vec3 z = random_unit_vector();
    const QTensor lhs = veronese(Vec3(r.matrix() * z), a);
    const QTensor rhs = conjugate(r, veronese(z, a));
    CHECK((lhs - rhs).norm() < 1e-12);
  }
}

TEST_CASE("veronese tangent scaling is 18 a^2") {
  // finite-difference directional derivative of V at z along u orthogonal to z
  const double a = 0.23, h = 1e-6;
  for (int k = 0; k < 40; ++k) {
    const Vec3 z = random_unit_vector();
    Vec3 u = random_unit_vector();
    u = (u - u.dot(z) * z).normalized();
    Vec3 v = z.cross(u);
    const auto dv = [&](const Vec3& dir) {
      const Mat3 p = a * (3.0 * (z + h * dir) * (z + h * dir).transpose() -
                          (z + h * dir).squaredNorm() * Mat3::Identity());
      const Mat3 m = a * (3.0 * (z - h * dir) * (z - h * dir).transpose() -
                          (z - h * dir).squaredNorm() * Mat3::Identity());
      return QTensor::from_matrix((p - m) / (2.0 * h));
    };
    const double uu = inner(dv(u), dv(u));
    const double uv = inner(dv(u), dv(v));
    CHECK(uu == doctest::Approx(18.0 * a * a).epsilon(1e-6));
    CHECK(std::abs(uv) < 1e-6);
  }
}

TEST_CASE("orbit_point examples") {
  const double a = 0.19;
  CHECK((orbit_point({0.0, 2.1}, a) - uniaxial_q(a)).norm() < 1e-14);
  CHECK((orbit_point({M_PI / 2, 0.0}, a) - from_diag(2 * a, -a, -a)).norm() < 1e-14);

  // equator: Z = a sqrt6 (cos(2pi/3) E0 + sin(2pi/3) E2(phi))
  for (double phi : {0.0, 0.7, 2.9}) {
    const QTensor e2phi = std::cos(2 * phi) * basis_tensor(3) +
                          std::sin(2 * phi) * basis_tensor(4);
    const QTensor expected =
        a * std::sqrt(6.0) *
        (std::cos(2 * M_PI / 3) * basis_tensor(0) +
         std::sin(2 * M_PI / 3) * e2phi);
    CHECK((orbit_point({M_PI / 2, phi}, a) - expected).norm() < 1e-13);
  }
}

TEST_CASE("frame basis invariants") {
  const double a = 0.12;
  for (int k = 0; k < 25; ++k) {
    const SphericalPoint p = random_orbit_angles();
    const FrameBasis f = frame_basis(p, a);
    // Gram matrix is the identity
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        CHECK(std::abs(inner(f.e[i], f.e[j]) - (i == j ? 1.0 : 0.0)) < 1e-12);
      }
    }
    // E0^Z = Z / (a sqrt(6))
    CHECK((f.e[0] - f.Z / (a * std::sqrt(6.0))).norm() < 1e-12);
    // [W3, Z] = 3 sqrt2 a sin(theta) E12^Z, orthogonal to E11^Z
    const QTensor w3z = commutator_w(3, f.Z);
    CHECK(std::abs(inner(w3z, f.e[1])) < 1e-12);
    CHECK((w3z - 3.0 * std::sqrt(2.0) * a * std::sin(p.theta) * f.e[2]).norm() <
          1e-12);
  }
}

TEST_CASE("frame basis at the pole is the reference basis") {
  const FrameBasis f = frame_basis({0.0, 0.0}, 0.3);
  for (int i = 0; i < 5; ++i) {
    CHECK((f.e[i] - basis_tensor(i)).norm() < 1e-14);
  }
}

TEST_CASE("isotypic projections") {
  const double a = 0.26;
  const FrameBasis fstar = frame_basis({0.0, 0.0}, a);
  // V1* contains E1(alpha)
  const double al = 0.83;
  const QTensor e1a = std::cos(al) * basis_tensor(1) + std::sin(al) * basis_tensor(2);
  CHECK((isotypic_project(fstar, 1, e1a) - e1a).norm() < 1e-14);
  // V0^Z contains Z
  const FrameBasis f = frame_basis(random_orbit_angles(), a);
  CHECK((isotypic_project(f, 0, f.Z) - f.Z).norm() < 1e-12);
  // completeness, idempotence, mutual annihilation
  for (int k = 0; k < 30; ++k) {
    const QTensor q = random_tensor();
    QTensor sum;
    for (int i = 0; i < 3; ++i) {
      const QTensor pi = isotypic_project(f, i, q);
      sum += pi;
      CHECK((isotypic_project(f, i, pi) - pi).norm() < 1e-12);
      for (int j = 0; j < 3; ++j) {
        if (j != i) CHECK(isotypic_project(f, j, pi).norm() < 1e-12);
      }
    }
    CHECK((sum - q).norm() < 1e-12);
  }
}

TEST_CASE("bracket_plus eigenstructure on the isotypic frame") {
  const double a = 0.22;
  const double eig[3] = {2.0 * a, a, -2.0 * a};
  for (int k = 0; k < 20; ++k) {
    const FrameBasis f = frame_basis(random_orbit_angles(), a);
    for (int comp = 0; comp < 3; ++comp) {
      const QTensor v = isotypic_project(f, comp, random_tensor());
      const QTensor lhs = bracket_plus(f.Z, v);
      CHECK((lhs - eig[comp] * v).norm() < 1e-12 * std::max(1.0, v.norm()));
    }
  }
}

TEST_CASE("bracket_plus bilinear parity across isotypic components") {
  const double a = 0.15;
  for (int k = 0; k < 20; ++k) {
    const FrameBasis f = frame_basis(random_orbit_angles(), a);
    std::array<QTensor, 3> v;
    for (int i = 0; i < 3; ++i) v[i] = isotypic_project(f, i, random_tensor());
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const QTensor b = bracket_plus(v[i], v[j]);
        if ((i + j) % 2 == 0) {
          CHECK(isotypic_project(f, 1, b).norm() < 1e-12);
        } else {
          CHECK(isotypic_project(f, 0, b).norm() < 1e-12);
          CHECK(isotypic_project(f, 2, b).norm() < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("V1 component closed form matches direct projection") {
  // [H,K]+_1 in coordinates h_ij, k_ij relative to B^Z
  const double a = 0.2;
  for (int rep = 0; rep < 40; ++rep) {
    const FrameBasis f = frame_basis(random_orbit_angles(), a);
    const QTensor hq = random_tensor(), kq = random_tensor();
    Vec5 h, k;
    for (int i = 0; i < 5; ++i) {
      h[i] = inner(hq, f.e[i]);
      k[i] = inner(kq, f.e[i]);
    }
    const double c11 = (h[0] * k[1] + h[1] * k[0]) / std::sqrt(6.0) +
                       (h[1] * k[3] + h[3] * k[1] + h[4] * k[2] + h[2] * k[4]) /
                           std::sqrt(2.0);
    const double c12 = (h[0] * k[2] + h[2] * k[0]) / std::sqrt(6.0) +
                       (h[1] * k[4] + h[4] * k[1] - h[2] * k[3] - h[3] * k[2]) /
                           std::sqrt(2.0);
    const QTensor direct = isotypic_project(f, 1, bracket_plus(hq, kq));
    const QTensor closed = c11 * f.e[1] + c12 * f.e[2];
    CHECK((direct - closed).norm() < 1e-12 * std::max(1.0, direct.norm()));
  }
}

TEST_CASE("commutator identities") {
  CHECK((commutator_w(3, basis_tensor(3)) - 2.0 * basis_tensor(4)).norm() < 1e-15);
  CHECK((commutator_w(3, basis_tensor(4)) + 2.0 * basis_tensor(3)).norm() < 1e-15);
  CHECK((commutator_w(2, basis_tensor(0)) - std::sqrt(3.0) * basis_tensor(1)).norm() <
        1e-15);
  CHECK((commutator_w(1, basis_tensor(0)) + std::sqrt(3.0) * basis_tensor(2)).norm() <
        1e-15);
  CHECK((commutator_w(1, basis_tensor(3)) + basis_tensor(2)).norm() < 1e-15);
  CHECK((commutator_w(1, basis_tensor(4)) - basis_tensor(1)).norm() < 1e-15);
  CHECK((commutator_w(2, basis_tensor(3)) + basis_tensor(1)).norm() < 1e-15);
  CHECK((commutator_w(2, basis_tensor(4)) + basis_tensor(2)).norm() < 1e-15);
  CHECK(commutator_w(3, basis_tensor(0)).norm() == 0.0);
  CHECK(commutator_w(3, uniaxial_q(0.3)).norm() == 0.0);
}

TEST_CASE("nearest orbit coordinates") {
  const double a = 0.18;
  SUBCASE("pole") {
    const OrbitCoordinates oc = nearest_orbit_coordinates(uniaxial_q(a));
    CHECK(oc.point.theta == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(oc.point.phi == 0.0);
  }
  SUBCASE("round trip") {
    const OrbitCoordinates oc =
        nearest_orbit_coordinates(orbit_point({M_PI / 4, 1.0}, a));
    CHECK(oc.point.theta == doctest::Approx(M_PI / 4).epsilon(1e-10));
    CHECK(oc.point.phi == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("double cover normalization") {
    const OrbitCoordinates oc =
        nearest_orbit_coordinates(orbit_point({3 * M_PI / 4, 1.0}, a));
    CHECK(oc.point.theta == doctest::Approx(M_PI / 4).epsilon(1e-10));
    CHECK(oc.point.phi == doctest::Approx(1.0 + M_PI).epsilon(1e-10));
  }
  SUBCASE("degenerate top eigenvalue rejected") {
    // -Q* has its two largest eigenvalues equal
    CHECK_THROWS_AS(nearest_orbit_coordinates(-1.0 * uniaxial_q(a)),
                    NumericalError);
  }
  SUBCASE("random round trips") {
    for (int k = 0; k < 50; ++k) {
      const SphericalPoint p = random_orbit_angles();
      const OrbitCoordinates oc = nearest_orbit_coordinates(orbit_point(p, a));
      const QTensor z1 = orbit_point(p, a);
      const QTensor z2 = orbit_point(oc.point, a);
      CHECK((z1 - z2).norm() < 1e-10);
      CHECK(oc.point.theta <= M_PI / 2 + 1e-12);
      CHECK(orbit_distance(z1, a) < 1e-10);
    }
  }
}

TEST_CASE("eigen_sym3 agrees with Eigen's solver on random symmetric input") {
  for (int k = 0; k < 200; ++k) {
    const Mat3 m = random_tensor(2.0).matrix();
    const Sym3Eigen es = eigen_sym3(m);
    Eigen::SelfAdjointEigenSolver<Mat3> ref(m);
    for (int i = 0; i < 3; ++i) {
      CHECK(es.values[i] == doctest::Approx(ref.eigenvalues()[i]).epsilon(1e-10));
      CHECK((m * es.vectors.col(i) - es.values[i] * es.vectors.col(i)).norm() <
            1e-10 * std::max(1.0, m.norm()));
    }
  }
}

TEST_CASE("spherical point normalization") {
  const SphericalPoint p = SphericalPoint::normalized(M_PI + 0.4, 2 * M_PI + 0.3);
  CHECK(p.theta == doctest::Approx(0.4));
  CHECK(p.phi == doctest::Approx(0.3));
  // Z(theta + pi, phi) = Z(theta, phi)
  const double a = 0.2;
  CHECK((orbit_point({0.4 + M_PI, 0.3}, a) - orbit_point({0.4, 0.3}, a)).norm() <
        1e-13);
  // double cover: (theta, phi) ~ (pi - theta, phi + pi)
  CHECK((orbit_point({M_PI - 0.4, 0.3 + M_PI}, a) - orbit_point({0.4, 0.3}, a))
            .norm() < 1e-13);
}
