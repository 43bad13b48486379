#include "qkayak/models.hpp"

#include <cmath>
#include <sstream>

namespace qkayak {

Equilibrium ldg_equilibrium(const LdgCoefficients& ldg) {
  if (!(ldg.b > 0.0) || !(ldg.c > 0.0)) {
    throw DegenerateModelError("ldg_equilibrium: coefficients b, c must be positive");
  }
  const double disc = ldg.b * ldg.b - 24.0 * ldg.c * ldg.tau;
  if (disc < 0.0) {
    std::ostringstream os;
    os << "ldg_equilibrium: no isotropic-nematic equilibrium (b^2 - 24 c tau = "
       << disc << " < 0)";
    throw DegenerateModelError(os.str());
  }
  if (disc == 0.0) {
    throw DegenerateModelError(
        "ldg_equilibrium: fold point (discriminant 0 gives lambda = 0, "
        "violating lambda*mu != 0)");
  }
  Equilibrium eq;
  eq.a = (ldg.b + std::sqrt(disc)) / (12.0 * ldg.c);
  eq.lambda = eq.a * ldg.b - 12.0 * eq.a * eq.a * ldg.c;
  eq.mu = -3.0 * eq.a * ldg.b;
  eq.physical = eq.a < 1.0 / 3.0;
  return eq;
}

const QTensor& shear_d() {
  static const QTensor d = [] {
    Mat3 m;
    m << 0, 1, 0, 1, 0, 0, 0, 0, 0;
    return QTensor::from_matrix(m);
  }();
  return d;
}

QTensor eval_g(const QTensor& q, const LdgCoefficients& ldg) {
  const double n2 = q.coords().squaredNorm();
  return -(ldg.tau + ldg.c * n2) * q + (ldg.b / 2.0) * bracket_plus(q, q);
}

QTensor eval_l(const QTensor& q, const Alignment& align, const QTensor& d) {
  if (const auto* t = std::get_if<ThreeTermAlignment>(&align)) {
    QTensor out = t->m_c * d;
    if (t->m_l != 0.0) out += t->m_l * bracket_plus(d, q);
    if (t->m_q != 0.0) out += (t->m_q * inner(d, q)) * q;
    return out;
  }
  const auto& v = std::get<SevenTermAlignment>(align).v;
  const Mat3 qm = q.matrix();
  const Mat3 dm = d.matrix();
  const Mat3 q2 = qm * qm;
  const double tr_qd = (qm * dm).trace();
  const double tr_q2d = (q2 * dm).trace();
  Mat3 out = v[0] * dm;
  if (v[1] != 0.0) out += v[1] * bracket_plus(qm, dm);
  if (v[2] != 0.0) out += v[2] * bracket_plus(q2, dm);
  if (v[3] != 0.0) out += v[3] * tr_qd * qm;
  if (v[4] != 0.0) out += v[4] * tr_q2d * qm;
  if (v[5] != 0.0 || v[6] != 0.0) {
    const Mat3 qq = bracket_plus(qm, qm);
    out += (v[5] * tr_qd + v[6] * tr_q2d) * qq;
  }
  return QTensor::from_matrix(out);
}

Mat5 jacobian_g(const QTensor& q, const LdgCoefficients& ldg) {
  const double h = 1e-6 * std::max(1.0, q.norm());
  Mat5 j;
  for (int i = 0; i < 5; ++i) {
    Vec5 dc = Vec5::Zero();
    dc[i] = h;
    const QTensor qp(Vec5(q.coords() + dc));
    const QTensor qmn(Vec5(q.coords() - dc));
    j.col(i) = (eval_g(qp, ldg) - eval_g(qmn, ldg)).coords() / (2.0 * h);
  }
  return j;
}

ReducedCoefficients general_coeff_reduction(const SevenTermAlignment& s, double a) {
  const auto& v = s.v;
  ReducedCoefficients r;
  r.v1 = v[0] + 4.0 * a * a * v[2];
  r.v2 = v[1] + a * v[2];
  r.v4 = (v[3] + a * v[4]) + 2.0 * a * (v[5] + a * v[6]);
  r.w3 = v[2];
  return r;
}

}  // namespace qkayak
