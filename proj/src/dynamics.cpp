#include "qkayak/dynamics.hpp"

namespace qkayak {

QTensor rhs_lab(double /*t*/, const QTensor& q, const ModelSpec& spec) {
  QTensor out = eval_g(q, spec.ldg) + spec.omega * commutator_w(3, q);
  if (spec.beta != 0.0) out += spec.beta * eval_l(q, spec.align, shear_d());
  return out;
}

QTensor rhs_corotating(double t, const QTensor& q, const ModelSpec& spec) {
  QTensor out = eval_g(q, spec.ldg);
  if (spec.beta != 0.0) {
    const QTensor d_rot = conjugate(rot3(-spec.omega * t), shear_d());
    out += spec.beta * eval_l(q, spec.align, d_rot);
  }
  return out;
}

RhsFn make_rhs_lab(const ModelSpec& spec) {
  return [spec](double t, const QTensor& q) { return rhs_lab(t, q, spec); };
}

RhsFn make_rhs_corotating(const ModelSpec& spec) {
  return [spec](double t, const QTensor& q) { return rhs_corotating(t, q, spec); };
}

QTensor integrate(const RhsFn& rhs, const QTensor& q0, double t0, double t1,
                  const IntegratorConfig& cfg, DenseOutput<5>* dense) {
  auto f = [&rhs](double t, const Vec5& y) -> Vec5 {
    return rhs(t, QTensor(y)).coords();
  };
  return QTensor(integrate_ode<5>(f, Vec5(q0.coords()), t0, t1, cfg, dense));
}

std::vector<TrajectorySample> integrate_sampled(const RhsFn& rhs, const QTensor& q0,
                                                double t0, double t1,
                                                const IntegratorConfig& cfg,
                                                int n_samples) {
  DenseOutput<5> dense;
  IntegratorConfig c = cfg;
  c.dense_output = true;
  integrate(rhs, q0, t0, t1, c, &dense);
  std::vector<TrajectorySample> out;
  out.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double t = t0 + (t1 - t0) * i / double(n_samples - 1);
    out.push_back({t, QTensor(dense.eval(std::min(t, dense.t_end())))});
  }
  return out;
}

Mat5 fd_jacobian(const RhsFn& rhs, double t, const QTensor& q, double step) {
  const double h = step * std::max(1.0, q.norm());
  Mat5 j;
  for (int i = 0; i < 5; ++i) {
    Vec5 dc = Vec5::Zero();
    dc[i] = h;
    j.col(i) = (rhs(t, QTensor(Vec5(q.coords() + dc))) -
                rhs(t, QTensor(Vec5(q.coords() - dc))))
                   .coords() /
               (2.0 * h);
  }
  return j;
}

std::pair<QTensor, Mat5> integrate_variational(const RhsFn& rhs, const QTensor& q0,
                                               double t0, double t1,
                                               const IntegratorConfig& cfg) {
  using Vec30 = Eigen::Matrix<double, 30, 1>;
  auto f = [&rhs](double t, const Vec30& y) -> Vec30 {
    const QTensor q(Vec5(y.template head<5>()));
    const Mat5 m = Eigen::Map<const Mat5>(y.data() + 5);
    const Mat5 j = fd_jacobian(rhs, t, q);
    Vec30 dy;
    dy.template head<5>() = rhs(t, q).coords();
    Eigen::Map<Mat5>(dy.data() + 5) = j * m;
    return dy;
  };
  Vec30 y0;
  y0.template head<5>() = q0.coords();
  Eigen::Map<Mat5>(y0.data() + 5) = Mat5::Identity();
  const Vec30 yf = integrate_ode<30>(f, y0, t0, t1, cfg);
  return {QTensor(Vec5(yf.template head<5>())),
          Mat5(Eigen::Map<const Mat5>(yf.data() + 5))};
}

}  // namespace qkayak
