#ifndef QKAYAK_DYNAMICS_HPP
#define QKAYAK_DYNAMICS_HPP

// Right-hand sides of the order-tensor ODE in lab and co-rotating frames,
// and an embedded Dormand-Prince 5(4) integrator with PI step control and
// 4th-order dense output (used for crossing localization).

#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "qkayak/models.hpp"

namespace qkayak {

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.0;  // 0 = no cap
  bool dense_output = true;
};

struct TrajectorySample {
  double t;
  QTensor Q;
};

// Continuous extension of the solution, one polynomial segment per step.
template <int N>
class DenseOutput {
 public:
  using Vec = Eigen::Matrix<double, N, 1>;

  void add_segment(double t0, double h, const std::array<Vec, 5>& rcont) {
    segs_.push_back({t0, h, rcont});
  }

  bool empty() const { return segs_.empty(); }
  double t_begin() const { return segs_.front().t0; }
  double t_end() const { return segs_.back().t0 + segs_.back().h; }

  Vec eval(double t) const {
    const Segment& s = locate(t);
    const double th = (t - s.t0) / s.h;
    const double th1 = 1.0 - th;
    return s.r[0] +
           th * (s.r[1] + th1 * (s.r[2] + th * (s.r[3] + th1 * s.r[4])));
  }

 private:
  struct Segment {
    double t0, h;
    std::array<Vec, 5> r;
  };

  const Segment& locate(double t) const {
    std::size_t lo = 0, hi = segs_.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (segs_[mid].t0 <= t)
        lo = mid;
      else
        hi = mid;
    }
    return segs_[lo];
  }

  std::vector<Segment> segs_;
};

namespace detail {

// Dormand-Prince 5(4) tableau with the Hairer dense-output weights.
struct Dopri5Tableau {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0,
                          d7 = 69997945.0 / 29380423.0;
};

}  // namespace detail

// Integrates dy/dt = f(t, y) from t0 to t1 (t1 > t0). Throws NumericalError
// on step-size underflow (h < 1e-14 * span).
template <int N, class RHS>
Eigen::Matrix<double, N, 1> integrate_ode(RHS&& f, Eigen::Matrix<double, N, 1> y,
                                          double t0, double t1,
                                          const IntegratorConfig& cfg,
                                          DenseOutput<N>* dense = nullptr) {
  using Vec = Eigen::Matrix<double, N, 1>;
  using T = detail::Dopri5Tableau;
  const double span = t1 - t0;
  if (!(span > 0.0)) {
    if (span == 0.0) return y;
    throw ConfigError("integrate_ode: t1 must exceed t0");
  }
  const double hmax = cfg.max_step > 0.0 ? std::min(cfg.max_step, span) : span;

  const auto err_norm = [&](const Vec& e, const Vec& y0, const Vec& y1) {
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
      const double sc =
          cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
      const double q = e[i] / sc;
      s += q * q;
    }
    return std::sqrt(s / N);
  };

  double t = t0;
  Vec k1 = f(t, y);

  // initial step heuristic
  double h;
  {
    double d0 = 0.0, d1 = 0.0;
    for (int i = 0; i < N; ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, hmax);
    const Vec y1 = y + h0 * k1;
    const Vec f1 = f(t + h0, y1);
    double d2 = 0.0;
    for (int i = 0; i < N; ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
      const double q = (f1[i] - k1[i]) / sc;
      d2 += q * q;
    }
    d2 = std::sqrt(d2 / N) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                  : std::pow(0.01 / dm, 0.2);
    h = std::min({100.0 * h0, h1, hmax});
  }

  constexpr double kBeta = 0.04;
  constexpr double kExpo1 = 0.2 - kBeta * 0.75;
  constexpr double kSafe = 0.9;
  double facold = 1e-4;
  bool last_rejected = false;
  long n_steps = 0;

  while (t < t1) {
    if (t + h >= t1) h = t1 - t;
    if (h < 1e-14 * span) {
      std::ostringstream os;
      os << "integrate_ode: stiffness failure (step underflow) at t = " << t
         << ", |y| = " << y.norm();
      throw NumericalError(os.str());
    }
    if (++n_steps > 200'000'000L) {
      throw NumericalError("integrate_ode: step budget exhausted");
    }

    const Vec k2 = f(t + T::c2 * h, Vec(y + h * (T::a21 * k1)));
    const Vec k3 = f(t + T::c3 * h, Vec(y + h * (T::a31 * k1 + T::a32 * k2)));
    const Vec k4 =
        f(t + T::c4 * h, Vec(y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3)));
    const Vec k5 = f(t + T::c5 * h, Vec(y + h * (T::a51 * k1 + T::a52 * k2 +
                                                 T::a53 * k3 + T::a54 * k4)));
    const Vec k6 = f(t + h, Vec(y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 +
                                         T::a64 * k4 + T::a65 * k5)));
    const Vec y1 = y + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 +
                            T::b6 * k6);
    const Vec k7 = f(t + h, y1);
    const Vec errv = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 +
                          T::e6 * k6 + T::e7 * k7);
    const double err = err_norm(errv, y, y1);

    const double fac11 = std::pow(std::max(err, 1e-30), kExpo1);
    if (err <= 1.0) {
      if (dense && cfg.dense_output) {
        const Vec dy = y1 - y;
        std::array<Vec, 5> r;
        r[0] = y;
        r[1] = dy;
        r[2] = h * k1 - dy;
        r[3] = dy - h * k7 - r[2];
        r[4] = h * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 + T::d5 * k5 +
                    T::d6 * k6 + T::d7 * k7);
        dense->add_segment(t, h, r);
      }
      t += h;
      y = y1;
      k1 = k7;  // FSAL
      double fac = fac11 / std::pow(facold, kBeta);
      fac = std::max(0.1, std::min(5.0, fac / kSafe));
      double hnew = h / fac;
      if (last_rejected) hnew = std::min(hnew, h);
      h = std::min(hnew, hmax);
      facold = std::max(err, 1e-4);
      last_rejected = false;
    } else {
      h = h / std::min(5.0, fac11 / kSafe);
      last_rejected = true;
    }
  }
  return y;
}

using RhsFn = std::function<QTensor(double, const QTensor&)>;

// F(Q, beta) = G(Q) + omega [W3, Q] + beta L(Q) D   (autonomous)
QTensor rhs_lab(double t, const QTensor& q, const ModelSpec& spec);

// co-moving frame: G(Q) + beta L(Q) (R3(-omega t)~ D)   (nonautonomous)
QTensor rhs_corotating(double t, const QTensor& q, const ModelSpec& spec);

RhsFn make_rhs_lab(const ModelSpec& spec);
RhsFn make_rhs_corotating(const ModelSpec& spec);

// Endpoint of the trajectory through q0; optionally records dense output.
QTensor integrate(const RhsFn& rhs, const QTensor& q0, double t0, double t1,
                  const IntegratorConfig& cfg, DenseOutput<5>* dense = nullptr);

// Uniformly sampled trajectory (n_samples points including both endpoints).
std::vector<TrajectorySample> integrate_sampled(const RhsFn& rhs, const QTensor& q0,
                                                double t0, double t1,
                                                const IntegratorConfig& cfg,
                                                int n_samples);

// State and 5x5 derivative of the time-t flow map in B* coordinates; the
// matrix ODE runs alongside the state with Jacobians of the rhs taken by
// central finite differences (step 1e-7).
std::pair<QTensor, Mat5> integrate_variational(const RhsFn& rhs, const QTensor& q0,
                                               double t0, double t1,
                                               const IntegratorConfig& cfg);

// Central-difference Jacobian of an arbitrary field on V.
Mat5 fd_jacobian(const RhsFn& rhs, double t, const QTensor& q, double step = 1e-7);

}  // namespace qkayak

#endif
