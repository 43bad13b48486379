#include "qkayak/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qkayak {

namespace {

constexpr double kInPlaneTol = 1e-6;   // |n_z| below this counts as in-plane
constexpr double kPoleTol = 1e-8;      // |(n_x, n_y)| below this is the pole slice

double wrap_pm_pi(double x) {
  double y = std::fmod(x + M_PI, 2.0 * M_PI);
  if (y <= 0.0) y += 2.0 * M_PI;
  return y - M_PI;
}

Vec3 director_of(const QTensor& q) { return nearest_orbit_coordinates(q).director; }

// Lifted azimuth of q relative to a nearby reference (n_ref, psi_ref).
double lifted_psi(const QTensor& q, const Vec3& n_ref, double psi_ref) {
  Vec3 n = director_of(q);
  if (n.dot(n_ref) < 0.0) n = -n;
  const double alpha = std::atan2(n.y(), n.x());
  return psi_ref + wrap_pm_pi(alpha - psi_ref);
}

}  // namespace

AzimuthTracker::AzimuthTracker(const QTensor& q0) {
  const OrbitCoordinates oc = nearest_orbit_coordinates(q0);
  n_ = oc.director;
  near_pole_ = std::hypot(n_.x(), n_.y()) < kPoleTol;
  psi_ = near_pole_ ? 0.0 : std::atan2(n_.y(), n_.x());
}

double AzimuthTracker::advance(const QTensor& q) {
  Vec3 n = director_of(q);
  if (n.dot(n_) < 0.0) n = -n;
  n_ = n;
  if (std::hypot(n.x(), n.y()) < kPoleTol) {
    near_pole_ = true;
    return psi_;
  }
  const double alpha = std::atan2(n.y(), n.x());
  psi_ += wrap_pm_pi(alpha - psi_);
  return psi_;
}

namespace {

// Bisection refinement of psi(t) = target inside [ta, tb]; the reference
// (n_ref, psi_ref) is valid throughout the bracket.
double refine_crossing(const DenseOutput<5>& dense, double ta, double tb,
                       const Vec3& n_ref, double psi_ref, double target) {
  double lo = ta, hi = tb;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double psi = lifted_psi(QTensor(dense.eval(mid)), n_ref, psi_ref);
    if (std::abs(psi - target) < 1e-12) return mid;
    if (psi < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

CrossingResult detect_crossings(const DenseOutput<5>& dense, double t0, double t1,
                                const SectionSpec& section, double a) {
  CrossingResult out;
  const double t_end = std::min(t1, dense.t_end());
  QTensor q0(dense.eval(t0));

  AzimuthTracker tracker(q0);
  if (tracker.near_pole()) {
    out.pole_degenerate = true;
    return out;
  }

  // sampling fine enough that the lift advances well under pi/2 per step
  const double base = std::fmod(std::fmod(section.phi0, M_PI) + M_PI, M_PI);
  double psi_prev = tracker.psi();
  double next_target =
      base + M_PI * std::ceil((psi_prev + 1e-9 - base) / M_PI);
  Vec3 n_prev = tracker.director();
  double t_prev = t0;

  // step chosen from the slowest relevant azimuth rate
  const double dpsi_rate = std::max(1e-6, std::abs((lifted_psi(
      QTensor(dense.eval(std::min(t0 + 1e-3 * (t_end - t0), t_end))), n_prev,
      psi_prev)) - psi_prev) / std::max(1e-300, 1e-3 * (t_end - t0)));
  double dt = std::min(0.15 / dpsi_rate, (t_end - t0) / 8.0);

  for (double t = std::min(t0 + dt, t_end); t_prev < t_end;
       t = std::min(t + dt, t_end)) {
    QTensor q(dense.eval(t));
    double psi;
    try {
      psi = tracker.advance(q);
    } catch (const NumericalError&) {
      out.pole_degenerate = true;
      break;
    }
    if (tracker.near_pole()) {
      out.pole_degenerate = true;
      break;
    }
    if (orbit_distance(q, a) > section.epsilon) {
      out.exited_tube = true;
      out.exit_t = t;
      break;
    }
    while (psi >= next_target) {
      const double tc =
          refine_crossing(dense, t_prev, t, n_prev, psi_prev, next_target);
      QTensor qc(dense.eval(tc));
      Vec3 nc = director_of(qc);
      if (nc.dot(n_prev) < 0.0) nc = -nc;
      const bool in_plane = std::abs(nc.z()) < kInPlaneTol;
      // canonical azimuth at the crossing (n_z >= 0 representative)
      const double alpha_can = next_target + (nc.z() < 0.0 ? M_PI : 0.0);
      const bool full = std::cos(alpha_can - section.phi0) > 0.5;
      if (in_plane || full) out.crossings.push_back({tc, qc, in_plane});
      next_target += M_PI;
    }
    psi_prev = psi;
    n_prev = tracker.director();
    if (t >= t_end) break;
    t_prev = t;
  }
  return out;
}

namespace {

struct LiftScan {
  double t_hit = 0.0;
  bool found = false;
  bool pole = false;
};

// Scans the dense trajectory until the lifted azimuth reaches psi0 + advance.
LiftScan scan_for_advance(const DenseOutput<5>& dense, double t0, double t_end,
                          double advance, double omega) {
  LiftScan res;
  AzimuthTracker tracker(QTensor(dense.eval(t0)));
  if (tracker.near_pole()) {
    res.pole = true;
    return res;
  }
  const double target = tracker.psi() + advance;
  const double dt = std::min(M_PI / (20.0 * omega), (t_end - t0) / 8.0);
  double t_prev = t0;
  double psi_prev = tracker.psi();
  Vec3 n_prev = tracker.director();
  for (double t = std::min(t0 + dt, t_end); t_prev < t_end;
       t = std::min(t + dt, t_end)) {
    const double psi = tracker.advance(QTensor(dense.eval(t)));
    if (tracker.near_pole()) {
      res.pole = true;
      return res;
    }
    if (psi >= target) {
      res.t_hit = refine_crossing(dense, t_prev, t, n_prev, psi_prev, target);
      res.found = true;
      return res;
    }
    psi_prev = psi;
    n_prev = tracker.director();
    if (t >= t_end) break;
    t_prev = t;
  }
  return res;
}

}  // namespace

ReturnResult return_map(const QTensor& q, const ModelSpec& spec,
                        const SectionSpec& section, const IntegratorConfig& cfg) {
  // the section is implied by the starting point; crossings are always taken
  // in the increasing-azimuth sense since omega > 0
  (void)section;
  const double t0_period = 2.0 * M_PI / spec.omega;
  const OrbitCoordinates oc = nearest_orbit_coordinates(q);
  if (std::hypot(oc.director.x(), oc.director.y()) < kPoleTol) {
    // pole slice: the return time is T0 by definition
    return {integrate(make_rhs_lab(spec), q, 0.0, t0_period, cfg), t0_period};
  }

  const RhsFn rhs = make_rhs_lab(spec);
  DenseOutput<5> dense;
  IntegratorConfig c = cfg;
  c.dense_output = true;
  double t_end = 1.15 * t0_period;
  QTensor q_end = integrate(rhs, q, 0.0, t_end, c, &dense);

  LiftScan scan = scan_for_advance(dense, 0.0, t_end, 2.0 * M_PI, spec.omega);
  if (!scan.found && !scan.pole) {
    q_end = integrate(rhs, q_end, t_end, 3.0 * t0_period, c, &dense);
    t_end = 3.0 * t0_period;
    scan = scan_for_advance(dense, 0.0, t_end, 2.0 * M_PI, spec.omega);
  }
  if (scan.pole) {
    throw NumericalError("return_map: trajectory entered the pole slice");
  }
  if (!scan.found) {
    throw NumericalError("return_map: lost orbit (no return within 3*T0)");
  }
  return {QTensor(dense.eval(scan.t_hit)), scan.t_hit};
}

SectionChart section_coords(const QTensor& q, double phi0, double a) {
  const OrbitCoordinates oc = nearest_orbit_coordinates(q);
  double theta = oc.point.theta;
  const double dphi = wrap_pm_pi(oc.point.phi - phi0);
  if (std::abs(dphi) > M_PI / 2.0) theta = M_PI - theta;  // double-cover fold
  const FrameBasis f = frame_basis(SphericalPoint{theta, phi0}, a);
  const QTensor d = q - f.Z;
  return {theta, Vec3(inner(d, f.e[0]), inner(d, f.e[3]), inner(d, f.e[4]))};
}

QTensor section_point(const SectionChart& x, double phi0, double a) {
  const FrameBasis f = frame_basis(SphericalPoint{x.theta, phi0}, a);
  return f.Z + x.u[0] * f.e[0] + x.u[1] * f.e[3] + x.u[2] * f.e[4];
}

QTensor equilibrium_point(const QTensor& guess, const ModelSpec& spec) {
  QTensor q = guess;
  for (int iter = 0; iter < 50; ++iter) {
    const QTensor f = rhs_lab(0.0, q, spec);
    if (f.norm() < 1e-13 * std::max(1.0, q.norm())) return q;
    const Mat5 j = fd_jacobian(make_rhs_lab(spec), 0.0, q);
    q = QTensor(Vec5(q.coords() + j.fullPivLu().solve(Vec5(-f.coords()))));
  }
  throw NumericalError("equilibrium_point: Newton did not converge");
}

QTensor fixed_point(const QTensor& guess, const ModelSpec& spec,
                    const SectionSpec& section, const IntegratorConfig& cfg) {
  const double a = ldg_equilibrium(spec.ldg).a;
  if (nearest_orbit_coordinates(guess).point.theta < 0.05) {
    return equilibrium_point(guess, spec);
  }
  using Vec4 = Eigen::Matrix<double, 4, 1>;
  const auto pack = [](const SectionChart& ch) {
    return Vec4(ch.theta, ch.u[0], ch.u[1], ch.u[2]);
  };
  const auto unpack = [](const Vec4& x) {
    return SectionChart{x[0], Vec3(x[1], x[2], x[3])};
  };
  const auto gmap = [&](const Vec4& x) -> Vec4 {
    const QTensor q = section_point(unpack(x), section.phi0, a);
    const ReturnResult r = return_map(q, spec, section, cfg);
    return pack(section_coords(r.Q, section.phi0, a)) - x;
  };

  Vec4 x = pack(section_coords(guess, section.phi0, a));
  std::vector<double> history;
  for (int iter = 0; iter < 50; ++iter) {
    const QTensor q = section_point(unpack(x), section.phi0, a);
    const ReturnResult r = return_map(q, spec, section, cfg);
    const double res = (r.Q - q).norm();
    history.push_back(res);
    if (res < 1e-11) return q;

    const Vec4 g0 = pack(section_coords(r.Q, section.phi0, a)) - x;
    Eigen::Matrix4d jac;
    const double h = 1e-6;
    for (int j = 0; j < 4; ++j) {
      Vec4 xp = x;
      xp[j] += h;
      jac.col(j) = (gmap(xp) - g0) / h;
    }
    Vec4 dx = jac.fullPivLu().solve(-g0);
    // stay inside the tube
    const double cap = std::max(std::abs(dx[0]) / 0.3,
                                dx.tail<3>().norm() / (0.5 * section.epsilon));
    if (cap > 1.0) dx /= cap;
    // backtracking keeps the iteration out of two-cycles
    const double g0n = g0.norm();
    for (int half = 0; half < 8; ++half) {
      if (gmap(Vec4(x + dx)).norm() <= g0n * (1.0 - 1e-4) || half == 7) break;
      dx *= 0.5;
    }
    x += dx;
  }
  std::ostringstream os;
  os << "fixed_point: Newton did not converge in 50 iterations; residuals:";
  for (double r : history) os << " " << r;
  throw NumericalError(os.str());
}

NormalFixedPoint normal_fixed_point(double theta, const ModelSpec& spec,
                                    const SectionSpec& section,
                                    const IntegratorConfig& cfg) {
  const double a = ldg_equilibrium(spec.ldg).a;
  const FrameBasis f = frame_basis(SphericalPoint{theta, section.phi0}, a);

  struct Eval {
    Vec3 r;
    double e11;
    QTensor q;
    double T;
  };
  const auto eval = [&](const Vec3& u) -> Eval {
    const QTensor q = f.Z + u[0] * f.e[0] + u[1] * f.e[3] + u[2] * f.e[4];
    const ReturnResult ret = return_map(q, spec, section, cfg);
    const QTensor d = ret.Q - q;
    return {Vec3(inner(d, f.e[0]), inner(d, f.e[3]), inner(d, f.e[4])),
            inner(d, f.e[1]), q, ret.T};
  };

  Vec3 u = Vec3::Zero();
  std::vector<double> history;
  Eval best{};
  double best_res = 1e300;
  for (int iter = 0; iter < 50; ++iter) {
    const Eval e0 = eval(u);
    const double res = e0.r.norm();
    history.push_back(res);
    if (res < best_res) {
      best_res = res;
      best = e0;
    }
    if (res < 1e-12) return {e0.q, e0.e11, e0.T};
    // the numerical return map has an O(local error) noise floor; accept a
    // stalled iterate once it is far below the beta^2 signal scale
    if (iter >= 8 && best_res < 1e-10) break;
    Mat3 jac;
    const double h = 1e-7;
    for (int j = 0; j < 3; ++j) {
      Vec3 up = u;
      up[j] += h;
      jac.col(j) = (eval(up).r - e0.r) / h;
    }
    u += jac.fullPivLu().solve(Vec3(-e0.r));
  }
  if (best_res < 1e-10) return {best.q, best.e11, best.T};
  std::ostringstream os;
  os << "normal_fixed_point: Newton did not converge in 50 iterations; residuals:";
  for (double r : history) os << " " << r;
  throw NumericalError(os.str());
}

namespace {

FloquetResult floquet_from_monodromy(const Mat5& m, const QTensor& qp,
                                     const ModelSpec& spec, double period) {
  FloquetResult out;
  out.period = period;
  Eigen::EigenSolver<Mat5> es(m);
  for (int i = 0; i < 5; ++i) out.multipliers.push_back(es.eigenvalues()[i]);

  // the trivial multiplier pairs with the flow direction
  const Vec5 flow = rhs_lab(0.0, qp, spec).coords().normalized();
  double best = -1.0;
  for (int i = 0; i < 5; ++i) {
    if (std::abs(es.eigenvalues()[i].imag()) >
        1e-6 * std::abs(es.eigenvalues()[i]))
      continue;
    Vec5 v = es.eigenvectors().col(i).real();
    const double nv = v.norm();
    if (nv == 0.0) continue;
    const double score = std::abs(v.dot(flow)) / nv;
    if (score > best) {
      best = score;
      out.trivial_index = i;
    }
  }
  if (out.trivial_index < 0) {
    // fall back to the multiplier closest to 1
    double dist = 1e300;
    for (int i = 0; i < 5; ++i) {
      const double d = std::abs(es.eigenvalues()[i] - 1.0);
      if (d < dist) {
        dist = d;
        out.trivial_index = i;
      }
    }
  }
  out.stable = true;
  out.marginal = false;
  for (int i = 0; i < 5; ++i) {
    if (i == out.trivial_index) continue;
    const double mag = std::abs(out.multipliers[i]);
    if (mag >= 1.0 - 1e-6) out.stable = false;
    if (std::abs(mag - 1.0) <= 1e-6) out.marginal = true;
  }
  return out;
}

}  // namespace

FloquetResult floquet_at_period(const QTensor& q_periodic, double period,
                                const ModelSpec& spec,
                                const IntegratorConfig& cfg) {
  const auto [qf, m] =
      integrate_variational(make_rhs_lab(spec), q_periodic, 0.0, period, cfg);
  (void)qf;
  return floquet_from_monodromy(m, q_periodic, spec, period);
}

FloquetResult floquet(const QTensor& q_periodic, const ModelSpec& spec,
                      const SectionSpec& section, const IntegratorConfig& cfg) {
  (void)section;
  const double scale = std::max(1.0, q_periodic.norm());
  if (rhs_lab(0.0, q_periodic, spec).norm() < 1e-12 * scale) {
    throw NumericalError("floquet: input is an equilibrium, not a periodic orbit");
  }
  // least period: half revolution if the orbit closes there (double cover)
  const RhsFn rhs = make_rhs_lab(spec);
  DenseOutput<5> dense;
  IntegratorConfig c = cfg;
  c.dense_output = true;
  const double t0_period = 2.0 * M_PI / spec.omega;
  integrate(rhs, q_periodic, 0.0, 1.15 * t0_period, c, &dense);
  double period = -1.0;
  const LiftScan half =
      scan_for_advance(dense, 0.0, 1.15 * t0_period, M_PI, spec.omega);
  if (half.found &&
      (QTensor(dense.eval(half.t_hit)) - q_periodic).norm() < 1e-6 * scale) {
    period = half.t_hit;
  } else {
    const LiftScan full =
        scan_for_advance(dense, 0.0, 1.15 * t0_period, 2.0 * M_PI, spec.omega);
    if (full.found) period = full.t_hit;
  }
  if (period <= 0.0) {
    throw NumericalError("floquet: could not determine the orbit period");
  }
  return floquet_at_period(q_periodic, period, spec, cfg);
}

const char* orbit_kind_name(OrbitKind k) {
  switch (k) {
    case OrbitKind::logrolling:
      return "logrolling";
    case OrbitKind::tumbling:
      return "tumbling";
    case OrbitKind::kayaking:
      return "kayaking";
    case OrbitKind::other:
      return "other";
    default:
      return "indeterminate";
  }
}

OrbitReport classify_periodic(const QTensor& q_periodic, const ModelSpec& spec,
                              const SectionSpec& section,
                              const IntegratorConfig& cfg) {
  OrbitReport rep;
  const double scale = std::max(1.0, q_periodic.norm());
  if (rhs_lab(0.0, q_periodic, spec).norm() < 1e-9 * scale) {
    const OrbitCoordinates oc = nearest_orbit_coordinates(q_periodic);
    rep.kind = oc.point.theta < 0.1 ? OrbitKind::logrolling : OrbitKind::other;
    rep.period = 0.0;
    rep.mean_polar_angle = std::min(oc.point.theta, M_PI - oc.point.theta);
    rep.stable = true;  // refined by the caller if needed
    rep.note = "equilibrium";
    return rep;
  }

  const FloquetResult fl = floquet(q_periodic, spec, section, cfg);
  rep.period = fl.period;
  rep.floquet = fl.multipliers;
  rep.stable = fl.stable;
  rep.marginal = fl.marginal;

  DenseOutput<5> dense;
  IntegratorConfig c = cfg;
  c.dense_output = true;
  integrate(make_rhs_lab(spec), q_periodic, 0.0, fl.period, c, &dense);

  const int n = 512;
  AzimuthTracker tracker(q_periodic);
  const double psi0 = tracker.psi();
  double polar_sum = 0.0;
  double oop_rel_max = 0.0;
  double max_nz = 0.0;
  rep.out_of_plane_max = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = fl.period * i / double(n);
    const QTensor q(dense.eval(std::min(t, dense.t_end())));
    const Mat3 m = q.matrix();
    const double oop = std::max(std::abs(m(0, 2)), std::abs(m(1, 2)));
    rep.out_of_plane_max = std::max(rep.out_of_plane_max, oop);
    oop_rel_max = std::max(oop_rel_max, oop / std::max(1e-300, q.norm()));
    const OrbitCoordinates oc = nearest_orbit_coordinates(q);
    max_nz = std::max(max_nz, std::abs(oc.director.z()));
    const double polar = std::min(oc.point.theta, M_PI - oc.point.theta);
    polar_sum += (i == 0 || i == n) ? 0.5 * polar : polar;
    if (i > 0) tracker.advance(q);
  }
  rep.mean_polar_angle = polar_sum / n;
  rep.winding = int(std::lround((tracker.psi() - psi0) / M_PI));

  const bool in_plane = oop_rel_max < 1e-6;
  if (in_plane && rep.winding >= 1) {
    rep.kind = OrbitKind::tumbling;
  } else if (!in_plane && rep.winding == 2 && max_nz < 1.0 - 1e-6) {
    rep.kind = OrbitKind::kayaking;
  } else {
    rep.kind = OrbitKind::other;
    rep.note = "periodic orbit outside the tumbling/kayaking taxonomy";
  }
  return rep;
}

OrbitReport classify_trajectory(const QTensor& q0, double settle_time,
                                const ModelSpec& spec, const SectionSpec& section,
                                const IntegratorConfig& cfg) {
  const RhsFn rhs = make_rhs_lab(spec);
  QTensor q = settle_time > 0.0 ? integrate(rhs, q0, 0.0, settle_time, cfg) : q0;

  OrbitReport rep;
  const double scale = std::max(1.0, q.norm());
  if (rhs_lab(0.0, q, spec).norm() < 1e-9 * scale) {
    return classify_periodic(q, spec, section, cfg);
  }

  // inspect the tail over several revolutions
  const double t0_period = 2.0 * M_PI / spec.omega;
  DenseOutput<5> dense;
  IntegratorConfig c = cfg;
  c.dense_output = true;
  const double tail = 4.0 * t0_period;
  integrate(rhs, q, 0.0, tail, c, &dense);
  const double a = ldg_equilibrium(spec.ldg).a;
  const CrossingResult cr = detect_crossings(dense, 0.0, tail, section, a);
  if (cr.pole_degenerate) {
    // pole slice: classify by equilibrium distance
    const QTensor q_end(dense.eval(tail));
    if (rhs_lab(0.0, q_end, spec).norm() < 1e-7 * scale) {
      return classify_periodic(q_end, spec, section, cfg);
    }
    rep.kind = OrbitKind::indeterminate;
    rep.note = "trajectory in the pole slice, not settled";
    return rep;
  }
  if (cr.crossings.size() >= 2) {
    const Crossing& last = cr.crossings.back();
    const Crossing& prev = cr.crossings[cr.crossings.size() - 2];
    const double gap = (last.Q - prev.Q).norm();
    if (gap < 1e-8 * scale) {
      // already periodic to integrator accuracy; Newton polish would face a
      // singular Jacobian on the neutral (beta = 0) orbit family
      return classify_periodic(last.Q, spec, section, cfg);
    }
    if (gap < 1e-6 * scale) {
      const QTensor qp = fixed_point(last.Q, spec, section, cfg);
      return classify_periodic(qp, spec, section, cfg);
    }
    rep.kind = OrbitKind::indeterminate;
    rep.note = "crossings not yet converged to a periodic point";
    return rep;
  }

  // no azimuth winding: oscillation (wagging-like) or not settled
  AzimuthTracker tracker(QTensor(dense.eval(0.0)));
  double psi_min = tracker.psi(), psi_max = tracker.psi();
  for (int i = 1; i <= 256; ++i) {
    const double t = tail * i / 256.0;
    const double psi = tracker.advance(QTensor(dense.eval(t)));
    psi_min = std::min(psi_min, psi);
    psi_max = std::max(psi_max, psi);
  }
  if (psi_max - psi_min < M_PI) {
    rep.kind = OrbitKind::other;
    rep.note = "azimuth oscillates without winding (wagging-like)";
  } else {
    rep.kind = OrbitKind::indeterminate;
    rep.note = "unconverged trajectory";
  }
  return rep;
}

}  // namespace qkayak
