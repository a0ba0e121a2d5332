#include "knotmono/knot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace knotmono {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Arc-length reparametrization of an analytic periodic curve.
struct ArcLengthTable {
  std::vector<double> t_of_s;  // uniform s grid -> parameter t
  double total_len = 0;
  double period_t = 0;
};

ArcLengthTable build_arclength(const std::function<Vec3(double)>& vel, double period_t,
                               int n = 1 << 14) {
  // cumulative length by composite Simpson on a fine uniform t-grid
  ArcLengthTable tab;
  tab.period_t = period_t;
  double ht = period_t / n;
  std::vector<double> cum(n + 1, 0.0);
  double prev_speed = vel(0.0).norm();
  for (int i = 1; i <= n; ++i) {
    double t0 = (i - 1) * ht, t1 = i * ht;
    double sm = vel(0.5 * (t0 + t1)).norm();
    double s1 = vel(t1).norm();
    cum[i] = cum[i - 1] + ht / 6.0 * (prev_speed + 4.0 * sm + s1);
    prev_speed = s1;
  }
  tab.total_len = cum[n];
  // invert: uniform s grid, same resolution
  tab.t_of_s.resize(n + 1);
  int j = 0;
  for (int i = 0; i <= n; ++i) {
    double s = tab.total_len * i / n;
    while (j < n && cum[j + 1] < s) ++j;
    double f = (cum[j + 1] > cum[j]) ? (s - cum[j]) / (cum[j + 1] - cum[j]) : 0.0;
    tab.t_of_s[i] = (j + f) * ht;
  }
  tab.t_of_s[n] = period_t;
  return tab;
}

double eval_t_of_s(const ArcLengthTable& tab, double s) {
  int n = static_cast<int>(tab.t_of_s.size()) - 1;
  double u = s / tab.total_len * n;
  u -= std::floor(u / n) * n;
  int i = std::min(static_cast<int>(u), n - 1);
  double f = u - i;
  return tab.t_of_s[i] * (1 - f) + tab.t_of_s[i + 1] * f;
}

}  // namespace

KnotCurve KnotCurve::circle(double radius) {
  KnotCurve k;
  k.length_ = kTwoPi * radius;
  k.pos_ = [radius](double s) {
    double u = s / radius;
    return Vec3(radius * std::cos(u), radius * std::sin(u), 0.0);
  };
  k.vel_ = [radius](double s) {
    double u = s / radius;
    return Vec3(-std::sin(u), std::cos(u), 0.0);
  };
  k.acc_ = [radius](double s) {
    double u = s / radius;
    return Vec3(-std::cos(u) / radius, -std::sin(u) / radius, 0.0);
  };
  k.finalize();
  return k;
}

KnotCurve KnotCurve::trefoil(double a, double b, double c) {
  auto pos_t = [=](double t) {
    double r = a + b * std::cos(3 * t);
    return Vec3(r * std::cos(2 * t), r * std::sin(2 * t), c * std::sin(3 * t));
  };
  auto vel_t = [=](double t) {
    double r = a + b * std::cos(3 * t), dr = -3 * b * std::sin(3 * t);
    return Vec3(dr * std::cos(2 * t) - 2 * r * std::sin(2 * t),
                dr * std::sin(2 * t) + 2 * r * std::cos(2 * t), 3 * c * std::cos(3 * t));
  };
  auto acc_t = [=](double t) {
    double r = a + b * std::cos(3 * t), dr = -3 * b * std::sin(3 * t),
           ddr = -9 * b * std::cos(3 * t);
    return Vec3(ddr * std::cos(2 * t) - 4 * dr * std::sin(2 * t) - 4 * r * std::cos(2 * t),
                ddr * std::sin(2 * t) + 4 * dr * std::cos(2 * t) - 4 * r * std::sin(2 * t),
                -9 * c * std::sin(3 * t));
  };

  auto tab = std::make_shared<ArcLengthTable>(build_arclength(vel_t, kTwoPi));
  KnotCurve k;
  k.length_ = tab->total_len;
  k.pos_ = [=](double s) { return pos_t(eval_t_of_s(*tab, s)); };
  k.vel_ = [=](double s) {
    double t = eval_t_of_s(*tab, s);
    Vec3 v = vel_t(t);
    return Vec3(v / v.norm());
  };
  k.acc_ = [=](double s) {
    double t = eval_t_of_s(*tab, s);
    Vec3 v = vel_t(t), w = acc_t(t);
    double n2 = v.squaredNorm();
    return Vec3(w / n2 - v * (v.dot(w)) / (n2 * n2));
  };
  k.finalize();
  return k;
}

KnotCurve KnotCurve::from_samples(const std::vector<Vec3>& pts) {
  if (pts.size() < 8) throw std::invalid_argument("KnotCurve: need at least 8 samples");
  int m = static_cast<int>(pts.size());
  // periodic cubic interpolation through the samples in the sample index u
  auto wrap = [m](int i) { return ((i % m) + m) % m; };
  auto pos_u = [pts, wrap, m](double u) {
    u -= std::floor(u / m) * m;
    int i = static_cast<int>(u);
    double f = u - i;
    const Vec3 &p0 = pts[wrap(i - 1)], &p1 = pts[wrap(i)], &p2 = pts[wrap(i + 1)],
               &p3 = pts[wrap(i + 2)];
    // Catmull-Rom
    return Vec3(0.5 * ((2.0 * p1) + (-p0 + p2) * f + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * f * f +
                       (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * f * f * f));
  };
  auto vel_u = [pos_u](double u) {
    double h = 1e-4;
    return Vec3((pos_u(u + h) - pos_u(u - h)) / (2 * h));
  };
  auto acc_u = [pos_u](double u) {
    double h = 1e-3;
    return Vec3((pos_u(u + h) - 2.0 * pos_u(u) + pos_u(u - h)) / (h * h));
  };
  auto tab = std::make_shared<ArcLengthTable>(build_arclength(vel_u, static_cast<double>(m)));
  KnotCurve k;
  k.length_ = tab->total_len;
  k.pos_ = [=](double s) { return pos_u(eval_t_of_s(*tab, s)); };
  k.vel_ = [=](double s) {
    Vec3 v = vel_u(eval_t_of_s(*tab, s));
    return Vec3(v / v.norm());
  };
  k.acc_ = [=](double s) {
    double u = eval_t_of_s(*tab, s);
    Vec3 v = vel_u(u), w = acc_u(u);
    double n2 = v.squaredNorm();
    return Vec3(w / n2 - v * (v.dot(w)) / (n2 * n2));
  };
  k.finalize();
  return k;
}

void KnotCurve::finalize() {
  const int n = 1024;
  max_curvature_ = 0;
  std::vector<Vec3> p(n);
  for (int i = 0; i < n; ++i) {
    double s = length_ * i / n;
    p[i] = pos_(s);
    max_curvature_ = std::max(max_curvature_, acc_(s).norm());
  }
  min_self_dist_ = std::numeric_limits<double>::max();
  int guard = n / 16;  // skip adjacent samples
  for (int i = 0; i < n; ++i)
    for (int j = i + guard; j < n && j - i <= n - guard; ++j)
      min_self_dist_ = std::min(min_self_dist_, (p[i] - p[j]).norm());
}

Vec3 KnotCurve::point(double s) const {
  s -= std::floor(s / length_) * length_;
  return pos_(s);
}
Vec3 KnotCurve::deriv(double s) const {
  s -= std::floor(s / length_) * length_;
  return vel_(s);
}
Vec3 KnotCurve::deriv2(double s) const {
  s -= std::floor(s / length_) * length_;
  return acc_(s);
}

double KnotCurve::injectivity_radius() const {
  double r1 = (max_curvature_ > 0) ? 0.5 / max_curvature_ : 1e30;
  return std::min(r1, 0.5 * min_self_dist_);
}

// --- FrameField ---

namespace {
// One step of the double-reflection RMF method.
Vec3 double_reflect(const Vec3& x0, const Vec3& t0, const Vec3& e0, const Vec3& x1,
                    const Vec3& t1) {
  Vec3 v1 = x1 - x0;
  double c1 = v1.squaredNorm();
  if (c1 < 1e-30) return e0;
  Vec3 eL = e0 - (2.0 / c1) * v1.dot(e0) * v1;
  Vec3 tL = t0 - (2.0 / c1) * v1.dot(t0) * v1;
  Vec3 v2 = t1 - tL;
  double c2 = v2.squaredNorm();
  if (c2 < 1e-30) return eL;
  return eL - (2.0 / c2) * v2.dot(eL) * v2;
}
}  // namespace

FrameField::FrameField(const KnotCurve& curve, int n_samples) : curve_(curve), n_(n_samples) {
  if (n_ < 16) throw std::invalid_argument("FrameField: n_samples >= 16 required");
  double l = curve.length();
  ds_ = l / n_;
  // tube of the requested scale must not self-intersect
  if (curve.injectivity_radius() <= 0)
    throw std::domain_error("FrameField: curve tube self-intersects");

  e1_raw_.resize(n_ + 1);
  Vec3 t0 = curve.deriv(0.0);
  // seed normal: any unit vector orthogonal to t0
  Vec3 seed = std::abs(t0.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  seed -= seed.dot(t0) * t0;
  e1_raw_[0] = seed.normalized();
  for (int i = 0; i < n_; ++i) {
    double s0 = i * ds_, s1 = (i + 1) * ds_;
    e1_raw_[i + 1] = double_reflect(curve.point(s0), curve.deriv(s0), e1_raw_[i], curve.point(s1),
                                    curve.deriv(s1));
    // re-orthonormalize against drift
    Vec3 t = curve.deriv(s1);
    e1_raw_[i + 1] -= e1_raw_[i + 1].dot(t) * t;
    e1_raw_[i + 1].normalize();
  }
  // closure mismatch angle of the raw RMF
  Vec3 tl = curve.deriv(0.0);
  Vec3 a = e1_raw_[n_], b = e1_raw_[0];
  double phi_err = std::atan2(tl.dot(a.cross(b)), a.dot(b));
  phi_err_ = phi_err;

  // distribute the closing rotation into the samples, then interpolate the
  // closed frame with a periodic spline (smooth evaluation)
  for (int i = 0; i <= n_; ++i) {
    double beta = phi_err * (i * ds_) / l;
    Vec3 t = curve.deriv(i * ds_);
    Vec3 f = t.cross(e1_raw_[i]);
    e1_raw_[i] = std::cos(beta) * e1_raw_[i] + std::sin(beta) * f;
  }
  build_spline();

  // Self-linking of the pushed-off longitude is cancelled so that the tube
  // angle extends to a closed 1-form on the knot complement.
  int m = 512;
  double rho0 = 0.25 * curve.injectivity_radius();
  std::vector<Vec3> ka(m), dka(m), kb(m), dkb(m);
  for (int i = 0; i < m; ++i) {
    double s = l * i / m;
    ka[i] = curve.point(s);
    dka[i] = curve.deriv(s);
  }
  auto self_link_of = [&]() {
    for (int i = 0; i < m; ++i) {
      double s = l * i / m;
      kb[i] = ka[i] + rho0 * e1(s);
      double h = l / (4.0 * m);
      dkb[i] = dka[i] + rho0 * (e1(s + h) - e1(s - h)) / (2 * h);
    }
    return linking_number(kb, dkb, ka, dka, l, l);
  };
  twist_total_ = phi_err;  // minimal closing twist
  self_link_ = self_link_of();
  if (self_link_ != 0) {
    twist_total_ = phi_err - kTwoPi * self_link_;
    if (self_link_of() != 0) {
      twist_total_ = phi_err + kTwoPi * self_link_;
      if (self_link_of() != 0) throw std::runtime_error("FrameField: self-link correction failed");
    }
  }

  // residual closure error of the corrected frame
  Vec3 c0 = e1(0.0), cl = e1(l * (1.0 - 1e-12));
  closure_err_ = (c0 - cl).norm();
}

void FrameField::build_spline() {
  // periodic natural cubic spline through the RMF samples, one per component;
  // cyclic tridiagonal (1,4,1) system via Sherman-Morrison
  int n = n_;
  e1_m_.assign(n, Vec3::Zero());
  for (int comp = 0; comp < 3; ++comp) {
    std::vector<double> y(n), rhs(n);
    for (int i = 0; i < n; ++i) y[i] = e1_raw_[i][comp];
    for (int i = 0; i < n; ++i)
      rhs[i] = 6.0 * (y[(i + 1) % n] - 2.0 * y[i] + y[(i + n - 1) % n]) / (ds_ * ds_);
    // solve (T + u v^T) m = rhs with T tridiagonal(1,4,1) minus corners
    auto solve_tri = [&](std::vector<double> d, std::vector<double> b) {
      // d = diagonal, off-diagonals 1; standard elimination
      std::vector<double> c(n, 1.0);
      for (int i = 1; i < n; ++i) {
        double m = 1.0 / d[i - 1];
        d[i] -= m;
        b[i] -= m * b[i - 1];
      }
      b[n - 1] /= d[n - 1];
      for (int i = n - 2; i >= 0; --i) b[i] = (b[i] - b[i + 1]) / d[i];
      return b;
    };
    double alpha = 1.0;
    std::vector<double> d(n, 4.0);
    d[0] -= alpha;
    d[n - 1] -= 1.0 / alpha;
    std::vector<double> u(n, 0.0);
    u[0] = alpha;
    u[n - 1] = 1.0;
    std::vector<double> sol_b = solve_tri(d, rhs);
    std::vector<double> sol_u = solve_tri(d, u);
    double fact = (sol_b[0] + sol_b[n - 1] / alpha) /
                  (1.0 + sol_u[0] + sol_u[n - 1] / alpha);
    for (int i = 0; i < n; ++i) e1_m_[i][comp] = sol_b[i] - fact * sol_u[i];
  }
}

Vec3 FrameField::e1_rmf(double s) const {
  double l = curve_.length();
  s -= std::floor(s / l) * l;
  int i = std::min(static_cast<int>(s / ds_), n_ - 1);
  double a = (s - i * ds_) / ds_;
  int ip = (i + 1) % n_;
  Vec3 e = (1 - a) * e1_raw_[i] + a * e1_raw_[ip] +
           (ds_ * ds_ / 6.0) * (((1 - a) * (1 - a) * (1 - a) - (1 - a)) * e1_m_[i] +
                                (a * a * a - a) * e1_m_[ip]);
  Vec3 t = curve_.deriv(s);
  e -= e.dot(t) * t;
  return e.normalized();
}

void FrameField::frame_with_derivs(double s, Vec3& e1v, Vec3& e2v, Vec3& de1, Vec3& de2) const {
  double l = curve_.length();
  double sw = s - std::floor(s / l) * l;
  int i = std::min(static_cast<int>(sw / ds_), n_ - 1);
  double a = (sw - i * ds_) / ds_;
  int ip = (i + 1) % n_;
  Vec3 S = (1 - a) * e1_raw_[i] + a * e1_raw_[ip] +
           (ds_ * ds_ / 6.0) * (((1 - a) * (1 - a) * (1 - a) - (1 - a)) * e1_m_[i] +
                                (a * a * a - a) * e1_m_[ip]);
  Vec3 dS = (e1_raw_[ip] - e1_raw_[i]) / ds_ +
            (ds_ / 6.0) * ((-3 * (1 - a) * (1 - a) + 1) * e1_m_[i] + (3 * a * a - 1) * e1_m_[ip]);
  Vec3 t = curve_.deriv(sw);
  Vec3 dt = curve_.deriv2(sw);
  // project to the normal plane, normalize, twist: all with exact derivatives
  Vec3 q = S - S.dot(t) * t;
  Vec3 dq = dS - dS.dot(t) * t - S.dot(dt) * t - S.dot(t) * dt;
  double qn = q.norm();
  Vec3 e = q / qn;
  Vec3 de = dq / qn - q * (q.dot(dq)) / (qn * qn * qn);
  double rate = (twist_total_ - phi_err_) / l;
  double beta = rate * sw;
  double cb = std::cos(beta), sb = std::sin(beta);
  Vec3 f = t.cross(e);
  Vec3 df = dt.cross(e) + t.cross(de);
  e1v = cb * e + sb * f;
  de1 = -sb * rate * e + cb * de + cb * rate * f + sb * df;
  e2v = t.cross(e1v);
  de2 = dt.cross(e1v) + t.cross(de1);
}

Vec3 FrameField::e1(double s) const {
  double l = curve_.length();
  double sw = s - std::floor(s / l) * l;
  // the spline samples already carry the closing rotation phi_err
  double beta = (twist_total_ - phi_err_) * sw / l;
  Vec3 e = e1_rmf(sw);
  Vec3 t = curve_.deriv(sw);
  Vec3 f = t.cross(e);
  return std::cos(beta) * e + std::sin(beta) * f;
}

Vec3 FrameField::e2(double s) const { return curve_.deriv(s).cross(e1(s)); }

Vec3 to_cartesian(const FrameField& frame, const TubularCoords& c) {
  return frame.curve().point(c.s) +
         c.rho * (std::cos(c.theta) * frame.e1(c.s) + std::sin(c.theta) * frame.e2(c.s));
}

TubularCoords from_cartesian(const FrameField& frame, const Vec3& x) {
  const KnotCurve& k = frame.curve();
  double l = k.length();
  // coarse scan then Newton on (x - K(s)) . K'(s) = 0
  const int m = 512;
  double best_s = 0, best_d = std::numeric_limits<double>::max();
  for (int i = 0; i < m; ++i) {
    double s = l * i / m;
    double d = (x - k.point(s)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best_s = s;
    }
  }
  double s = best_s;
  for (int it = 0; it < 60; ++it) {
    Vec3 d = x - k.point(s);
    double f = d.dot(k.deriv(s));
    double fp = -1.0 + d.dot(k.deriv2(s));
    double step = (std::abs(fp) > 1e-12) ? f / fp : 0.0;
    step = std::clamp(step, -0.25 * l / m, 0.25 * l / m);
    s -= step;
    if (std::abs(step) < 1e-15 * l) break;
  }
  s -= std::floor(s / l) * l;
  Vec3 d = x - k.point(s);
  double rho = d.norm();
  if (rho >= k.injectivity_radius())
    throw std::domain_error("outside tubular neighborhood");
  double theta = std::atan2(d.dot(frame.e2(s)), d.dot(frame.e1(s)));
  if (theta < 0) theta += kTwoPi;
  return {s, rho, theta};
}

double smoothstep5(double t) {
  if (t <= 0) return 0;
  if (t >= 1) return 1;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double chi_cutoff(double rho, double delta) { return 1.0 - smoothstep5(rho / delta - 1.0); }

Mat3 metric_at(const FrameField& frame, const Vec3& x, double delta) {
  TubularCoords c;
  try {
    c = from_cartesian(frame, x);
  } catch (const std::domain_error&) {
    return Mat3::Identity();
  }
  if (c.rho >= 2.0 * delta) return Mat3::Identity();
  double chi = chi_cutoff(c.rho, delta);
  if (chi <= 0.0) return Mat3::Identity();

  const KnotCurve& k = frame.curve();
  Vec3 e1v, e2v, de1, de2;
  frame.frame_with_derivs(c.s, e1v, e2v, de1, de2);
  double z1 = c.rho * std::cos(c.theta), z2 = c.rho * std::sin(c.theta);
  // coordinate frame of (s, z1, z2), orthonormal for the tube product metric
  Mat3 B;
  B.col(0) = k.deriv(c.s) + z1 * de1 + z2 * de2;
  B.col(1) = e1v;
  B.col(2) = e2v;
  Mat3 Binv = B.inverse();
  Mat3 g_tube = Binv.transpose() * Binv;
  return (1.0 - chi) * Mat3::Identity() + chi * g_tube;
}

MetricDeviationStats metric_deviation_stats(const FrameField& frame, double delta, int n_samples,
                                            unsigned seed) {
  if (n_samples < 100) throw std::invalid_argument("metric_deviation_stats: n_samples >= 100");
  MetricDeviationStats st;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const KnotCurve& k = frame.curve();
  double l = k.length();
  for (int i = 0; i < n_samples; ++i) {
    double s = l * uni(rng);
    double rho = 2.0 * delta * std::sqrt(uni(rng));  // includes outside-cutoff samples
    double th = kTwoPi * uni(rng);
    Vec3 x = to_cartesian(frame, {s, rho, th});
    Mat3 dev = metric_at(frame, x, delta) - Mat3::Identity();
    double nrm = dev.cwiseAbs().maxCoeff();
    if (rho > 1e-8) st.sup_ratio0 = std::max(st.sup_ratio0, nrm / rho);
    ++st.n_in_tube;
    // finite-difference gradient of the deviation
    double h = 1e-5;
    double gd = 0;
    for (int a = 0; a < 3; ++a) {
      Vec3 xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      Mat3 dg = (metric_at(frame, xp, delta) - metric_at(frame, xm, delta)) / (2 * h);
      gd = std::max(gd, dg.cwiseAbs().maxCoeff());
    }
    st.sup_dev1 = std::max(st.sup_dev1, gd);
  }
  return st;
}

int linking_number(const std::vector<Vec3>& a, const std::vector<Vec3>& da,
                   const std::vector<Vec3>& b, const std::vector<Vec3>& db, double period_a,
                   double period_b) {
  // Gauss double integral, midpoint rule
  double acc = 0;
  double ha = period_a / a.size(), hb = period_b / b.size();
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < b.size(); ++j) {
      Vec3 r = a[i] - b[j];
      double rn = r.norm();
      acc += da[i].cross(db[j]).dot(r) / (rn * rn * rn);
    }
  }
  acc *= ha * hb / (4.0 * std::numbers::pi);
  return static_cast<int>(std::lround(acc));
}

}  // namespace knotmono
