#include "knotmono/fiducial.hpp"

#include <cmath>

namespace knotmono {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double ln_cosh(double x) {
  double a = std::abs(x);
  return a + std::log1p(std::exp(-2 * a)) - std::log(2.0);
}
double ln_sinh(double x) {  // x > 0
  return x + std::log1p(-std::exp(-2 * x)) - std::log(2.0);
}

// r coth r - 1, stable at both ends
double rcoth_m1(double r) {
  if (r < 5e-2) {
    double r2 = r * r;
    return r2 / 3 - r2 * r2 / 45 + 2 * r2 * r2 * r2 / 945;
  }
  if (r > 20) return r - 1 + 2 * r * std::exp(-2 * r) / (1 - std::exp(-2 * r));
  return r / std::tanh(r) - 1;
}

// coth r - 1/r
double coth_m_inv(double r) { return rcoth_m1(r) / r; }

// 1/r^2 - 1/sinh^2 r
double inv_r2_m_inv_sinh2(double r) {
  if (r < 1e-1) {
    double r2 = r * r;
    return 1.0 / 3 - r2 / 15 + 2 * r2 * r2 / 189;
  }
  double s = std::sinh(std::min(r, 350.0));
  return 1.0 / (r * r) - 1.0 / (s * s);
}

// (-cosh r / r + 1/sinh r) = -(sinh 2r / 2 - r) / (r sinh r)
double minus_cosh_over_r_plus_inv_sinh(double r) {
  if (r < 1e-1) {
    double r2 = r * r;
    return -(2 * r / 3) * (1 + 7 * r2 / 30);  // series of the exact ratio
  }
  // = -(cosh r sinh r - r)/(r sinh r); for large r avoid overflow by logs
  if (r > 300) return -std::exp(r - std::log(2 * r));  // ~ -cosh r / r
  double s = std::sinh(r), c = std::cosh(r);
  return (-(c * s - r)) / (r * s);
}

struct MonoGeom {
  double r, t, aw;   // r, t = M w3, |w|
  cplx w;            // M(w1 + i w2)
  double lnU;        // log of (r+t) e^{-r} / |w|
  double q, p;       // tanh(lnU), 1/(2 cosh lnU)
  double D;          // |w| cosh(lnU) = (r cosh r - t sinh r)/1
  bool flagged = false;
};

MonoGeom mono_geom(double M, const Vec3& y) {
  MonoGeom g;
  g.w = M * cplx(y[0], y[1]);
  g.t = M * y[2];
  g.aw = std::abs(g.w);
  double wmin = 1e-6 * (1.0 + std::abs(g.t));
  if (g.aw < wmin) {
    g.flagged = true;
    g.w = (g.aw > 0) ? cplx(g.w * (wmin / g.aw)) : cplx(wmin, 0.0);
    g.aw = wmin;
  }
  g.r = std::hypot(g.aw, g.t);
  if (g.r < 1e-9) g.r = 1e-9;
  // r + t = |w|^2/(r - t) when t < 0 avoids cancellation
  double rpt = (g.t >= 0) ? g.r + g.t : g.aw * g.aw / (g.r - g.t);
  g.lnU = std::log(rpt) - g.r - std::log(g.aw);
  g.q = std::tanh(g.lnU);
  double ch = std::cosh(std::min(std::abs(g.lnU), 700.0));
  g.p = 0.5 / ch;
  g.D = g.aw * ch;
  return g;
}

Mat2 matW(const cplx& w) {
  Mat2 m;
  m << 0, w, -std::conj(w), 0;
  return m;
}
Mat2 matWp(const cplx& w) {
  Mat2 m;
  m << 0, w, std::conj(w), 0;
  return m;
}

}  // namespace

double higgs_profile(const Mat2& phi) {
  return std::sqrt(std::max(0.0, (-2.0 * (phi * phi).trace()).real()));
}

Mat2 monopole_v(const MonopolePose& pose, const Vec3& x) {
  MonoGeom g = mono_geom(pose.mass, x - pose.center);
  Mat2 v = 0.5 * g.q * sigma() + (g.p / g.aw) * matW(g.w);
  return pose.orientation * v * pose.orientation.adjoint();
}

ConfigValue eval_monopole(const MonopolePose& pose, const Vec3& x, int* flagged) {
  MonoGeom g = mono_geom(pose.mass, x - pose.center);
  if (g.flagged && flagged) ++*flagged;
  double M = pose.mass;
  double c = coth_m_inv(g.r);

  ConfigValue out;
  // Phi = M c [ (q/2) sigma + (p/|w|) W ]
  out.phi = M * c * (0.5 * g.q * sigma() + (g.p / g.aw) * matW(g.w));
  // A3 = i M c (p/|w|) W'
  Mat2 A3 = cplx(0, 1) * M * c * (g.p / g.aw) * matWp(g.w);
  // A1 + i A2 = (M p/|w|) [ f1 diag(-w, w) + f2 (t + r^2 - r t coth r)/r E21 ]
  // with f1 = (-cosh r / r + 1/sinh r); fuse p into the large factors
  double pf1;
  if (g.r > 30) {
    // p cosh r and p/sinh r via logs
    double pc = 0.5 * std::exp(ln_cosh(g.r) - ln_cosh(g.lnU));
    double ps = 0.5 * std::exp(-ln_cosh(g.lnU) - ln_sinh(g.r));
    pf1 = -pc / g.r + ps;
  } else {
    pf1 = g.p * minus_cosh_over_r_plus_inv_sinh(g.r);
  }
  // (t + r^2 - r t coth r)/r = (r^2 - t (r coth r - 1))/r
  double poly = (g.r * g.r - g.t * rcoth_m1(g.r)) / g.r;
  Mat2 diagw;
  diagw << -g.w, 0, 0, g.w;
  Mat2 E21;
  E21 << 0, 0, cplx(0, 2), 0;
  Mat2 A12 = (M / g.aw) * (pf1 * diagw + g.p * poly * E21);
  Mat2 A1 = 0.5 * (A12 - A12.adjoint());
  Mat2 A2 = (A12 + A12.adjoint()) / cplx(0, 2);

  const Mat2& u = pose.orientation;
  auto rot = [&](const Mat2& m) { return Mat2(u * m * u.adjoint()); };
  out.a[0] = rot(A1);
  out.a[1] = rot(A2);
  out.a[2] = rot(A3);
  out.phi = rot(out.phi);
  return out;
}

std::array<Mat2, 3> monopole_curvature_closed_form(const MonopolePose& pose, const Vec3& x,
                                                   int* flagged) {
  MonoGeom g = mono_geom(pose.mass, x - pose.center);
  if (g.flagged && flagged) ++*flagged;
  double M = pose.mass, M2 = M * M;
  double c = coth_m_inv(g.r);
  double rad = inv_r2_m_inv_sinh2(g.r);  // 1/r^2 - 1/sinh^2 r
  Mat2 v = 0.5 * g.q * sigma() + (g.p / g.aw) * matW(g.w);

  // common small factors, overflow-safe
  double inv_sinh = (g.r > 300) ? 2 * std::exp(-g.r) : 1.0 / std::sinh(g.r);
  double p_cosh = (g.r > 30) ? 0.5 * std::exp(ln_cosh(g.r) - ln_cosh(g.lnU))
                             : g.p * std::cosh(g.r);

  // F12 = M^2 (t/r) rad v - M^2 c (1/(r sinh r)) [ (q/2) W - p |w| sigma ]
  Mat2 F12 = M2 * (g.t / g.r) * rad * v -
             M2 * c * (inv_sinh / g.r) * (0.5 * g.q * matW(g.w) - g.p * g.aw * sigma());

  // F23 + i F31 = M^2 (w/r) rad v
  //   - c M^2 [ (w/(r|w|)) (p t sigma + p cosh r W)/sinh r + (1/sinh r) E21' ]
  // (the r(U+U^-1)/|w| piece collapses to E21'/sinh r with E21' = ((0,0),(1,0)))
  Mat2 lower;
  lower << 0, 0, 1, 0;
  cplx wdir = g.w / (g.r * g.aw);
  Mat2 term2 = (g.p * g.t * inv_sinh) * wdir * sigma() +
               (p_cosh * inv_sinh) * wdir * matW(g.w) + inv_sinh * lower;
  Mat2 F23i31 = M2 * (g.w / g.r) * rad * v - c * M2 * term2;

  const Mat2& u = pose.orientation;
  auto rot = [&](const Mat2& m) { return Mat2(u * m * u.adjoint()); };
  Mat2 F23 = 0.5 * (F23i31 - F23i31.adjoint());
  Mat2 F31 = (F23i31 + F23i31.adjoint()) / cplx(0, 2);
  return {rot(F23), rot(F31), rot(F12)};
}

ConfigValue hedgehog_equivalent(const MonopolePose& pose, const Vec3& x) {
  Vec3 y = x - pose.center;
  double M = pose.mass;
  double ay = y.norm();
  if (ay < 1e-12) ay = 1e-12;
  double r = M * ay;
  Vec3 wh = y / ay;
  double c = coth_m_inv(r);
  // 1/r - 1/sinh r, stable
  double f;
  if (r < 1e-1) {
    double r2 = r * r;
    f = (r / 6) * (1 - 7 * r2 / 60);
  } else if (r > 300) {
    f = 1.0 / r;
  } else {
    f = 1.0 / r - 1.0 / std::sinh(r);
  }
  const Mat2 sig[3] = {sigma1(), sigma2(), sigma3()};
  ConfigValue out;
  out.phi = Mat2::Zero();
  for (int a = 0; a < 3; ++a) out.phi += -(M / 2) * c * wh[a] * sig[a];
  static const int eps[3][3] = {{0, 3, -2}, {-3, 0, 1}, {2, -1, 0}};  // eps[a][i] -> j signed
  for (int i = 0; i < 3; ++i) {
    out.a[i] = Mat2::Zero();
    for (int a = 0; a < 3; ++a)
      for (int j = 0; j < 3; ++j) {
        // epsilon_{a i j}
        int e = (a == i || i == j || a == j)
                    ? 0
                    : (((i - a + 3) % 3 == 1 && (j - i + 3) % 3 == 1) ? 1 : -1);
        if (e) out.a[i] += (M / 2) * f * e * wh[j] * sig[a];
      }
  }
  const Mat2& u = pose.orientation;
  for (int i = 0; i < 3; ++i) out.a[i] = u * out.a[i] * u.adjoint();
  out.phi = u * out.phi * u.adjoint();
  return out;
}

// --- LinkingForm --------------------------------------------------------------

LinkingForm::LinkingForm(std::shared_ptr<const FrameField> frame, double delta, double r_far)
    : frame_(std::move(frame)), delta_(delta), r_far_(r_far) {
  const KnotCurve& c = frame_->curve();
  // matching shell [2.1 delta, shell_out delta]; wide to keep it unstiff
  shell_out_ = std::min(6.0, 0.85 * c.injectivity_radius() / delta_);
  if (shell_out_ < 2.6)
    throw std::invalid_argument("LinkingForm: delta too large for the matching shell");
  kpts_.resize(n_quad_);
  kvel_.resize(n_quad_);
  for (int i = 0; i < n_quad_; ++i) {
    double s = c.length() * i / n_quad_;
    kpts_[i] = c.point(s);
    kvel_[i] = c.deriv(s);
  }
  // center the shell potential so the d(chi)-correction stays small
  double rho_ref = 0.5 * (2.1 + shell_out_) * delta_;
  double acc = 0;
  for (int i = 0; i < 8; ++i) {
    TubularCoords tc{c.length() * i / 8.0, rho_ref, kTwoPi * ((i % 4) / 4.0)};
    acc += shell_potential(to_cartesian(*frame_, tc));
  }
  g_offset_ = acc / 8.0;
}

Vec3 LinkingForm::gauss_integral(const Vec3& x) const {
  // (1/2) oint K'(t) x (x - K(t)) / |x - K(t)|^3 dt, meridian circulation 2 pi
  Vec3 acc = Vec3::Zero();
  for (int i = 0; i < n_quad_; ++i) {
    Vec3 d = x - kpts_[i];
    double rn = d.norm();
    acc += kvel_[i].cross(d) / (rn * rn * rn);
  }
  return 0.5 * acc * frame_->curve().length() / n_quad_;
}

Vec3 LinkingForm::dtheta_chart(const Vec3& x) const {
  TubularCoords c = from_cartesian(*frame_, x);
  const KnotCurve& k = frame_->curve();
  Vec3 e1v, e2v, de1, de2;
  frame_->frame_with_derivs(c.s, e1v, e2v, de1, de2);
  double z1 = c.rho * std::cos(c.theta), z2 = c.rho * std::sin(c.theta);
  Mat3 J;
  J.col(0) = k.deriv(c.s) + z1 * de1 + z2 * de2;               // d x / d s
  J.col(1) = std::cos(c.theta) * e1v + std::sin(c.theta) * e2v;  // d x / d rho
  J.col(2) = c.rho * (-std::sin(c.theta) * e1v + std::cos(c.theta) * e2v);  // d x / d theta
  Mat3 Ji = J.inverse();
  return Ji.row(2);
}

double LinkingForm::shell_potential(const Vec3& x) const {
  // g(x) = int_path (omega_G - d theta), path through tube coordinates from
  // the anchor (s=0, rho_ref, theta=0); d theta integrates to theta exactly
  TubularCoords c = from_cartesian(*frame_, x);
  double rho_ref = 0.5 * (2.1 + shell_out_) * delta_;
  using PosTan = std::function<void(double, Vec3&, Vec3&)>;
  auto omega_line = [&](const PosTan& path, double t0, double t1, int n) {
    // composite Gauss-Legendre 4 on omega_G with analytic tangents
    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                 0.3478548451374538};
    double acc = 0;
    double ht = (t1 - t0) / n;
    for (int i = 0; i < n; ++i) {
      double a = t0 + i * ht;
      for (int q = 0; q < 4; ++q) {
        double t = a + 0.5 * ht * (1 + gx[q]);
        Vec3 p, dp;
        path(t, p, dp);
        acc += 0.5 * ht * gw[q] * gauss_integral(p).dot(dp);
      }
    }
    return acc;
  };
  const FrameField& fr = *frame_;
  const KnotCurve& k = fr.curve();
  double g = 0;
  // leg 1: s from 0 to c.s at (rho_ref, theta = 0)
  g += omega_line(
      [&](double t, Vec3& p, Vec3& dp) {
        Vec3 e1v, e2v, de1, de2;
        fr.frame_with_derivs(t, e1v, e2v, de1, de2);
        p = k.point(t) + rho_ref * e1v;
        dp = k.deriv(t) + rho_ref * de1;
      },
      0.0, c.s, 256);
  // leg 2: theta from 0 to c.theta at (c.s, rho_ref)
  {
    Vec3 e1v = fr.e1(c.s), e2v = fr.e2(c.s);
    Vec3 base = k.point(c.s);
    g += omega_line(
        [&](double t, Vec3& p, Vec3& dp) {
          p = base + rho_ref * (std::cos(t) * e1v + std::sin(t) * e2v);
          dp = rho_ref * (-std::sin(t) * e1v + std::cos(t) * e2v);
        },
        0.0, c.theta, 128);
    g -= c.theta;  // the d theta part of the whole path
    // leg 3: rho from rho_ref to c.rho
    Vec3 dir = std::cos(c.theta) * e1v + std::sin(c.theta) * e2v;
    g += omega_line(
        [&](double t, Vec3& p, Vec3& dp) {
          p = base + t * dir;
          dp = dir;
        },
        rho_ref, c.rho, 64);
  }
  return g;
}

double LinkingForm::far_potential(const Vec3& x) const {
  // f(x) = -int_0^inf omega_G(x + tau rhat) . rhat d tau  (so omega_G = d f there)
  Vec3 rhat = x.normalized();
  double acc = 0;
  // substitute tau = |x| (1/u - 1), u in (0,1]
  static const double gx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                               0.7966664774136267,  0.9602898564975363};
  static const double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                               0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                               0.2223810344533745, 0.1012285362903763};
  double R = x.norm();
  int ncell = 16;
  for (int i = 0; i < ncell; ++i) {
    double u0 = (double)i / ncell, u1 = (double)(i + 1) / ncell;
    for (int q = 0; q < 8; ++q) {
      double u = 0.5 * (u0 + u1) + 0.5 * (u1 - u0) * gx[q];
      if (u < 1e-9) continue;
      double tau = R * (1.0 / u - 1.0);
      double jac = R / (u * u);
      acc += 0.5 * (u1 - u0) * gw[q] * gauss_integral(x + tau * rhat).dot(rhat) * jac;
    }
  }
  return -acc;
}

Vec3 LinkingForm::eval(const Vec3& x) const {
  double rho = std::numeric_limits<double>::infinity();
  TubularCoords c;
  bool in_tube = true;
  try {
    c = from_cartesian(*frame_, x);
    rho = c.rho;
  } catch (const std::domain_error&) {
    in_tube = false;
  }
  if (rho < 1e-12) throw std::domain_error("linking form singular on the knot");
  double shell_w = (shell_out_ - 2.1) * delta_;
  Vec3 w;
  if (in_tube && rho <= 2.1 * delta_) {
    w = dtheta_chart(x);
  } else if (in_tube && rho < shell_out_ * delta_) {
    // omega_G - d(chi g): chi = 1 - S((rho - 2.1 delta)/shell width)
    double tloc = (rho - 2.1 * delta_) / shell_w;
    double chi = 1.0 - smoothstep5(tloc);
    double dchi = 0.0;
    {
      double t = std::clamp(tloc, 0.0, 1.0);
      dchi = -(30 * t * t * (t - 1) * (t - 1)) / shell_w;
    }
    Vec3 wg = gauss_integral(x);
    Vec3 dg = wg - dtheta_chart(x);
    double g = shell_potential(x) - g_offset_;
    // d rho in Cartesian components is the unit radial covector of the tube
    Vec3 drho = std::cos(c.theta) * frame_->e1(c.s) + std::sin(c.theta) * frame_->e2(c.s);
    w = wg - chi * dg - g * dchi * drho;
  } else {
    w = gauss_integral(x);
  }
  if (r_far_ > 0) {
    double r = x.norm();
    if (r >= 2.0 * r_far_) return Vec3::Zero();
    if (r > r_far_) {
      double tloc = (r - r_far_) / r_far_;
      double chi = smoothstep5(tloc);
      double dchi = (30 * tloc * tloc * (tloc - 1) * (tloc - 1)) / r_far_;
      double f = far_potential(x);
      w = (1.0 - chi) * w - f * dchi * x.normalized();
    }
  }
  return w;
}

double LinkingForm::circulation(const std::function<Vec3(double)>& loop, int n) const {
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    double t = (i + 0.5) / n;
    double h = 0.25 / n;
    Vec3 dp = (-loop(t + 2 * h) + 8.0 * loop(t + h) - 8.0 * loop(t - h) + loop(t - 2 * h)) /
              (12 * h);
    acc += eval(loop(t)).dot(dp) / n;
  }
  return acc;
}

// --- model fiducial -----------------------------------------------------------

ConfigFn model_fiducial_fn(const FiducialParams& p, std::shared_ptr<const LinkingForm> omega) {
  return [p, omega](const Vec3& x) {
    ConfigValue v;
    Vec3 w = omega->eval(x);
    for (int k = 0; k < 3; ++k) v.a[k] = p.gamma * w[k] * sigma();
    v.phi = p.M * sigma();
    return v;
  };
}

ConfigField model_fiducial_field(const FiducialParams& p,
                                 std::shared_ptr<const LinkingForm> omega,
                                 std::shared_ptr<const TubeGrid> tube,
                                 std::shared_ptr<const BoxGrid> box) {
  ConfigField f = ConfigField::zeros(tube, box);
  if (tube) {
    if (tube->rho_max > 2.1 * omega->delta() * (1 + 1e-12))
      throw std::invalid_argument("model_fiducial_field: tube grid exceeds the d-theta region");
    for (int i = 0; i < tube->n_s; ++i)
      for (int j = 0; j < tube->n_theta; ++j)
        for (int k = 0; k < tube->n_rho; ++k) {
          double* d = f.tube_at(tube->node(i, j, k));
          d[comp_index(1, 0)] = p.gamma / tube->rho[k];  // a_theta = gamma sigma / rho
          d[comp_index(3, 0)] = p.M;                      // phi = M sigma
        }
  }
  if (box) {
    ConfigFn fn = model_fiducial_fn(p, omega);
    ConfigField fb = sample_config(nullptr, box, fn);
    f.box_data = std::move(fb.box_data);
  }
  return f;
}

}  // namespace knotmono
