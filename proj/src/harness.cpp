#include "knotmono/harness.hpp"

#include <cmath>
#include <random>

#include "knotmono/operators.hpp"

namespace knotmono {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// smooth compact bump on [0,1): (1-t^2)^4
double bump(double t) {
  if (t >= 1.0) return 0.0;
  double s = 1 - t * t;
  return s * s * s * s;
}
double dbump(double t) {
  if (t >= 1.0) return 0.0;
  double s = 1 - t * t;
  return -8.0 * t * s * s * s;
}

// exterior analytic test field: sum of su(2)-valued C^3 bumps, with gradient
struct ExtBumps {
  struct Piece {
    Vec3 center;
    double radius;
    Vec3 coeff[4];  // su2 coefficients per slot
  };
  std::vector<Piece> pieces;

  void value(const Vec3& x, double out[kComps]) const {
    for (int c = 0; c < kComps; ++c) out[c] = 0;
    for (const auto& p : pieces) {
      double t = (x - p.center).norm() / p.radius;
      double b = bump(t);
      for (int slot = 0; slot < 4; ++slot)
        for (int c = 0; c < 3; ++c) out[comp_index(slot, c)] += b * p.coeff[slot][c];
    }
  }
  void grad(const Vec3& x, double out[3][kComps]) const {
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < kComps; ++c) out[a][c] = 0;
    for (const auto& p : pieces) {
      Vec3 d = x - p.center;
      double r = d.norm();
      if (r < 1e-14) continue;
      double t = r / p.radius;
      double db = dbump(t) / p.radius;
      Vec3 dir = d / r;
      for (int a = 0; a < 3; ++a)
        for (int slot = 0; slot < 4; ++slot)
          for (int c = 0; c < 3; ++c)
            out[a][comp_index(slot, c)] += db * dir[a] * p.coeff[slot][c];
    }
  }
};

ExtBumps make_bumps(const HarnessContext& cx, unsigned seed, int n = 3) {
  std::mt19937_64 rng(seed * 7919u + 11u);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> uni(0, 1);
  ExtBumps b;
  // centered away from the knot tube, inside the box
  for (int i = 0; i < n; ++i) {
    ExtBumps::Piece p;
    double ang = kTwoPi * uni(rng);
    double rad = 1.6 + 0.6 * uni(rng);
    p.center = Vec3(rad * std::cos(ang), rad * std::sin(ang), 1.2 * (uni(rng) - 0.5));
    p.radius = 0.35 + 0.3 * uni(rng);
    for (int slot = 0; slot < 4; ++slot) p.coeff[slot] = Vec3(g(rng), g(rng), g(rng));
    b.pieces.push_back(p);
  }
  return b;
}

}  // namespace

const char* ineq_name(IneqId id) {
  switch (id) {
    case IneqId::BOUNDARY_DECAY: return "BOUNDARY_DECAY";
    case IneqId::ETA_PAIR: return "ETA_PAIR";
    case IneqId::LOCAL_QUAD: return "LOCAL_QUAD";
    case IneqId::TRACE_EXT: return "TRACE_EXT";
    case IneqId::TRACE_SCALED: return "TRACE_SCALED";
    case IneqId::RADIAL_HARDY_EXT: return "RADIAL_HARDY_EXT";
    case IneqId::WEIGHTED_SOBOLEV: return "WEIGHTED_SOBOLEV";
    case IneqId::SOBOLEV_EXT: return "SOBOLEV_EXT";
    case IneqId::HARDY_BALL: return "HARDY_BALL";
    case IneqId::PERP_BOUND: return "PERP_BOUND";
    case IneqId::EPS1_BOUNDARY: return "EPS1_BOUNDARY";
  }
  return "?";
}

bool ineq_asserted(IneqId id) {
  switch (id) {
    case IneqId::ETA_PAIR:
    case IneqId::RADIAL_HARDY_EXT:
    case IneqId::WEIGHTED_SOBOLEV:
    case IneqId::HARDY_BALL:
    case IneqId::PERP_BOUND:
    case IneqId::BOUNDARY_DECAY:
      return true;
    default:
      return false;
  }
}

HarnessContext HarnessContext::make(double gamma, double M, int n_s, int n_theta, int n_rho,
                                    int n_box) {
  HarnessContext cx;
  auto curve = std::make_shared<KnotCurve>(KnotCurve::circle(1.0));
  cx.frame = std::make_shared<FrameField>(*curve, 512);
  cx.fp = FiducialParams{gamma, M, 0.06};
  cx.eps = cx.fp.delta;
  cx.omega = std::make_shared<LinkingForm>(cx.frame, cx.fp.delta);
  cx.tube = make_tube_grid(cx.frame, n_s, n_theta, n_rho, cx.eps / 64.0, cx.eps);
  cx.box = make_box_grid(cx.frame, Vec3(-3, -3, -3), Vec3(3, 3, 3), n_box, 0.8 * cx.eps);
  cx.fiducial = model_fiducial_field(cx.fp, cx.omega, cx.tube, cx.box);
  return cx;
}

ConfigField random_test_field(const HarnessContext& cx, const TestFieldSpec& spec) {
  ConfigField f = ConfigField::zeros(cx.tube, cx.box);
  std::mt19937_64 rng(spec.seed * 1000003u + 17u);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> mdist(-4, 4), jdist(-1, 1), wdist(-2, 2), pdist(0, 3);

  if (spec.support != 1 && cx.tube) {
    const TubeGrid& t = *cx.tube;
    double powers[4] = {0.0, 2 * cx.fp.gamma, 1 - 2 * cx.fp.gamma, 1.0};
    ModeGrid mg;
    mg.n = t.n_rho;
    mg.eps = t.rho_max;
    mg.rho_min = t.rho_min;
    mg.rho = t.rho;
    mg.sbp_u = t.sbp_u;
    mg.w = t.w_rho;
    for (int q = 0; q < spec.n_modes; ++q) {
      ModePair p = ModePair::make(mg, mdist(rng), wdist(rng), t.length, jdist(rng), cx.fp.gamma,
                                  cx.fp.M);
      double pu = powers[pdist(rng)], pv = powers[pdist(rng)];
      double cur[4] = {g(rng), g(rng), g(rng), g(rng)};
      double cvi[4] = {g(rng), g(rng), g(rng), g(rng)};
      for (int k = 0; k < mg.n; ++k) {
        double x = mg.rho[k] / mg.eps;
        p.u[k] = std::pow(x, pu) * cplx(cur[0] + cur[1] * x, 0.3 * cur[2] * x * x);
        p.v[k] = std::pow(x, pv) * cplx(cvi[0] + cvi[1] * x, 0.3 * cvi[2] * x * x);
      }
      ConfigField re, im;
      assemble_mode_field(p, cx.tube, re, im);
      f += re;
    }
  }
  if (spec.support != 0 && cx.box) {
    ExtBumps b = make_bumps(cx, spec.seed);
    const BoxGrid& bx = *cx.box;
    double val[kComps];
    for (int n = 0; n < bx.n_nodes(); ++n) {
      if (!bx.active[n]) continue;
      int i = n / (bx.n[1] * bx.n[2]);
      int j = (n / bx.n[2]) % bx.n[1];
      int k = n % bx.n[2];
      b.value(bx.point(i, j, k), val);
      double* d = f.box_at(n);
      for (int c = 0; c < kComps; ++c) d[c] += val[c];
    }
  }
  return f;
}

namespace {

// bare (unweighted d rho d theta d s) integrals on the tube block
struct TubeBareIntegrals {
  double psi2 = 0;          // int |psi|^2 d rho d theta d s
  double rho2_dpsi2 = 0;    // int rho^2 |d_rho psi|^2
  double boundary_eps = 0;  // eps * oint |psi(eps)|^2 d theta d s
};

TubeBareIntegrals tube_bare(const HarnessContext& cx, const ConfigField& f) {
  const TubeGrid& t = *cx.tube;
  Eigen::VectorXd dr, dt, ds;
  detail::tube_block_derivs(t, f.tube_data, Scheme::Spectral, dr, dt, ds);
  TubeBareIntegrals out;
  for (int n = 0; n < t.n_nodes(); ++n) {
    int k = n % t.n_rho;
    double Hk = t.w_rho[k];  // d rho weight
    const double* p = f.tube_at(n);
    const double* pr = dr.data() + (size_t)n * kComps;
    for (int c = 0; c < kComps; ++c) {
      out.psi2 += t.w_s * t.w_theta * Hk * p[c] * p[c];
      out.rho2_dpsi2 += t.w_s * t.w_theta * Hk * t.rho[k] * t.rho[k] * pr[c] * pr[c];
    }
  }
  out.boundary_eps = boundary_norm2(f, t.rho_max);  // = eps * oint |psi|^2 dtheta ds
  return out;
}

}  // namespace

MarginReport check_inequality(IneqId id, const HarnessContext& cx, unsigned seed, double eta) {
  MarginReport rep;
  rep.id = id;
  rep.asserted = ineq_asserted(id);

  switch (id) {
    case IneqId::BOUNDARY_DECAY: {
      TestFieldSpec sp;
      sp.seed = seed;
      sp.support = 0;
      ConfigField f = random_test_field(cx, sp);
      double prev = 0, first = 0, last = 0;
      bool mono = true;
      for (int i = 0; i <= 4; ++i) {
        double rho = cx.eps * std::pow(2.0, -i - 1);
        double b = boundary_norm2(f, rho);
        if (i == 0) first = b;
        if (i > 0 && b > prev * (1 + 1e-9)) mono = false;
        prev = b;
        last = b;
      }
      rep.lhs = last;
      rep.rhs = first;
      rep.margin = mono ? first - last : -(last);
      rep.scale = first + last;
      rep.empirical_c = (first > 0 && last > 0) ? std::log2(first / last) / 4.0 : 0.0;
      break;
    }
    case IneqId::ETA_PAIR: {
      TestFieldSpec sp;
      sp.seed = seed;
      sp.support = 0;
      ConfigField f = random_test_field(cx, sp);
      TubeBareIntegrals q = tube_bare(cx, f);
      // eta(1-eta) int |psi|^2 <= int rho^2 |d_rho psi|^2 + eta * eps oint
      double m1 = (q.rho2_dpsi2 + eta * q.boundary_eps) - eta * (1 - eta) * q.psi2;
      // eta * eps oint <= int rho^2 |d_rho psi|^2 + eta(1+eta) int |psi|^2
      double m2 = (q.rho2_dpsi2 + eta * (1 + eta) * q.psi2) - eta * q.boundary_eps;
      rep.margin = std::min(m1, m2);
      rep.lhs = eta * (1 - eta) * q.psi2;
      rep.rhs = q.rho2_dpsi2 + eta * q.boundary_eps;
      rep.scale = std::abs(q.psi2) + std::abs(q.rho2_dpsi2) + std::abs(q.boundary_eps);
      break;
    }
    case IneqId::LOCAL_QUAD: {
      TestFieldSpec s1, s2;
      s1.seed = seed;
      s2.seed = seed + 100000;
      s1.support = s2.support = 0;
      ConfigField f1 = random_test_field(cx, s1);
      ConfigField f2 = random_test_field(cx, s2);
      ConfigField Q = quadratic(f1, f2);
      double lhs = 0;
      const TubeGrid& t = *cx.tube;
      for (int n = 0; n < t.n_nodes(); ++n) {
        int k = n % t.n_rho;
        lhs += t.w_s * t.w_theta * t.w_rho[k] * t.rho[k] * t.rho[k] * node_norm2(Q.tube_at(n));
      }
      // pointwise |Q| <= C_pw |psi1| |psi2|
      double cpw = 0;
      for (int n = 0; n < t.n_nodes(); ++n) {
        double q2 = node_norm2(Q.tube_at(n));
        double a2 = node_norm2(f1.tube_at(n)), b2 = node_norm2(f2.tube_at(n));
        if (a2 * b2 > 1e-24) cpw = std::max(cpw, std::sqrt(q2 / (a2 * b2)));
      }
      double g1 = norm2_HtildeN(f1, cx.eps) + boundary_norm2(f1, cx.eps, 1);
      double g2 = norm2_HtildeN(f2, cx.eps) + boundary_norm2(f2, cx.eps, 1);
      rep.lhs = lhs;
      rep.rhs = g1 * g2;
      rep.empirical_c = (g1 * g2 > 0) ? lhs / (cpw * g1 * g2 + 1e-300) : 0.0;  // c1 estimate
      rep.margin = rep.rhs - rep.lhs;  // informational
      rep.scale = rep.lhs + rep.rhs;
      break;
    }
    case IneqId::TRACE_EXT:
    case IneqId::TRACE_SCALED: {
      TestFieldSpec sp;
      sp.seed = seed;
      sp.support = 1;
      ConfigField f = random_test_field(cx, sp);
      // boundary term at eps via a thin tube ring + exterior integrals on the box
      double bnd = boundary_norm2(f, cx.eps);  // f vanishes near the tube: ~0
      const BoxGrid& b = *cx.box;
      double h3 = b.h * b.h * b.h;
      double l2 = 0;
      for (int n = 0; n < b.n_nodes(); ++n)
        if (b.active[n]) l2 += h3 * node_norm2(f.box_at(n));
      double grad2 = 0;
      Eigen::VectorXd d[3];
      detail::box_block_derivs(b, f.box_data, d);
      for (int n = 0; n < b.n_nodes(); ++n) {
        if (!b.active[n]) continue;
        const double* p = f.box_at(n);
        const double* B = cx.fiducial.box_at(n);
        for (int slot = 0; slot < 4; ++slot) {
          const double* x = p + comp_index(slot, 0);
          for (int dir = 0; dir < 3; ++dir) {
            const double* dd = d[dir].data() + (size_t)n * kComps;
            double cov[3] = {dd[comp_index(slot, 0)], dd[comp_index(slot, 1)],
                             dd[comp_index(slot, 2)]};
            const double* A = B + comp_index(dir, 0);
            cov[0] += 2 * (A[1] * x[2] - A[2] * x[1]);
            cov[1] += 2 * (A[2] * x[0] - A[0] * x[2]);
            cov[2] += 2 * (A[0] * x[1] - A[1] * x[0]);
            grad2 += h3 * (cov[0] * cov[0] + cov[1] * cov[1] + cov[2] * cov[2]);
          }
        }
      }
      if (id == IneqId::TRACE_EXT) {
        rep.lhs = bnd + l2;
        rep.rhs = grad2;
        rep.empirical_c = (grad2 > 0) ? rep.lhs / grad2 : 0.0;
        rep.margin = rep.rhs * std::max(1.0, rep.empirical_c) - rep.lhs;
        rep.scale = rep.lhs + rep.rhs;
      } else {
        // eps^{eta-1} bnd <= (C delta^{eta-1} + delta^eta / eta) grad2
        double delta = cx.fp.delta;
        double C = 1.0;  // from the trace inequality at delta, empirical below
        double bnd_delta = boundary_norm2(f, delta);
        if (grad2 > 0 && bnd_delta > 0) C = bnd_delta / grad2;
        rep.lhs = std::pow(cx.eps, eta - 1.0) * bnd;
        rep.rhs = (C * std::pow(delta, eta - 1.0) + std::pow(delta, eta) / eta) * grad2;
        rep.empirical_c = C;
        rep.margin = rep.rhs - rep.lhs;
        rep.scale = rep.lhs + rep.rhs;
      }
      break;
    }
    case IneqId::RADIAL_HARDY_EXT: {
      // analytic bump fields outside B_R, Gauss-Legendre radial x product
      // angular quadrature; same nodes on both sides
      double R = 1.9;
      double Rout = 4.5;
      ExtBumps bumps = make_bumps(cx, seed);
      static const double gx[8] = {-0.9602898564975363, -0.7966664774136267,
                                   -0.5255324099163290, -0.1834346424956498,
                                   0.1834346424956498,  0.5255324099163290,
                                   0.7966664774136267,  0.9602898564975363};
      static const double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                   0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                   0.2223810344533745, 0.1012285362903763};
      int nrad = 12, nmu = 12, nphi = 16;
      double grad2 = 0, inv_r2 = 0, shell = 0;
      double val[kComps], grad_ws[3][kComps];
      for (int imu = 0; imu < nmu; ++imu)
        for (int iphi = 0; iphi < nphi; ++iphi) {
          double mu = -1.0 + 2.0 * (imu + 0.5) / nmu;
          double phi = kTwoPi * (iphi + 0.5) / nphi;
          double wang = (2.0 / nmu) * (kTwoPi / nphi);
          Vec3 dir(std::sqrt(1 - mu * mu) * std::cos(phi), std::sqrt(1 - mu * mu) * std::sin(phi),
                   mu);
          // boundary term: (1/R) |psi(R dir)|^2 R^2
          bumps.value(R * dir, val);
          double v2 = 0;
          for (int c = 0; c < kComps; ++c) v2 += val[c] * val[c];
          shell += wang * R * v2;
          for (int icell = 0; icell < nrad; ++icell) {
            double a = R + (Rout - R) * icell / nrad, bcell = R + (Rout - R) * (icell + 1) / nrad;
            for (int q = 0; q < 8; ++q) {
              double r = 0.5 * (a + bcell) + 0.5 * (bcell - a) * gx[q];
              double wr = 0.5 * (bcell - a) * gw[q];
              Vec3 x = r * dir;
              bumps.value(x, val);
              bumps.grad(x, grad_ws);
              double p2 = 0, g2 = 0;
              for (int c = 0; c < kComps; ++c) {
                p2 += val[c] * val[c];
                for (int axis = 0; axis < 3; ++axis) g2 += grad_ws[axis][c] * grad_ws[axis][c];
              }
              // covariant part with the fiducial connection (A ~ gamma sigma omega)
              Vec3 w = cx.omega->eval(x);
              for (int slot = 0; slot < 4; ++slot) {
                double x1 = val[comp_index(slot, 0)], x2v = val[comp_index(slot, 1)],
                       x3 = val[comp_index(slot, 2)];
                for (int axis = 0; axis < 3; ++axis) {
                  double br[3] = {0, -2 * x3, 2 * x2v};
                  double extra = cx.fp.gamma * w[axis];
                  for (int c = 0; c < 3; ++c) {
                    double covc = grad_ws[axis][comp_index(slot, c)] + extra * br[c];
                    g2 += covc * covc - grad_ws[axis][comp_index(slot, c)] *
                                            grad_ws[axis][comp_index(slot, c)];
                  }
                }
              }
              grad2 += wang * wr * r * r * g2;
              inv_r2 += wang * wr * p2;
            }
          }
        }
      rep.lhs = shell + 0.5 * inv_r2;
      rep.rhs = 2.0 * grad2;
      rep.margin = rep.rhs - rep.lhs;
      rep.scale = rep.lhs + rep.rhs;
      rep.empirical_c = (grad2 > 0) ? rep.lhs / (2.0 * grad2) : 0;
      break;
    }
    case IneqId::WEIGHTED_SOBOLEV: {
      TestFieldSpec sp;
      sp.seed = seed;
      sp.support = 0;
      ConfigField f = random_test_field(cx, sp);
      const TubeGrid& t = *cx.tube;
      Eigen::VectorXd dr, dt, ds;
      detail::tube_block_derivs(t, f.tube_data, Scheme::Spectral, dr, dt, ds);
      double six = 0, rhs = 0;
      for (int n = 0; n < t.n_nodes(); ++n) {
        int k = n % t.n_rho;
        double rho = t.rho[k];
        double wb = t.w_s * t.w_theta * t.w_rho[k];
        const double* p = f.tube_at(n);
        double p2 = node_norm2(p);
        six += wb * rho * rho * rho * rho * p2 * p2 * p2;  // rho^3 |psi|^6 d3x
        double grad2 = 0;
        const double* pr = dr.data() + (size_t)n * kComps;
        const double* pt = dt.data() + (size_t)n * kComps;
        const double* ps = ds.data() + (size_t)n * kComps;
        for (int slot = 0; slot < 4; ++slot)
          for (int c = 0; c < 3; ++c) {
            int i = comp_index(slot, c);
            double te = (slot == 0)   ? pt[i] - p[comp_index(1, c)]
                        : (slot == 1) ? pt[i] + p[comp_index(0, c)]
                                      : pt[i];
            grad2 += rho * rho * (pr[i] * pr[i] + ps[i] * ps[i]) + te * te;
          }
        rhs += wb * (grad2 + p2);  // rho |grad psi|^2 + |psi|^2 / rho, times rho
      }
      double l = t.length;
      double A = 2.0 * std::pow(16.0 + 1.0 / (l * l), 0.25) *
                 std::pow(16.0 + 1.0 / (kTwoPi * kTwoPi), 0.25);
      double c0 = std::pow(A, 4.0 / 3.0);
      rep.lhs = std::cbrt(six);
      rep.rhs = c0 * rhs;
      rep.margin = rep.rhs - rep.lhs;
      rep.scale = rep.lhs + rep.rhs;
      rep.empirical_c = (rhs > 0) ? rep.lhs / rhs : 0;
      break;
    }
    case IneqId::SOBOLEV_EXT: {
      TestFieldSpec sp;
      sp.seed = seed;
      sp.support = 1;
      ConfigField f = random_test_field(cx, sp);
      const BoxGrid& b = *cx.box;
      double h3 = b.h * b.h * b.h;
      Eigen::VectorXd d[3];
      detail::box_block_derivs(b, f.box_data, d);
      double six = 0, grad2 = 0;
      for (int n = 0; n < b.n_nodes(); ++n) {
        if (!b.active[n]) continue;
        double p2 = node_norm2(f.box_at(n));
        six += h3 * p2 * p2 * p2;
        for (int dir = 0; dir < 3; ++dir) {
          const double* dd = d[dir].data() + (size_t)n * kComps;
          for (int c = 0; c < kComps; ++c) grad2 += h3 * dd[c] * dd[c];
        }
      }
      rep.lhs = six;
      rep.rhs = grad2 * grad2 * grad2;
      rep.empirical_c = (rep.rhs > 0) ? six / rep.rhs : 0;
      rep.margin = rep.rhs * std::max(1.0, rep.empirical_c) - rep.lhs;
      rep.scale = rep.lhs + rep.rhs;
      break;
    }
    case IneqId::HARDY_BALL: {
      // scalar bump on a ball, explicit C_eta from the cutoff construction
      double R = 1.0;
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> g;
      double a0 = g(rng), a1 = g(rng), a2 = g(rng);
      auto fval = [&](double r, double mu) {
        return a0 + a1 * (r / R) * mu + a2 * (1 - r * r / (R * R));
      };
      auto fgrad2 = [&](double r, double mu) {
        // |grad f|^2 = (df/dr)^2 + (1/r^2)(1-mu^2)(df/dmu)^2
        double dfr = a1 * mu / R - 2 * a2 * r / (R * R);
        double dfm = a1 * r / R;
        return dfr * dfr + (1 - mu * mu) * dfm * dfm / (r * r + 1e-300);
      };
      int nr = 160, nmu = 24;
      double lhs = 0, l2 = 0, grad2 = 0;
      for (int ir = 0; ir < nr; ++ir) {
        double r = R * (ir + 0.5) / nr;
        double wr = R / nr;
        for (int imu = 0; imu < nmu; ++imu) {
          double mu = -1 + 2.0 * (imu + 0.5) / nmu;
          double wmu = 2.0 / nmu;
          double w = kTwoPi * wr * wmu * r * r;
          double fv = fval(r, mu);
          if (r <= eta * R) lhs += w * fv * fv / r;
          l2 += w * fv * fv;
          grad2 += w * fgrad2(r, mu);
        }
      }
      double sup_dS = 15.0 / 8.0;  // quintic smoothstep
      double c_eta = std::max(2.0, 2.0 * sup_dS * sup_dS / ((1 - eta) * (1 - eta)));
      rep.lhs = lhs;
      rep.rhs = c_eta * (l2 / R + R * grad2);
      rep.margin = rep.rhs - rep.lhs;
      rep.scale = rep.lhs + rep.rhs;
      rep.empirical_c = (l2 / R + R * grad2 > 0) ? lhs / (l2 / R + R * grad2) : 0;
      break;
    }
    case IneqId::PERP_BOUND: {
      TestFieldSpec sp;
      sp.seed = seed;
      sp.support = 2;
      ConfigField f = random_test_field(cx, sp);
      double g2 = cx.fp.gamma * cx.fp.gamma;
      double q2 = (1 - 2 * cx.fp.gamma) * (1 - 2 * cx.fp.gamma);
      double cmax = std::max({cx.eps / (4 * g2), 2 * cx.eps / q2,
                              1.0 / (4 * cx.fp.M * cx.fp.M * cx.eps)});
      ConfigField perp;
      split_field(f, nullptr, &perp);
      // plain d^3x integral of |psi_perp|^2 over both blocks
      double lhs = 0;
      const TubeGrid& t = *cx.tube;
      for (int n = 0; n < t.n_nodes(); ++n) {
        int k = n % t.n_rho;
        lhs += t.w_s * t.w_theta * t.w_rho[k] * t.rho[k] * node_norm2(perp.tube_at(n));
      }
      const BoxGrid& b = *cx.box;
      double h3 = b.h * b.h * b.h;
      for (int n = 0; n < b.n_nodes(); ++n)
        if (b.active[n]) lhs += h3 * node_norm2(perp.box_at(n));
      double hn = norm2_Heps(f, cx.eps, cx.fiducial);
      rep.lhs = lhs;
      rep.rhs = cmax * hn;
      rep.margin = rep.rhs - rep.lhs;
      rep.scale = rep.lhs + rep.rhs;
      rep.empirical_c = (hn > 0) ? lhs / hn : 0;
      break;
    }
    case IneqId::EPS1_BOUNDARY: {
      TestFieldSpec sp;
      sp.seed = seed;
      sp.support = 2;
      ConfigField f = random_test_field(cx, sp);
      ConfigField perp;
      split_field(f, nullptr, &perp);
      double cmin = std::min(2 * cx.fp.gamma - std::pow(cx.fp.gamma, 3),
                             (1 - 2 * cx.fp.gamma) - std::pow(1 - 2 * cx.fp.gamma, 3));
      double bnd = boundary_norm2(perp, cx.eps);
      // exterior gradient of the perp part with the fiducial connection
      const BoxGrid& b = *cx.box;
      Eigen::VectorXd d[3];
      detail::box_block_derivs(b, perp.box_data, d);
      double grad2 = 0;
      double h3 = b.h * b.h * b.h;
      for (int n = 0; n < b.n_nodes(); ++n) {
        if (!b.active[n]) continue;
        const double* p = perp.box_at(n);
        const double* B = cx.fiducial.box_at(n);
        for (int slot = 0; slot < 4; ++slot) {
          const double* x = p + comp_index(slot, 0);
          for (int dir = 0; dir < 3; ++dir) {
            const double* dd = d[dir].data() + (size_t)n * kComps;
            const double* A = B + comp_index(dir, 0);
            double cov[3] = {dd[comp_index(slot, 0)] + 2 * (A[1] * x[2] - A[2] * x[1]),
                             dd[comp_index(slot, 1)] + 2 * (A[2] * x[0] - A[0] * x[2]),
                             dd[comp_index(slot, 2)] + 2 * (A[0] * x[1] - A[1] * x[0])};
            grad2 += h3 * (cov[0] * cov[0] + cov[1] * cov[1] + cov[2] * cov[2]);
          }
        }
      }
      rep.lhs = cmin * bnd;
      rep.rhs = cx.eps * grad2;
      rep.margin = rep.rhs - rep.lhs;
      rep.scale = rep.lhs + rep.rhs;
      rep.empirical_c = (grad2 > 0) ? bnd / (cx.eps * grad2) : 0;
      break;
    }
  }
  return rep;
}

}  // namespace knotmono
