#include "knotmono/modes.hpp"

#include <cmath>

#include "knotmono/operators.hpp"

namespace knotmono {

namespace {

Mat2 hj_of(int j) { return j == 1 ? h_plus() : (j == -1 ? h_minus() : sigma()); }

VecXc d_plain(const ModeGrid& g, const VecXc& f) {
  VecXc r(g.n);
  for (int k = 0; k < g.n; ++k) {
    cplx a = 0;
    for (size_t t = 0; t < g.sbp_u.idx[k].size(); ++t)
      a += g.sbp_u.w[k][t] * f[g.sbp_u.idx[k][t]];
    r[k] = a / g.rho[k];
  }
  return r;
}
VecXc d_fused(const ModeGrid& g, const VecXc& f) {
  VecXc r(g.n);
  for (int k = 0; k < g.n; ++k) {
    cplx a = 0;
    for (size_t t = 0; t < g.sbp_u.idx[k].size(); ++t) {
      int q = g.sbp_u.idx[k][t];
      a += g.sbp_u.w[k][t] * g.rho[q] * f[q];
    }
    r[k] = a / (g.rho[k] * g.rho[k]);
  }
  return r;
}

}  // namespace

ModeGrid ModeGrid::make(double eps, int n, double depth) {
  ModeGrid g;
  g.n = n;
  g.eps = eps;
  g.rho_min = eps / depth;
  double u0 = std::log(g.rho_min), u1 = std::log(eps);
  double hu = (u1 - u0) / (n - 1);
  g.rho.resize(n);
  for (int k = 0; k < n; ++k) g.rho[k] = std::exp(u0 + hu * k);
  g.sbp_u = make_sbp42(n, hu);
  g.w.resize(n);
  for (int k = 0; k < n; ++k) g.w[k] = g.sbp_u.H[k] * g.rho[k];
  return g;
}

ModePair ModePair::make(const ModeGrid& g, int m, int n_s_winding, double knot_length, int j,
                        double gamma, double M) {
  ModePair p;
  p.grid = g;
  p.m = m;
  p.k = 2.0 * std::numbers::pi * n_s_winding / knot_length;
  p.j = j;
  p.gamma = gamma;
  p.M = M;
  p.u = VecXc::Zero(g.n);
  p.v = VecXc::Zero(g.n);
  return p;
}

std::pair<VecXc, VecXc> mode_apply(const ModePair& p, bool dagger) {
  const ModeGrid& g = p.grid;
  double lam = p.lambda();
  double Ms = dagger ? -p.M : p.M;
  cplx c1 = cplx(0, -p.k) - 2.0 * Ms * p.j;  // couples v into the first slot
  cplx c2 = cplx(0, p.k) - 2.0 * Ms * p.j;   // couples u into the second slot
  VecXc r1 = d_fused(g, p.u);
  VecXc r2 = d_plain(g, p.v);
  for (int k = 0; k < g.n; ++k) {
    r1[k] += (lam - 1.0) / g.rho[k] * p.u[k] + c1 * p.v[k];
    r2[k] += -(lam - 1.0) / g.rho[k] * p.v[k] + c2 * p.u[k];
  }
  return {r1, r2};
}

double mode_energy(const ModePair& p) {
  const ModeGrid& g = p.grid;
  double lam = p.lambda();
  VecXc du = d_plain(g, p.u), dv = d_plain(g, p.v);
  double acc = 0;
  double kk = p.k * p.k + 4.0 * p.M * p.M * p.j * p.j;
  for (int q = 0; q < g.n; ++q) {
    double r2 = g.rho[q] * g.rho[q];
    acc += g.w[q] * (r2 * (std::norm(du[q]) + std::norm(dv[q])) +
                     kk * r2 * (std::norm(p.u[q]) + std::norm(p.v[q])) +
                     lam * lam * std::norm(p.u[q]) + (1 - lam) * (1 - lam) * std::norm(p.v[q]));
  }
  return acc;
}

double mode_l2_of_apply(const ModePair& p, bool dagger) {
  auto [r1, r2] = mode_apply(p, dagger);
  const ModeGrid& g = p.grid;
  double acc = 0;
  for (int q = 0; q < g.n; ++q)
    acc += g.w[q] * g.rho[q] * g.rho[q] * (std::norm(r1[q]) + std::norm(r2[q]));
  return acc;
}

ThetaBoundResult theta_bound_check(double gamma, int m, int j) {
  ThetaBoundResult r;
  double lo = std::min(4 * gamma * gamma, (1 - 2 * gamma) * (1 - 2 * gamma) / 2);
  r.mid = (m + 2.0 * gamma * j) * (m + 2.0 * gamma * j);
  r.lhs = lo * (m * m + j * j);
  r.rhs = (1 + 4 * gamma * gamma) * (m * m + j * j);
  r.lhs2 = std::min(4 * gamma * gamma, (1 - 2 * gamma) * (1 - 2 * gamma)) * j * j;
  // equality is attained (e.g. m = -j at the lambda boundary); allow roundoff
  double slack = 32 * std::numeric_limits<double>::epsilon() *
                 std::max({std::abs(r.lhs), std::abs(r.mid), std::abs(r.rhs), 1.0});
  r.ok = (r.lhs <= r.mid + slack) && (r.mid <= r.rhs + slack) && (r.lhs2 <= r.mid + slack);
  return r;
}

double mode_ibp_residue(const ModePair& p, bool dagger) {
  // || L~ psi ||^2 decomposes exactly (up to SBP boundary rows) as
  //   int rho^2(|u'|^2+|v'|^2) + |c|^2 rho^2(|u|^2+|v|^2) - lam(1-lam)(|u|^2+|v|^2)
  //   + eps(lam|u|^2 + (1-lam)|v|^2)(eps) + 2 eps^2 B(u, c v)(eps)
  const ModeGrid& g = p.grid;
  double lam = p.lambda();
  double Ms = dagger ? -p.M : p.M;
  cplx c1 = cplx(0, -p.k) - 2.0 * Ms * p.j;
  double lhs = mode_l2_of_apply(p, dagger);
  // chain-consistent d/drho references
  VecXc du = d_fused(g, p.u), dv = d_plain(g, p.v);
  for (int q = 0; q < g.n; ++q) du[q] -= p.u[q] / g.rho[q];
  double kk = std::norm(c1);
  double volume = 0;
  for (int q = 0; q < g.n; ++q) {
    double r2 = g.rho[q] * g.rho[q];
    volume += g.w[q] * (r2 * (std::norm(du[q]) + std::norm(dv[q])) +
                        kk * r2 * (std::norm(p.u[q]) + std::norm(p.v[q])) -
                        lam * (1 - lam) * (std::norm(p.u[q]) + std::norm(p.v[q])) -
                        2.0 * g.rho[q] * (std::conj(p.u[q]) * c1 * p.v[q]).real());
  }
  int e = g.n - 1;
  double eps = g.rho[e];
  double bnd = eps * (lam * std::norm(p.u[e]) + (1 - lam) * std::norm(p.v[e])) +
               2.0 * eps * eps * (std::conj(p.u[e]) * c1 * p.v[e]).real();
  // inner-boundary contribution (rho_min end), normally negligible for
  // decaying profiles
  double r0 = g.rho[0];
  double bnd0 = r0 * (lam * std::norm(p.u[0]) + (1 - lam) * std::norm(p.v[0])) +
                2.0 * r0 * r0 * (std::conj(p.u[0]) * c1 * p.v[0]).real();
  return lhs - volume - bnd + bnd0;
}

ModeMarginReport prop_lower_bound_check(const ModePair& p, bool dagger) {
  double gamma = p.gamma;
  bool low = gamma > 0 && gamma < 0.125;
  bool high = gamma > 0.375 && gamma < 0.5;
  if (!low && !high)
    throw std::domain_error("prop_lower_bound_check: gamma range not covered");
  const ModeGrid& g = p.grid;
  double lam = p.lambda();
  double Ms = dagger ? -p.M : p.M;
  cplx c1 = cplx(0, -p.k) - 2.0 * Ms * p.j;
  int e = g.n - 1;
  double eps = g.rho[e];
  ModeMarginReport rep;
  rep.l2_Lpsi = mode_l2_of_apply(p, dagger);
  rep.energy = mode_energy(p);
  // boundary integrals over partial N_eps of the assembled mode
  double b_all = eps * (std::norm(p.u[e]) + std::norm(p.v[e]));
  rep.boundary_perp = (p.j == 0) ? 0.0 : b_all;
  rep.boundary_term = eps * eps * (std::conj(p.u[e]) * c1 * p.v[e]).real() +
                      0.5 * eps * (lam * std::norm(p.u[e]) + (1 - lam) * std::norm(p.v[e]));
  double c_perp, c_h;
  if (low) {
    c_perp = 2 * gamma - 24 * gamma * gamma * gamma;
    c_h = 2 * gamma * gamma * gamma;
  } else {
    double q = 1 - 2 * gamma;
    c_perp = q - 3 * q * q * q;
    c_h = 0.25 * q * q * q;
  }
  rep.lhs = rep.l2_Lpsi + c_perp * rep.boundary_perp;
  rep.rhs = c_h * rep.energy + rep.boundary_term;
  rep.margin = rep.lhs - rep.rhs;
  rep.scale = std::abs(rep.lhs) + std::abs(rep.rhs);
  return rep;
}

void assemble_mode_field(const ModePair& p, const std::shared_ptr<const TubeGrid>& tube,
                         ConfigField& re, ConfigField& im) {
  re = ConfigField::zeros(tube, nullptr);
  im = ConfigField::zeros(tube, nullptr);
  const TubeGrid& t = *tube;
  if (t.n_rho != p.grid.n) throw std::invalid_argument("assemble_mode_field: rho grids differ");
  Mat2 hj = hj_of(p.j);
  for (int i = 0; i < t.n_s; ++i)
    for (int jt = 0; jt < t.n_theta; ++jt)
      for (int q = 0; q < t.n_rho; ++q) {
        double th = t.theta_of(jt), ss = t.s_of(i);
        Mat2 alpha = p.u[q] * std::exp(cplx(0, -(p.m + 1) * th - p.k * ss)) * hj;
        Mat2 beta = p.v[q] * std::exp(cplx(0, -p.m * th - p.k * ss)) * hj;
        Mat2 slot[4];
        slot[0] = -0.5 * std::exp(cplx(0, th)) * alpha;
        slot[1] = cplx(0, -0.5) * std::exp(cplx(0, th)) * alpha;
        slot[2] = -0.5 * beta;
        slot[3] = cplx(0, 0.5) * beta;
        double* dr = re.tube_at(t.node(i, jt, q));
        double* di = im.tube_at(t.node(i, jt, q));
        for (int si = 0; si < 4; ++si) {
          Mat2 P = 0.5 * (slot[si] - slot[si].adjoint());
          Mat2 Q = cplx(0, -0.5) * (slot[si] + slot[si].adjoint());
          Vec3 cp = su2_coeffs(P), cq = su2_coeffs(Q);
          for (int c = 0; c < 3; ++c) {
            dr[comp_index(si, c)] = cp[c];
            di[comp_index(si, c)] = cq[c];
          }
        }
      }
}

namespace {
cplx hj_component(const Mat2& w, int j) {
  cplx c0, cp, cm;
  hj_coeffs(w, c0, cp, cm);
  return j == 1 ? cp : (j == -1 ? cm : c0);
}
void extract_combos(const ConfigField& re, const ConfigField& im, int j, VecXc& a_combo,
                    VecXc& b_combo) {
  const TubeGrid& t = *re.tube;
  a_combo.resize(t.n_rho);
  b_combo.resize(t.n_rho);
  for (int q = 0; q < t.n_rho; ++q) {
    int node = t.node(0, 0, q);
    auto slotc = [&](int slot) {
      const double* a = re.tube_at(node);
      const double* b = im.tube_at(node);
      Mat2 X =
          su2_from(Vec3(a[comp_index(slot, 0)], a[comp_index(slot, 1)], a[comp_index(slot, 2)]));
      Mat2 Y =
          su2_from(Vec3(b[comp_index(slot, 0)], b[comp_index(slot, 1)], b[comp_index(slot, 2)]));
      return Mat2(X + cplx(0, 1) * Y);
    };
    a_combo[q] = hj_component(-(slotc(0) - cplx(0, 1) * slotc(1)), j);
    b_combo[q] = hj_component(-(slotc(2) + cplx(0, 1) * slotc(3)), j);
  }
}
}  // namespace

void extract_profiles(const ConfigField& re, const ConfigField& im, int j, VecXc& alpha,
                      VecXc& beta) {
  extract_combos(re, im, j, alpha, beta);
}

void extract_mode_rows(const ConfigField& out_re, const ConfigField& out_im, int j, VecXc& row1,
                       VecXc& row2) {
  VecXc a, b;
  extract_combos(out_re, out_im, j, a, b);
  row1 = cplx(0, -1) * b;
  row2 = cplx(0, -1) * a;
}

}  // namespace knotmono
