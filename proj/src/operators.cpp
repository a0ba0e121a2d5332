#include "knotmono/operators.hpp"

#include <cmath>
#include <cstring>

namespace knotmono {

namespace {

// bracket on su(2) coefficient triples: [X,Y] = 2 (x cross y)
inline void br_add(const double* c, const double* x, double* out, double sign) {
  out[0] += sign * 2.0 * (c[1] * x[2] - c[2] * x[1]);
  out[1] += sign * 2.0 * (c[2] * x[0] - c[0] * x[2]);
  out[2] += sign * 2.0 * (c[0] * x[1] - c[1] * x[0]);
}

// ---- 1D derivative kernels -------------------------------------------------

// d/d rho = (1/rho) D_u on the uniform log grid. dst += (1/rho) D_u src;
// the transpose scatters the same weights.
void apply_drho(const TubeGrid& g, const double* src, double* dst, int comp, bool transpose) {
  const SbpOperator& op = g.sbp_u;
  int n = g.n_rho;
  int nlines = g.n_s * g.n_theta;
  for (int line = 0; line < nlines; ++line) {
    const double* s = src + (size_t)kComps * n * line;
    double* d = dst + (size_t)kComps * n * line;
    for (int k = 0; k < n; ++k) {
      if (!transpose) {
        double acc = 0;
        for (size_t j = 0; j < op.idx[k].size(); ++j)
          acc += op.w[k][j] * s[kComps * op.idx[k][j] + comp];
        d[kComps * k + comp] += acc / g.rho[k];
      } else {
        double v = s[kComps * k + comp] / g.rho[k];
        for (size_t j = 0; j < op.idx[k].size(); ++j)
          d[kComps * op.idx[k][j] + comp] += op.w[k][j] * v;
      }
    }
  }
}

// the (d/d rho + 1/rho) pattern, fused as (1/rho^2) D_u (rho .) so that the
// weighted summation by parts is exact
void apply_drho_fused(const TubeGrid& g, const double* src, double* dst, int comp,
                      bool transpose) {
  const SbpOperator& op = g.sbp_u;
  int n = g.n_rho;
  int nlines = g.n_s * g.n_theta;
  for (int line = 0; line < nlines; ++line) {
    const double* s = src + (size_t)kComps * n * line;
    double* d = dst + (size_t)kComps * n * line;
    for (int k = 0; k < n; ++k) {
      if (!transpose) {
        double acc = 0;
        for (size_t j = 0; j < op.idx[k].size(); ++j) {
          int q = op.idx[k][j];
          acc += op.w[k][j] * g.rho[q] * s[kComps * q + comp];
        }
        d[kComps * k + comp] += acc / (g.rho[k] * g.rho[k]);
      } else {
        double v = s[kComps * k + comp] / (g.rho[k] * g.rho[k]);
        for (size_t j = 0; j < op.idx[k].size(); ++j) {
          int q = op.idx[k][j];
          d[kComps * q + comp] += op.w[k][j] * g.rho[q] * v;
        }
      }
    }
  }
}

// Periodic derivative along theta or s. Spectral uses the dense antisymmetric
// differentiation matrix (exact on trig polynomials); FD2 the centered stencil.
struct PeriodicDeriv {
  int n = 0;
  double fd_factor = 0;           // 1/(2h)
  std::vector<double> dense;      // n*n when spectral
};

PeriodicDeriv make_periodic(int n, double period, Scheme scheme) {
  PeriodicDeriv p;
  p.n = n;
  double h = period / n;
  p.fd_factor = 1.0 / (2.0 * h);
  if (scheme == Scheme::Spectral) {
    // even-n differentiation matrix: D_jk = (-1)^{j-k}/2 * cot((j-k) pi / n)
    p.dense.assign((size_t)n * n, 0.0);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (j == k) continue;
        double val = 0.5 * (((j - k) % 2 == 0) ? 1.0 : -1.0) /
                     std::tan(std::numbers::pi * (j - k) / n);
        p.dense[(size_t)j * n + k] = val * (2.0 * std::numbers::pi / period);
      }
  }
  return p;
}

}  // namespace

// ---- clifford multiplication ----------------------------------------------

ConfigValue clifford_mul(const Vec3& tau, const ConfigValue& psi) {
  ConfigValue out;
  // 0-form part: <tau, a>
  out.phi = tau[0] * psi.a[0] + tau[1] * psi.a[1] + tau[2] * psi.a[2];
  // 1-form part: *(tau ^ a) - phi tau
  out.a[0] = tau[1] * psi.a[2] - tau[2] * psi.a[1] - psi.phi * tau[0];
  out.a[1] = tau[2] * psi.a[0] - tau[0] * psi.a[2] - psi.phi * tau[1];
  out.a[2] = tau[0] * psi.a[1] - tau[1] * psi.a[0] - psi.phi * tau[2];
  return out;
}

ConfigValue clifford_mul(const Vec3& tau, const ConfigValue& psi, const Mat3& g) {
  Mat3 ginv = g.inverse();
  double sg = std::sqrt(g.determinant());
  ConfigValue out;
  // <tau, a>_g = g^{jk} tau_j a_k
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) out.phi += ginv(j, k) * tau[j] * psi.a[k];
  // (*omega)_m = sqrt(g) g_{m p} eps^{p i j} ginv(i,a) ginv(j,b) omega_{ab} / 2
  // with omega = tau ^ a: omega_{ab} = tau_a a_b - tau_b a_a
  Mat2 w[3];  // contravariant components eps^{pij}/ (2 sqrt g) ... use vector form
  for (int p = 0; p < 3; ++p) w[p] = Mat2::Zero();
  auto eps = [](int i, int j, int k) -> double {
    if (i == j || j == k || i == k) return 0;
    return ((i == 0 && j == 1 && k == 2) || (i == 1 && j == 2 && k == 0) ||
            (i == 2 && j == 0 && k == 1))
               ? 1.0
               : -1.0;
  };
  for (int p = 0; p < 3; ++p)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double e = eps(p, i, j);
        if (e == 0) continue;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            w[p] += 0.5 * e * ginv(i, a) * ginv(j, b) * (tau[a] * psi.a[b] - tau[b] * psi.a[a]);
      }
  for (int m = 0; m < 3; ++m) {
    out.a[m] = -psi.phi * tau[m];
    for (int p = 0; p < 3; ++p) out.a[m] += sg * g(m, p) * w[p];
  }
  return out;
}

// ---- block kernels ----------------------------------------------------------

namespace {

// Derivatives of every component on the tube block. Buffers sized like data.
struct TubeDerivs {
  Eigen::VectorXd dr, drF, dt, ds;  // drF = (d/drho + 1/rho); dt is raw d/dtheta
};

void tube_line_deriv_theta(const TubeGrid& g, const PeriodicDeriv& p, const double* src,
                           double* dst, int comp, bool transpose) {
  int nr = g.n_rho, nt = g.n_theta;
  // lines over theta: stride nr, for each (i_s, k_rho)
  for (int i = 0; i < g.n_s; ++i)
    for (int k = 0; k < nr; ++k) {
      size_t base = ((size_t)i * nt) * nr + k;
      auto at = [&](int j) -> size_t { return (base + (size_t)j * nr) * kComps + comp; };
      if (!p.dense.empty()) {
        for (int j = 0; j < nt; ++j) {
          double acc = 0;
          if (!transpose) {
            for (int q = 0; q < nt; ++q) acc += p.dense[(size_t)j * nt + q] * src[at(q)];
          } else {
            for (int q = 0; q < nt; ++q) acc += p.dense[(size_t)q * nt + j] * src[at(q)];
          }
          dst[at(j)] += acc;
        }
      } else {
        double f = p.fd_factor;
        for (int j = 0; j < nt; ++j) {
          int jp = (j + 1) % nt, jm = (j + nt - 1) % nt;
          if (!transpose)
            dst[at(j)] += f * (src[at(jp)] - src[at(jm)]);
          else
            dst[at(j)] += f * (src[at(jm)] - src[at(jp)]);  // antisymmetric
        }
      }
    }
}

void tube_line_deriv_s(const TubeGrid& g, const PeriodicDeriv& p, const double* src, double* dst,
                       int comp, bool transpose) {
  int nr = g.n_rho, nt = g.n_theta, ns = g.n_s;
  size_t stride = (size_t)nt * nr;
  for (int j = 0; j < nt; ++j)
    for (int k = 0; k < nr; ++k) {
      size_t base = (size_t)j * nr + k;
      auto at = [&](int i) -> size_t { return (base + (size_t)i * stride) * kComps + comp; };
      if (!p.dense.empty()) {
        for (int i = 0; i < ns; ++i) {
          double acc = 0;
          if (!transpose) {
            for (int q = 0; q < ns; ++q) acc += p.dense[(size_t)i * ns + q] * src[at(q)];
          } else {
            for (int q = 0; q < ns; ++q) acc += p.dense[(size_t)q * ns + i] * src[at(q)];
          }
          dst[at(i)] += acc;
        }
      } else {
        double f = p.fd_factor;
        for (int i = 0; i < ns; ++i) {
          int ip = (i + 1) % ns, im = (i + ns - 1) % ns;
          if (!transpose)
            dst[at(i)] += f * (src[at(ip)] - src[at(im)]);
          else
            dst[at(i)] += f * (src[at(im)] - src[at(ip)]);
        }
      }
    }
}

TubeDerivs tube_all_derivs(const TubeGrid& g, const Eigen::VectorXd& data, Scheme scheme) {
  TubeDerivs d;
  d.dr = Eigen::VectorXd::Zero(data.size());
  d.drF = Eigen::VectorXd::Zero(data.size());
  d.dt = Eigen::VectorXd::Zero(data.size());
  d.ds = Eigen::VectorXd::Zero(data.size());
  PeriodicDeriv pt = make_periodic(g.n_theta, 2.0 * std::numbers::pi, scheme);
  PeriodicDeriv ps = make_periodic(g.n_s, g.length, scheme);
  for (int c = 0; c < kComps; ++c) {
    apply_drho(g, data.data(), d.dr.data(), c, false);
    apply_drho_fused(g, data.data(), d.drF.data(), c, false);
    tube_line_deriv_theta(g, pt, data.data(), d.dt.data(), c, false);
    tube_line_deriv_s(g, ps, data.data(), d.ds.data(), c, false);
  }
  return d;
}

// Box derivative along axis with one-sided fallbacks at mask/bounds.
// transpose scatters with the same stencil choices.
void box_deriv(const BoxGrid& g, const Eigen::VectorXd& src, Eigen::VectorXd& dst, int axis,
               int comp, bool transpose) {
  int N0 = g.n[0], N1 = g.n[1], N2 = g.n[2];
  double inv2h = 1.0 / (2.0 * g.h), invh = 1.0 / g.h;
  auto idx = [&](int i, int j, int k) { return (size_t)((i * N1 + j) * N2 + k); };
  auto run = [&](int i, int j, int k) {
    size_t id = idx(i, j, k);
    if (!g.active[id]) return;
    int ii = i, jj = j, kk = k;
    int* c = axis == 0 ? &ii : (axis == 1 ? &jj : &kk);
    int lim = g.n[axis];
    int c0 = *c;
    auto act = [&](int q) -> bool {
      if (q < 0 || q >= lim) return false;
      *c = q;
      bool a = g.active[idx(ii, jj, kk)];
      *c = c0;
      return a;
    };
    auto at = [&](int q) -> size_t {
      *c = q;
      size_t r = idx(ii, jj, kk) * kComps + comp;
      *c = c0;
      return r;
    };
    // stencil: centered > one-sided 3pt > one-sided 2pt > zero
    double w[3];
    size_t p[3];
    int nw = 0;
    bool up = act(c0 + 1), dn = act(c0 - 1);
    if (up && dn) {
      nw = 2;
      w[0] = inv2h; p[0] = at(c0 + 1);
      w[1] = -inv2h; p[1] = at(c0 - 1);
    } else if (up && act(c0 + 2)) {
      nw = 3;
      w[0] = -1.5 * invh; p[0] = at(c0);
      w[1] = 2.0 * invh;  p[1] = at(c0 + 1);
      w[2] = -0.5 * invh; p[2] = at(c0 + 2);
    } else if (dn && act(c0 - 2)) {
      nw = 3;
      w[0] = 1.5 * invh;  p[0] = at(c0);
      w[1] = -2.0 * invh; p[1] = at(c0 - 1);
      w[2] = 0.5 * invh;  p[2] = at(c0 - 2);
    } else if (up) {
      nw = 2;
      w[0] = -invh; p[0] = at(c0);
      w[1] = invh;  p[1] = at(c0 + 1);
    } else if (dn) {
      nw = 2;
      w[0] = invh;  p[0] = at(c0);
      w[1] = -invh; p[1] = at(c0 - 1);
    }
    size_t self = id * kComps + comp;
    if (!transpose) {
      double acc = 0;
      for (int q = 0; q < nw; ++q) acc += w[q] * src[p[q]];
      dst[self] += acc;
    } else {
      double v = src[self];
      for (int q = 0; q < nw; ++q) dst[p[q]] += w[q] * v;
    }
  };
  for (int i = 0; i < N0; ++i)
    for (int j = 0; j < N1; ++j)
      for (int k = 0; k < N2; ++k) run(i, j, k);
}

struct BoxDerivs {
  Eigen::VectorXd d[3];
};
BoxDerivs box_all_derivs(const BoxGrid& g, const Eigen::VectorXd& data) {
  BoxDerivs b;
  for (int a = 0; a < 3; ++a) {
    b.d[a] = Eigen::VectorXd::Zero(data.size());
    for (int c = 0; c < kComps; ++c) box_deriv(g, data, b.d[a], a, c, false);
  }
  return b;
}

enum { SA_R = 0, SA_T = 1, SA_S = 2, SPHI = 3 };  // tube slot names

// Extended-operator pointwise assembly on the tube block (forward).
void tube_extended_pointwise(const TubeGrid& g, const Eigen::VectorXd& psi, const TubeDerivs& D,
                             const Eigen::VectorXd* bg, double phi_sign_s, Eigen::VectorXd& out,
                             bool gauge_row, bool oneform_rows) {
  int nr = g.n_rho;
  for (int i = 0; i < g.n_s; ++i)
    for (int j = 0; j < g.n_theta; ++j)
      for (int k = 0; k < nr; ++k) {
        size_t node = ((size_t)i * g.n_theta + j) * nr + k;
        double irho = 1.0 / g.rho[k];
        const double* p = psi.data() + node * kComps;
        const double* dr = D.dr.data() + node * kComps;
        const double* drF = D.drF.data() + node * kComps;
        const double* dt = D.dt.data() + node * kComps;
        const double* ds = D.ds.data() + node * kComps;
        double* o = out.data() + node * kComps;
        const double* B = bg ? bg->data() + node * kComps : nullptr;
        for (int c = 0; c < 3; ++c) {
          int ar = comp_index(SA_R, c), at = comp_index(SA_T, c), as = comp_index(SA_S, c),
              ph = comp_index(SPHI, c);
          if (oneform_rows) {
            o[ar] += irho * dt[as] - ds[at] - dr[ph];
            o[at] += ds[ar] - dr[as] - irho * dt[ph];
            o[as] += drF[at] - irho * dt[ar] - ds[ph];
          }
          if (gauge_row) o[ph] += drF[ar] + irho * dt[at] + ds[as];
        }
        if (B) {
          const double* Ar = B + comp_index(SA_R, 0);
          const double* At = B + comp_index(SA_T, 0);
          const double* As = B + comp_index(SA_S, 0);
          const double* Ph = B + comp_index(SPHI, 0);
          const double* par = p + comp_index(SA_R, 0);
          const double* pat = p + comp_index(SA_T, 0);
          const double* pas = p + comp_index(SA_S, 0);
          const double* pph = p + comp_index(SPHI, 0);
          double* oar = o + comp_index(SA_R, 0);
          double* oat = o + comp_index(SA_T, 0);
          double* oas = o + comp_index(SA_S, 0);
          double* oph = o + comp_index(SPHI, 0);
          if (oneform_rows) {
            br_add(At, pas, oar, +1);
            br_add(As, pat, oar, -1);
            br_add(Ar, pph, oar, -1);
            br_add(As, par, oat, +1);
            br_add(Ar, pas, oat, -1);
            br_add(At, pph, oat, -1);
            br_add(Ar, pat, oas, +1);
            br_add(At, par, oas, -1);
            br_add(As, pph, oas, -1);
            if (phi_sign_s != 0) {
              br_add(Ph, par, oar, phi_sign_s);
              br_add(Ph, pat, oat, phi_sign_s);
              br_add(Ph, pas, oas, phi_sign_s);
            }
          }
          if (gauge_row) {
            br_add(Ar, par, oph, +1);
            br_add(At, pat, oph, +1);
            br_add(As, pas, oph, +1);
            if (phi_sign_s != 0) br_add(Ph, pph, oph, phi_sign_s);
          }
        }
      }
}

// Transpose of the tube assembly: build G arrays (coefficients of the
// derivative terms), scatter through the transposed derivatives, and apply the
// sign-flipped pointwise terms.
void tube_extended_transpose(const TubeGrid& g, const Eigen::VectorXd& w,
                             const Eigen::VectorXd* bg, double phi_sign_s, Scheme scheme,
                             Eigen::VectorXd& dst, bool gauge_row, bool oneform_rows) {
  Eigen::VectorXd Gr = Eigen::VectorXd::Zero(w.size());
  Eigen::VectorXd GrF = Eigen::VectorXd::Zero(w.size());
  Eigen::VectorXd Gt = Eigen::VectorXd::Zero(w.size());
  Eigen::VectorXd Gs = Eigen::VectorXd::Zero(w.size());
  int nr = g.n_rho;
  for (int i = 0; i < g.n_s; ++i)
    for (int j = 0; j < g.n_theta; ++j)
      for (int k = 0; k < nr; ++k) {
        size_t node = ((size_t)i * g.n_theta + j) * nr + k;
        double irho = 1.0 / g.rho[k];
        const double* W = w.data() + node * kComps;
        double* gr = Gr.data() + node * kComps;
        double* grF = GrF.data() + node * kComps;
        double* gt = Gt.data() + node * kComps;
        double* gs = Gs.data() + node * kComps;
        double* d = dst.data() + node * kComps;
        const double* B = bg ? bg->data() + node * kComps : nullptr;
        for (int c = 0; c < 3; ++c) {
          int ar = comp_index(SA_R, c), at = comp_index(SA_T, c), as = comp_index(SA_S, c),
              ph = comp_index(SPHI, c);
          if (oneform_rows) {
            // plain D_rho coefficients
            gr[ph] += -W[ar];
            gr[as] += -W[at];
            // fused (D_rho + 1/rho) coefficient
            grF[at] += W[as];
            // D_theta coefficients (with their 1/rho factors)
            gt[as] += irho * W[ar];
            gt[ph] += -irho * W[at];
            gt[ar] += -irho * W[as];
            // D_s coefficients
            gs[at] += -W[ar];
            gs[ar] += W[at];
            gs[ph] += -W[as];
          }
          if (gauge_row) {
            grF[ar] += W[ph];
            gt[at] += irho * W[ph];
            gs[as] += W[ph];
          }
        }
        if (B) {
          const double* Ar = B + comp_index(SA_R, 0);
          const double* At = B + comp_index(SA_T, 0);
          const double* As = B + comp_index(SA_S, 0);
          const double* Ph = B + comp_index(SPHI, 0);
          const double* wr = W + comp_index(SA_R, 0);
          const double* wt = W + comp_index(SA_T, 0);
          const double* ws = W + comp_index(SA_S, 0);
          const double* wp = W + comp_index(SPHI, 0);
          double* dar = d + comp_index(SA_R, 0);
          double* dat = d + comp_index(SA_T, 0);
          double* das = d + comp_index(SA_S, 0);
          double* dph = d + comp_index(SPHI, 0);
          if (oneform_rows) {
            br_add(At, wr, das, -1);
            br_add(As, wr, dat, +1);
            br_add(Ar, wr, dph, +1);
            br_add(As, wt, dar, -1);
            br_add(Ar, wt, das, +1);
            br_add(At, wt, dph, +1);
            br_add(Ar, ws, dat, -1);
            br_add(At, ws, dar, +1);
            br_add(As, ws, dph, +1);
            if (phi_sign_s != 0) {
              br_add(Ph, wr, dar, -phi_sign_s);
              br_add(Ph, wt, dat, -phi_sign_s);
              br_add(Ph, ws, das, -phi_sign_s);
            }
          }
          if (gauge_row) {
            br_add(Ar, wp, dar, -1);
            br_add(At, wp, dat, -1);
            br_add(As, wp, das, -1);
            if (phi_sign_s != 0) br_add(Ph, wp, dph, -phi_sign_s);
          }
        }
      }
  PeriodicDeriv pt = make_periodic(g.n_theta, 2.0 * std::numbers::pi, scheme);
  PeriodicDeriv ps = make_periodic(g.n_s, g.length, scheme);
  for (int c = 0; c < kComps; ++c) {
    apply_drho(g, Gr.data(), dst.data(), c, true);
    apply_drho_fused(g, GrF.data(), dst.data(), c, true);
    tube_line_deriv_theta(g, pt, Gt.data(), dst.data(), c, true);
    tube_line_deriv_s(g, ps, Gs.data(), dst.data(), c, true);
  }
}

void box_extended_pointwise(const BoxGrid& g, const Eigen::VectorXd& psi, const BoxDerivs& D,
                            const Eigen::VectorXd* bg, double phi_sign_s, Eigen::VectorXd& out,
                            bool gauge_row, bool oneform_rows) {
  int N = g.n_nodes();
  for (int node = 0; node < N; ++node) {
    if (!g.active[node]) continue;
    const double* p = psi.data() + (size_t)node * kComps;
    const double* d0 = D.d[0].data() + (size_t)node * kComps;
    const double* d1 = D.d[1].data() + (size_t)node * kComps;
    const double* d2 = D.d[2].data() + (size_t)node * kComps;
    double* o = out.data() + (size_t)node * kComps;
    const double* B = bg ? bg->data() + (size_t)node * kComps : nullptr;
    for (int c = 0; c < 3; ++c) {
      int a1 = comp_index(0, c), a2 = comp_index(1, c), a3 = comp_index(2, c),
          ph = comp_index(3, c);
      if (oneform_rows) {
        o[a1] += d1[a3] - d2[a2] - d0[ph];
        o[a2] += d2[a1] - d0[a3] - d1[ph];
        o[a3] += d0[a2] - d1[a1] - d2[ph];
      }
      if (gauge_row) o[ph] += d0[a1] + d1[a2] + d2[a3];
    }
    if (B) {
      const double* A[3] = {B + comp_index(0, 0), B + comp_index(1, 0), B + comp_index(2, 0)};
      const double* Ph = B + comp_index(3, 0);
      const double* pa[3] = {p + comp_index(0, 0), p + comp_index(1, 0), p + comp_index(2, 0)};
      const double* pp = p + comp_index(3, 0);
      double* oa[3] = {o + comp_index(0, 0), o + comp_index(1, 0), o + comp_index(2, 0)};
      double* op = o + comp_index(3, 0);
      if (oneform_rows) {
        br_add(A[1], pa[2], oa[0], +1);
        br_add(A[2], pa[1], oa[0], -1);
        br_add(A[2], pa[0], oa[1], +1);
        br_add(A[0], pa[2], oa[1], -1);
        br_add(A[0], pa[1], oa[2], +1);
        br_add(A[1], pa[0], oa[2], -1);
        for (int m = 0; m < 3; ++m) br_add(A[m], pp, oa[m], -1);
        if (phi_sign_s != 0)
          for (int m = 0; m < 3; ++m) br_add(Ph, pa[m], oa[m], phi_sign_s);
      }
      if (gauge_row) {
        for (int m = 0; m < 3; ++m) br_add(A[m], pa[m], op, +1);
        if (phi_sign_s != 0) br_add(Ph, pp, op, phi_sign_s);
      }
    }
  }
}

void box_extended_transpose(const BoxGrid& g, const Eigen::VectorXd& w, const Eigen::VectorXd* bg,
                            double phi_sign_s, Eigen::VectorXd& dst, bool gauge_row,
                            bool oneform_rows) {
  Eigen::VectorXd G[3];
  for (int a = 0; a < 3; ++a) G[a] = Eigen::VectorXd::Zero(w.size());
  int N = g.n_nodes();
  for (int node = 0; node < N; ++node) {
    if (!g.active[node]) continue;
    const double* W = w.data() + (size_t)node * kComps;
    double* g0 = G[0].data() + (size_t)node * kComps;
    double* g1 = G[1].data() + (size_t)node * kComps;
    double* g2 = G[2].data() + (size_t)node * kComps;
    double* d = dst.data() + (size_t)node * kComps;
    const double* B = bg ? bg->data() + (size_t)node * kComps : nullptr;
    for (int c = 0; c < 3; ++c) {
      int a1 = comp_index(0, c), a2 = comp_index(1, c), a3 = comp_index(2, c),
          ph = comp_index(3, c);
      if (oneform_rows) {
        g1[a3] += W[a1];
        g2[a2] += -W[a1];
        g0[ph] += -W[a1];
        g2[a1] += W[a2];
        g0[a3] += -W[a2];
        g1[ph] += -W[a2];
        g0[a2] += W[a3];
        g1[a1] += -W[a3];
        g2[ph] += -W[a3];
      }
      if (gauge_row) {
        g0[a1] += W[ph];
        g1[a2] += W[ph];
        g2[a3] += W[ph];
      }
    }
    if (B) {
      const double* A[3] = {B + comp_index(0, 0), B + comp_index(1, 0), B + comp_index(2, 0)};
      const double* Ph = B + comp_index(3, 0);
      const double* wa[3] = {W + comp_index(0, 0), W + comp_index(1, 0), W + comp_index(2, 0)};
      const double* wp = W + comp_index(3, 0);
      double* da[3] = {d + comp_index(0, 0), d + comp_index(1, 0), d + comp_index(2, 0)};
      double* dp = d + comp_index(3, 0);
      if (oneform_rows) {
        br_add(A[1], wa[0], da[2], -1);
        br_add(A[2], wa[0], da[1], +1);
        br_add(A[2], wa[1], da[0], -1);
        br_add(A[0], wa[1], da[2], +1);
        br_add(A[0], wa[2], da[1], -1);
        br_add(A[1], wa[2], da[0], +1);
        for (int m = 0; m < 3; ++m) br_add(A[m], wa[m], dp, +1);
        if (phi_sign_s != 0)
          for (int m = 0; m < 3; ++m) br_add(Ph, wa[m], da[m], -phi_sign_s);
      }
      if (gauge_row) {
        for (int m = 0; m < 3; ++m) br_add(A[m], wp, da[m], -1);
        if (phi_sign_s != 0) br_add(Ph, wp, dp, -phi_sign_s);
      }
    }
  }
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < kComps; ++c) box_deriv(g, G[a], dst, a, c, true);
}

ConfigField apply_dirac(const ConfigField& Psi, const ConfigField& psi, double phi_sign,
                        Scheme scheme, bool gauge_row, bool oneform_rows) {
  ConfigField out = ConfigField::zeros(psi.tube, psi.box);
  if (psi.tube) {
    TubeDerivs D = tube_all_derivs(*psi.tube, psi.tube_data, scheme);
    tube_extended_pointwise(*psi.tube, psi.tube_data, D,
                            Psi.tube_data.size() ? &Psi.tube_data : nullptr, phi_sign,
                            out.tube_data, gauge_row, oneform_rows);
  }
  if (psi.box) {
    BoxDerivs D = box_all_derivs(*psi.box, psi.box_data);
    box_extended_pointwise(*psi.box, psi.box_data, D,
                           Psi.box_data.size() ? &Psi.box_data : nullptr, phi_sign, out.box_data,
                           gauge_row, oneform_rows);
  }
  return out;
}

}  // namespace

ConfigField apply_extended(const ConfigField& Psi, const ConfigField& psi, bool dagger,
                           Scheme scheme) {
  return apply_dirac(Psi, psi, dagger ? -1.0 : 1.0, scheme, true, true);
}

ConfigField apply_linearization(const ConfigField& Psi, const ConfigField& psi, Scheme scheme) {
  return apply_dirac(Psi, psi, 1.0, scheme, false, true);
}

ConfigField gauge_functional(const ConfigField& Psi, const ConfigField& psi, Scheme scheme) {
  return apply_dirac(Psi, psi, 1.0, scheme, true, false);
}

ConfigField apply_extended_transpose(const ConfigField& Psi, const ConfigField& w, bool dagger,
                                     Scheme scheme) {
  double s = dagger ? -1.0 : 1.0;
  ConfigField out = ConfigField::zeros(w.tube, w.box);
  if (w.tube)
    tube_extended_transpose(*w.tube, w.tube_data, Psi.tube_data.size() ? &Psi.tube_data : nullptr,
                            s, scheme, out.tube_data, true, true);
  if (w.box)
    box_extended_transpose(*w.box, w.box_data, Psi.box_data.size() ? &Psi.box_data : nullptr, s,
                           out.box_data, true, true);
  return out;
}

ConfigField quadratic(const ConfigField& p1, const ConfigField& p2) {
  ConfigField out = ConfigField::zeros(p1.tube, p1.box);
  auto work = [&](const double* a, const double* b, double* o) {
    // Q_k = 1/2 (*[a1 ^ a2])_k - 1/2([a1_k, phi2] + [a2_k, phi1])
    const double* a1[3] = {a + comp_index(0, 0), a + comp_index(1, 0), a + comp_index(2, 0)};
    const double* a2[3] = {b + comp_index(0, 0), b + comp_index(1, 0), b + comp_index(2, 0)};
    const double* f1 = a + comp_index(3, 0);
    const double* f2 = b + comp_index(3, 0);
    double* ok[3] = {o + comp_index(0, 0), o + comp_index(1, 0), o + comp_index(2, 0)};
    static const int cyc[3][2] = {{1, 2}, {2, 0}, {0, 1}};
    for (int k = 0; k < 3; ++k) {
      int i = cyc[k][0], j = cyc[k][1];
      // 1/2 [a1 ^ a2]_{ij}; exactly symmetric since br(x,y) = -br(y,x) holds
      // term by term in floating point
      br_add(a1[i], a2[j], ok[k], 0.5);
      br_add(a1[j], a2[i], ok[k], -0.5);
      br_add(a1[k], f2, ok[k], -0.5);
      br_add(a2[k], f1, ok[k], -0.5);
    }
  };
  if (p1.tube)
    for (int n = 0; n < p1.tube->n_nodes(); ++n) work(p1.tube_at(n), p2.tube_at(n), out.tube_at(n));
  if (p1.box)
    for (int n = 0; n < p1.box->n_nodes(); ++n) {
      if (!p1.box->active[n]) continue;
      work(p1.box_at(n), p2.box_at(n), out.box_at(n));
    }
  return out;
}

TwoFormField curvature(const ConfigField& A, Scheme scheme) {
  TwoFormField F;
  F.tube = A.tube;
  F.box = A.box;
  auto fcomp = [](int two_form_slot, int c) { return two_form_slot * 3 + c; };
  if (A.tube) {
    const TubeGrid& g = *A.tube;
    F.tube_data = Eigen::VectorXd::Zero(9 * g.n_nodes());
    TubeDerivs D = tube_all_derivs(g, A.tube_data, scheme);
    for (int n = 0; n < g.n_nodes(); ++n) {
      int k = n % g.n_rho;
      double irho = 1.0 / g.rho[k];
      const double* a = A.tube_at(n);
      const double* dr = D.dr.data() + (size_t)n * kComps;
      const double* drF = D.drF.data() + (size_t)n * kComps;
      const double* dt = D.dt.data() + (size_t)n * kComps;
      const double* ds = D.ds.data() + (size_t)n * kComps;
      double* f = F.tube_data.data() + (size_t)9 * n;
      // (F_23, F_31, F_12) in the coframe (rho, theta, s): 23 ~ (theta,s)
      for (int c = 0; c < 3; ++c) {
        int ar = comp_index(SA_R, c), at = comp_index(SA_T, c), as = comp_index(SA_S, c);
        f[fcomp(0, c)] += irho * dt[as] - ds[at];
        f[fcomp(1, c)] += ds[ar] - dr[as];
        f[fcomp(2, c)] += drF[at] - irho * dt[ar];
      }
      const double* Ar = a + comp_index(SA_R, 0);
      const double* At = a + comp_index(SA_T, 0);
      const double* As = a + comp_index(SA_S, 0);
      br_add(At, As, f + fcomp(0, 0), +1);
      br_add(As, Ar, f + fcomp(1, 0), +1);
      br_add(Ar, At, f + fcomp(2, 0), +1);
    }
  }
  if (A.box) {
    const BoxGrid& g = *A.box;
    F.box_data = Eigen::VectorXd::Zero(9 * g.n_nodes());
    BoxDerivs D = box_all_derivs(g, A.box_data);
    for (int n = 0; n < g.n_nodes(); ++n) {
      if (!g.active[n]) continue;
      const double* a = A.box_at(n);
      const double* d0 = D.d[0].data() + (size_t)n * kComps;
      const double* d1 = D.d[1].data() + (size_t)n * kComps;
      const double* d2 = D.d[2].data() + (size_t)n * kComps;
      double* f = F.box_data.data() + (size_t)9 * n;
      for (int c = 0; c < 3; ++c) {
        f[fcomp(0, c)] += d1[comp_index(2, c)] - d2[comp_index(1, c)];
        f[fcomp(1, c)] += d2[comp_index(0, c)] - d0[comp_index(2, c)];
        f[fcomp(2, c)] += d0[comp_index(1, c)] - d1[comp_index(0, c)];
      }
      const double* A1 = a + comp_index(0, 0);
      const double* A2 = a + comp_index(1, 0);
      const double* A3 = a + comp_index(2, 0);
      br_add(A2, A3, f + fcomp(0, 0), +1);
      br_add(A3, A1, f + fcomp(1, 0), +1);
      br_add(A1, A2, f + fcomp(2, 0), +1);
    }
    F.one_sided_stencils = true;
  }
  return F;
}

ConfigField bogomolny_residual(const ConfigField& Psi, Scheme scheme) {
  // V = *F - d_A Phi, with the same derivative kernels as the linearization so
  // that V(Psi + psi) - V(Psi) - L(psi) - Q(psi,psi) vanishes nodewise.
  ConfigField out = ConfigField::zeros(Psi.tube, Psi.box);
  if (Psi.tube) {
    const TubeGrid& g = *Psi.tube;
    TubeDerivs D = tube_all_derivs(g, Psi.tube_data, scheme);
    for (int n = 0; n < g.n_nodes(); ++n) {
      int k = n % g.n_rho;
      double irho = 1.0 / g.rho[k];
      const double* a = Psi.tube_at(n);
      const double* dr = D.dr.data() + (size_t)n * kComps;
      const double* drF = D.drF.data() + (size_t)n * kComps;
      const double* dt = D.dt.data() + (size_t)n * kComps;
      const double* ds = D.ds.data() + (size_t)n * kComps;
      double* o = out.tube_at(n);
      for (int c = 0; c < 3; ++c) {
        int ar = comp_index(SA_R, c), at = comp_index(SA_T, c), as = comp_index(SA_S, c),
            ph = comp_index(SPHI, c);
        o[ar] += irho * dt[as] - ds[at] - dr[ph];
        o[at] += ds[ar] - dr[as] - irho * dt[ph];
        o[as] += drF[at] - irho * dt[ar] - ds[ph];
      }
      const double* Ar = a + comp_index(SA_R, 0);
      const double* At = a + comp_index(SA_T, 0);
      const double* As = a + comp_index(SA_S, 0);
      const double* Ph = a + comp_index(SPHI, 0);
      br_add(At, As, o + comp_index(SA_R, 0), +1);
      br_add(As, Ar, o + comp_index(SA_T, 0), +1);
      br_add(Ar, At, o + comp_index(SA_S, 0), +1);
      br_add(Ar, Ph, o + comp_index(SA_R, 0), -1);
      br_add(At, Ph, o + comp_index(SA_T, 0), -1);
      br_add(As, Ph, o + comp_index(SA_S, 0), -1);
    }
  }
  if (Psi.box) {
    const BoxGrid& g = *Psi.box;
    BoxDerivs D = box_all_derivs(g, Psi.box_data);
    for (int n = 0; n < g.n_nodes(); ++n) {
      if (!g.active[n]) continue;
      const double* a = Psi.box_at(n);
      const double* d0 = D.d[0].data() + (size_t)n * kComps;
      const double* d1 = D.d[1].data() + (size_t)n * kComps;
      const double* d2 = D.d[2].data() + (size_t)n * kComps;
      double* o = out.box_at(n);
      for (int c = 0; c < 3; ++c) {
        int a1 = comp_index(0, c), a2 = comp_index(1, c), a3 = comp_index(2, c),
            ph = comp_index(3, c);
        o[a1] += d1[a3] - d2[a2] - d0[ph];
        o[a2] += d2[a1] - d0[a3] - d1[ph];
        o[a3] += d0[a2] - d1[a1] - d2[ph];
      }
      const double* A1 = a + comp_index(0, 0);
      const double* A2 = a + comp_index(1, 0);
      const double* A3 = a + comp_index(2, 0);
      const double* Ph = a + comp_index(3, 0);
      br_add(A2, A3, o + comp_index(0, 0), +1);
      br_add(A3, A1, o + comp_index(1, 0), +1);
      br_add(A1, A2, o + comp_index(2, 0), +1);
      br_add(A1, Ph, o + comp_index(0, 0), -1);
      br_add(A2, Ph, o + comp_index(1, 0), -1);
      br_add(A3, Ph, o + comp_index(2, 0), -1);
    }
  }
  return out;
}

double sup_norm(const ConfigField& f) {
  double m = 0;
  auto scan = [&](const Eigen::VectorXd& v, const std::vector<std::uint8_t>* act) {
    int nn = static_cast<int>(v.size() / kComps);
    for (int n = 0; n < nn; ++n) {
      if (act && !(*act)[n]) continue;
      const double* p = v.data() + (size_t)n * kComps;
      for (int slot = 0; slot < 4; ++slot) {
        double s2 = 0;
        for (int c = 0; c < 3; ++c) s2 += p[comp_index(slot, c)] * p[comp_index(slot, c)];
        m = std::max(m, std::sqrt(s2));
      }
    }
  };
  if (f.tube_data.size()) scan(f.tube_data, nullptr);
  if (f.box_data.size()) scan(f.box_data, &f.box->active);
  return m;
}

double sup_norm(const TwoFormField& f) {
  double m = 0;
  auto scan = [&](const Eigen::VectorXd& v, const std::vector<std::uint8_t>* act) {
    int nn = static_cast<int>(v.size() / 9);
    for (int n = 0; n < nn; ++n) {
      if (act && !(*act)[n]) continue;
      const double* p = v.data() + (size_t)n * 9;
      for (int slot = 0; slot < 3; ++slot) {
        double s2 = p[slot * 3] * p[slot * 3] + p[slot * 3 + 1] * p[slot * 3 + 1] +
                    p[slot * 3 + 2] * p[slot * 3 + 2];
        m = std::max(m, std::sqrt(s2));
      }
    }
  };
  if (f.tube_data.size()) scan(f.tube_data, nullptr);
  if (f.box_data.size()) scan(f.box_data, &f.box->active);
  return m;
}

// ---- pointwise probes -------------------------------------------------------

std::array<Mat2, 3> curvature_fd_at(const ConfigFn& fn, const Vec3& x, double h) {
  Mat2 dA[3][3];
  ConfigValue v0 = fn(x);
  for (int i = 0; i < 3; ++i) {
    Vec3 xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    ConfigValue vp = fn(xp), vm = fn(xm);
    for (int j = 0; j < 3; ++j) dA[i][j] = (vp.a[j] - vm.a[j]) / (2 * h);
  }
  std::array<Mat2, 3> F;
  F[0] = dA[1][2] - dA[2][1] + bracket(v0.a[1], v0.a[2]);
  F[1] = dA[2][0] - dA[0][2] + bracket(v0.a[2], v0.a[0]);
  F[2] = dA[0][1] - dA[1][0] + bracket(v0.a[0], v0.a[1]);
  return F;
}

std::array<Mat2, 3> residual_at(const ConfigFn& fn, const Vec3& x, double h) {
  std::array<Mat2, 3> F = curvature_fd_at(fn, x, h);
  ConfigValue v0 = fn(x);
  std::array<Mat2, 3> V;
  for (int k = 0; k < 3; ++k) {
    Vec3 xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    Mat2 dphi = (fn(xp).phi - fn(xm).phi) / (2 * h);
    V[k] = F[k] - (dphi + bracket(v0.a[k], v0.phi));
  }
  return V;
}

double sup_entry(const std::array<Mat2, 3>& m) {
  double r = 0;
  for (const auto& x : m) r = std::max(r, x.cwiseAbs().maxCoeff());
  return r;
}

namespace detail {

void tube_block_derivs(const TubeGrid& g, const Eigen::VectorXd& data, Scheme scheme,
                       Eigen::VectorXd& dr, Eigen::VectorXd& dt, Eigen::VectorXd& ds) {
  TubeDerivs d = tube_all_derivs(g, data, scheme);
  dr = std::move(d.dr);
  dt = std::move(d.dt);
  ds = std::move(d.ds);
}

void box_block_derivs(const BoxGrid& g, const Eigen::VectorXd& data, Eigen::VectorXd d[3]) {
  BoxDerivs b = box_all_derivs(g, data);
  for (int a = 0; a < 3; ++a) d[a] = std::move(b.d[a]);
}

}  // namespace detail

}  // namespace knotmono
