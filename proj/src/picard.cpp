#include "knotmono/picard.hpp"

#include <cmath>

namespace knotmono {

namespace {

ConfigField weighted(const ConfigField& f, const Eigen::VectorXd& wt, const Eigen::VectorXd& wb) {
  ConfigField g = f;
  if (g.tube)
    for (int n = 0; n < g.tube->n_nodes(); ++n)
      for (int c = 0; c < kComps; ++c) g.tube_at(n)[c] *= wt[n];
  if (g.box)
    for (int n = 0; n < g.box->n_nodes(); ++n)
      for (int c = 0; c < kComps; ++c) g.box_at(n)[c] *= wb[n];
  return g;
}

}  // namespace

LinearOperatorHandle assemble_operator(const ConfigField& Psi, const FiducialParams& fp,
                                       double eps, Scheme scheme) {
  LinearOperatorHandle h;
  h.Psi = Psi;
  h.fp = fp;
  h.eps = eps;
  h.scheme = scheme;
  if (Psi.tube) h.sqw_tube = l2eps_node_weights_tube(*Psi.tube, eps).cwiseSqrt();
  if (Psi.box) h.sqw_box = l2eps_node_weights_box(*Psi.box, eps).cwiseSqrt();

  // column-scaling preconditioner from a structural estimate of
  // diag(L^T W L): derivative stencil weights at the local spacing plus the
  // background mass terms
  if (Psi.tube) {
    const TubeGrid& g = *Psi.tube;
    h.pc_tube.resize(g.n_nodes());
    double hu = g.sbp_u.h;
    double hth = 2.0 * std::numbers::pi / g.n_theta;
    double hs = g.length / g.n_s;
    for (int n = 0; n < g.n_nodes(); ++n) {
      double rho = g.rho[n % g.n_rho];
      const double* B = Psi.tube_at(n);
      double m2 = 0;
      for (int slot = 0; slot < 4; ++slot)
        for (int c = 0; c < 3; ++c) m2 += 4.0 * B[comp_index(slot, c)] * B[comp_index(slot, c)];
      double w = h.sqw_tube[n] * h.sqw_tube[n];
      double d = w * (2.0 / (rho * hu * rho * hu) + 1.0 / (rho * hth * rho * hth) +
                      1.0 / (hs * hs) + m2 + 1.0);
      h.pc_tube[n] = 1.0 / std::sqrt(d);
    }
  }
  if (Psi.box) {
    const BoxGrid& g = *Psi.box;
    h.pc_box.resize(g.n_nodes());
    for (int n = 0; n < g.n_nodes(); ++n) {
      if (!g.active[n]) {
        h.pc_box[n] = 0;
        continue;
      }
      const double* B = Psi.box_at(n);
      double m2 = 0;
      for (int slot = 0; slot < 4; ++slot)
        for (int c = 0; c < 3; ++c) m2 += 4.0 * B[comp_index(slot, c)] * B[comp_index(slot, c)];
      double w = h.sqw_box[n] * h.sqw_box[n];
      double d = w * (3.0 / (g.h * g.h) + m2 + 1.0);
      h.pc_box[n] = 1.0 / std::sqrt(d);
    }
  }
  return h;
}

ConfigField LinearOperatorHandle::apply(const ConfigField& psi, bool dagger) const {
  return apply_extended(Psi, psi, dagger, scheme);
}
ConfigField LinearOperatorHandle::apply_transpose(const ConfigField& w, bool dagger) const {
  return apply_extended_transpose(Psi, w, dagger, scheme);
}

double LinearOperatorHandle::l2eps_dot(const ConfigField& a, const ConfigField& b) const {
  double acc = 0;
  if (a.tube)
    for (int n = 0; n < a.tube->n_nodes(); ++n) {
      double w = sqw_tube[n] * sqw_tube[n];
      const double* pa = a.tube_at(n);
      const double* pb = b.tube_at(n);
      for (int c = 0; c < kComps; ++c) acc += w * pa[c] * pb[c];
    }
  if (a.box)
    for (int n = 0; n < a.box->n_nodes(); ++n) {
      double w = sqw_box[n] * sqw_box[n];
      const double* pa = a.box_at(n);
      const double* pb = b.box_at(n);
      for (int c = 0; c < kComps; ++c) acc += w * pa[c] * pb[c];
    }
  return acc;
}

SolveResult solve_linear(const LinearOperatorHandle& h, const ConfigField& rhs_in, double tol,
                         int max_iter, const std::vector<ConfigField>* cokernel) {
  // CGLS on min || sqrt(W) (L psi - rhs) ||_2
  SolveResult out;
  ConfigField rhs = rhs_in;
  if (cokernel)
    for (const ConfigField& e : *cokernel) {
      double c = h.l2eps_dot(rhs, e) / std::max(1e-300, h.l2eps_dot(e, e));
      ConfigField tmp = e;
      tmp *= c;
      rhs -= tmp;
    }

  // preconditioned CGLS: columns scaled by pc, x = pc .* y
  auto A = [&](const ConfigField& x) {
    return weighted(h.apply(weighted(x, h.pc_tube, h.pc_box)), h.sqw_tube, h.sqw_box);
  };
  auto At = [&](const ConfigField& r) {
    return weighted(h.apply_transpose(weighted(r, h.sqw_tube, h.sqw_box)), h.pc_tube, h.pc_box);
  };

  ConfigField b = weighted(rhs, h.sqw_tube, h.sqw_box);
  double bnorm = std::sqrt(b.dot_plain(b));
  out.psi = ConfigField::zeros(rhs.tube, rhs.box);
  if (bnorm < 1e-300) {
    out.converged = true;
    out.rel_residual = 0;
    return out;
  }
  ConfigField y = ConfigField::zeros(rhs.tube, rhs.box);
  ConfigField r = b;
  ConfigField s = At(r);
  ConfigField p = s;
  double gamma = s.dot_plain(s);
  double g0 = gamma;
  int it = 0;
  for (; it < max_iter; ++it) {
    ConfigField q = A(p);
    double qn = q.dot_plain(q);
    if (qn < 1e-300) break;
    double alpha = gamma / qn;
    ConfigField tmp = p;
    tmp *= alpha;
    y += tmp;
    tmp = q;
    tmp *= alpha;
    r -= tmp;
    double rn = std::sqrt(r.dot_plain(r));
    if (rn / bnorm <= tol) {
      out.converged = true;
      ++it;
      break;
    }
    s = At(r);
    double gnew = s.dot_plain(s);
    if (gnew < 1e-28 * g0) break;  // normal equations stagnated
    double beta = gnew / gamma;
    gamma = gnew;
    tmp = p;
    tmp *= beta;
    p = s;
    p += tmp;
  }
  out.psi = weighted(y, h.pc_tube, h.pc_box);
  out.iterations = it;
  ConfigField res = h.apply(out.psi);
  res -= rhs;
  out.rel_residual = std::sqrt(h.l2eps_dot(res, res) / h.l2eps_dot(rhs, rhs));
  if (out.rel_residual <= tol * 1.5) out.converged = true;
  double hn = norm2_Heps(out.psi, h.eps, h.Psi, h.scheme);
  out.c_emp = std::sqrt(hn / h.l2eps_dot(rhs, rhs));
  return out;
}

namespace {

ConfigField negate_oneform(const ConfigField& V) {
  // RHS for the extended solve: 1-form slots = -V, gauge row target 0
  ConfigField rhs = V;
  rhs *= -1.0;
  auto zero_phi = [&](Eigen::VectorXd& d) {
    for (int n = 0; n < (int)(d.size() / kComps); ++n)
      for (int c = 0; c < 3; ++c) d[(size_t)n * kComps + comp_index(3, c)] = 0.0;
  };
  if (rhs.tube_data.size()) zero_phi(rhs.tube_data);
  if (rhs.box_data.size()) zero_phi(rhs.box_data);
  return rhs;
}

}  // namespace

std::pair<ConfigField, IterationTrace> picard_iterate(const LinearOperatorHandle& h,
                                                      const ConfigField& psi0,
                                                      const PicardOptions& opt) {
  IterationTrace trace;
  ConfigField total = psi0;
  ConfigField state = h.Psi;
  state += psi0;
  ConfigField V = bogomolny_residual(state, h.scheme);
  double v0 = std::sqrt(h.l2eps_dot(V, V));
  double prev_norm = 0;
  int slow = 0;
  for (int n = 1; n <= opt.n_max; ++n) {
    ConfigField rhs = negate_oneform(V);
    // gauge row drives * d_A * a + [Phi, phi] of the accumulated correction to 0
    ConfigField gf = gauge_functional(h.Psi, total, h.scheme);
    if (gf.tube_data.size()) rhs.tube_data -= gf.tube_data;
    if (gf.box_data.size()) rhs.box_data -= gf.box_data;
    SolveResult sol = solve_linear(h, rhs, opt.solve_tol, opt.solve_max_iter);
    total += sol.psi;
    state = h.Psi;
    state += total;
    V = bogomolny_residual(state, h.scheme);
    IterationStep st;
    st.n = n;
    st.psi_norm = std::sqrt(norm2_Heps(sol.psi, h.eps, h.Psi, h.scheme));
    st.v_norm = std::sqrt(h.l2eps_dot(V, V));
    ConfigField gfn = gauge_functional(h.Psi, total, h.scheme);
    st.gauge_norm = std::sqrt(h.l2eps_dot(gfn, gfn));
    st.solve_residual = sol.rel_residual;
    st.ratio = (prev_norm > 0) ? st.psi_norm / prev_norm : 0.0;
    prev_norm = st.psi_norm;
    trace.steps.push_back(st);
    if (st.v_norm <= opt.tol_rel * v0) {
      trace.converged = true;
      trace.stop_reason = "residual tolerance reached";
      break;
    }
    if (n >= 3 && st.ratio > opt.contraction_guard) {
      if (++slow >= 3) {
        trace.stop_reason = "contraction failure";
        break;
      }
    } else {
      slow = 0;
    }
  }
  if (trace.stop_reason.empty()) trace.stop_reason = "step limit";
  return {total, trace};
}

ProjectedResult picard_project(const LinearOperatorHandle& h, const ConfigField& psi0,
                               const std::vector<ConfigField>& cokernel,
                               const PicardOptions& opt) {
  ProjectedResult out;
  IterationTrace& trace = out.trace;
  ConfigField total = psi0;
  ConfigField state = h.Psi;
  state += psi0;
  ConfigField V = bogomolny_residual(state, h.scheme);
  double v0 = std::sqrt(h.l2eps_dot(V, V));
  double prev_norm = 0;
  for (int n = 1; n <= opt.n_max; ++n) {
    ConfigField rhs = negate_oneform(V);
    ConfigField gf = gauge_functional(h.Psi, total, h.scheme);
    if (gf.tube_data.size()) rhs.tube_data -= gf.tube_data;
    if (gf.box_data.size()) rhs.box_data -= gf.box_data;
    SolveResult sol = solve_linear(h, rhs, opt.solve_tol, opt.solve_max_iter, &cokernel);
    total += sol.psi;
    state = h.Psi;
    state += total;
    V = bogomolny_residual(state, h.scheme);
    IterationStep st;
    st.n = n;
    st.psi_norm = std::sqrt(norm2_Heps(sol.psi, h.eps, h.Psi, h.scheme));
    st.v_norm = std::sqrt(h.l2eps_dot(V, V));
    st.solve_residual = sol.rel_residual;
    st.ratio = (prev_norm > 0) ? st.psi_norm / prev_norm : 0.0;
    prev_norm = st.psi_norm;
    trace.steps.push_back(st);
    // converged when the off-cokernel part of V is small
    ConfigField Vp = V;
    for (const ConfigField& e : cokernel) {
      double c = h.l2eps_dot(Vp, e) / std::max(1e-300, h.l2eps_dot(e, e));
      ConfigField tmp = e;
      tmp *= c;
      Vp -= tmp;
    }
    if (std::sqrt(h.l2eps_dot(Vp, Vp)) <= opt.tol_rel * std::max(v0, 1e-300)) {
      trace.converged = true;
      trace.stop_reason = "projected residual tolerance reached";
      break;
    }
  }
  if (trace.stop_reason.empty()) trace.stop_reason = "step limit";
  out.correction = total;
  out.obstruction = ConfigField::zeros(V.tube, V.box);
  for (const ConfigField& e : cokernel) {
    double c = h.l2eps_dot(V, e) / std::max(1e-300, h.l2eps_dot(e, e));
    out.obstruction_coeffs.push_back(c);
    ConfigField tmp = e;
    tmp *= c;
    out.obstruction += tmp;
  }
  return out;
}

}  // namespace knotmono
