#include "knotmono/norms.hpp"

#include <cmath>

namespace knotmono {

double norm2_L2N(const ConfigField& f, double eps) {
  if (!f.tube) return 0;
  const TubeGrid& g = *f.tube;
  double acc = 0;
  for (int n = 0; n < g.n_nodes(); ++n) {
    int k = n % g.n_rho;
    double rho = g.rho[k];
    if (rho > eps * (1 + 1e-12)) continue;
    acc += g.w_s * g.w_theta * g.w_rho[k] * rho * rho * node_norm2(f.tube_at(n));
  }
  return acc;
}

// d/dtheta of the fixed-basis components: on the 1-form rho/theta slots the
// coframe rotation adds the mixing (dt_rho - slot_theta, dt_theta + slot_rho)
inline double theta_eff(const double* p, const double* pt, int slot, int c) {
  int i = comp_index(slot, c);
  if (slot == 0) return pt[i] - p[comp_index(1, c)];
  if (slot == 1) return pt[i] + p[comp_index(0, c)];
  return pt[i];
}

double norm2_HtildeN(const ConfigField& f, double eps, Scheme scheme) {
  if (!f.tube) return 0;
  const TubeGrid& g = *f.tube;
  Eigen::VectorXd dr, dt, ds;
  detail::tube_block_derivs(g, f.tube_data, scheme, dr, dt, ds);
  double acc = 0;
  for (int n = 0; n < g.n_nodes(); ++n) {
    int k = n % g.n_rho;
    double rho = g.rho[k];
    if (rho > eps * (1 + 1e-12)) continue;
    const double* p = f.tube_at(n);
    const double* pr = dr.data() + (size_t)n * kComps;
    const double* pt = dt.data() + (size_t)n * kComps;
    const double* ps = ds.data() + (size_t)n * kComps;
    double grad2 = 0, perp2 = 0;
    for (int slot = 0; slot < 4; ++slot)
      for (int c = 0; c < 3; ++c) {
        int i = comp_index(slot, c);
        double te = theta_eff(p, pt, slot, c);
        grad2 += rho * rho * (pr[i] * pr[i] + ps[i] * ps[i]) + te * te;
        if (c != 0) perp2 += p[i] * p[i];  // sigma is the first basis vector
      }
    acc += g.w_s * g.w_theta * g.w_rho[k] * (grad2 + perp2);
  }
  return acc;
}

double norm2_HN(const ConfigField& f, double eps, const FiducialParams& fp, Scheme scheme) {
  if (!f.tube) return 0;
  const TubeGrid& g = *f.tube;
  Eigen::VectorXd dr, dt, ds;
  detail::tube_block_derivs(g, f.tube_data, scheme, dr, dt, ds);
  double acc = 0;
  for (int n = 0; n < g.n_nodes(); ++n) {
    int k = n % g.n_rho;
    double rho = g.rho[k];
    if (rho > eps * (1 + 1e-12)) continue;
    const double* p = f.tube_at(n);
    const double* pr = dr.data() + (size_t)n * kComps;
    const double* pt = dt.data() + (size_t)n * kComps;
    const double* ps = ds.data() + (size_t)n * kComps;
    double val = 0;
    for (int slot = 0; slot < 4; ++slot) {
      // [sigma, X] in coefficients: 2(e1 x x) = 2(0, -x3, x2)
      double x1 = p[comp_index(slot, 0)], x2 = p[comp_index(slot, 1)],
             x3 = p[comp_index(slot, 2)];
      double b1 = 0, b2 = -2 * x3, b3 = 2 * x2;
      double t1 = theta_eff(p, pt, slot, 0) + fp.gamma * b1;
      double t2 = theta_eff(p, pt, slot, 1) + fp.gamma * b2;
      double t3 = theta_eff(p, pt, slot, 2) + fp.gamma * b3;
      for (int c = 0; c < 3; ++c) {
        int i = comp_index(slot, c);
        val += rho * rho * (pr[i] * pr[i] + ps[i] * ps[i]);
      }
      val += t1 * t1 + t2 * t2 + t3 * t3;
      val += rho * rho * fp.M * fp.M * (b1 * b1 + b2 * b2 + b3 * b3);
    }
    acc += g.w_s * g.w_theta * g.w_rho[k] * val;
  }
  return acc;
}

double norm2_L2eps(const ConfigField& f, double eps) {
  double acc = 0;
  if (f.tube) {
    const TubeGrid& g = *f.tube;
    for (int n = 0; n < g.n_nodes(); ++n) {
      int k = n % g.n_rho;
      double rho = g.rho[k];
      acc += g.w_s * g.w_theta * g.w_rho[k] * rho * std::min(rho, eps) * node_norm2(f.tube_at(n));
    }
  }
  if (f.box) {
    const BoxGrid& g = *f.box;
    double h3 = g.h * g.h * g.h;
    for (int n = 0; n < g.n_nodes(); ++n) {
      if (!g.active[n]) continue;
      acc += h3 * std::min(g.rho[n], eps) * node_norm2(f.box_at(n));
    }
  }
  return acc;
}

double norm2_Heps(const ConfigField& f, double eps, const ConfigField& bg, Scheme scheme) {
  double acc = 0;
  if (f.tube) {
    const TubeGrid& g = *f.tube;
    Eigen::VectorXd dr, dt, ds;
    detail::tube_block_derivs(g, f.tube_data, scheme, dr, dt, ds);
    for (int n = 0; n < g.n_nodes(); ++n) {
      int k = n % g.n_rho;
      double rho = g.rho[k];
      const double* p = f.tube_at(n);
      const double* B = bg.tube_at(n);
      const double* d[3] = {dr.data() + (size_t)n * kComps, dt.data() + (size_t)n * kComps,
                            ds.data() + (size_t)n * kComps};
      double val = 0;
      for (int slot = 0; slot < 4; ++slot) {
        const double* x = p + comp_index(slot, 0);
        for (int dir = 0; dir < 3; ++dir) {
          // nabla_dir = (d_rho, (1/rho) d_theta, d_s) + [A_dir, .] on the
          // fixed-basis components
          double cov[3] = {d[dir][comp_index(slot, 0)], d[dir][comp_index(slot, 1)],
                           d[dir][comp_index(slot, 2)]};
          if (dir == 1) {
            for (int c = 0; c < 3; ++c) cov[c] = theta_eff(p, d[1], slot, c) / rho;
          }
          const double* A = B + comp_index(dir, 0);
          cov[0] += 2 * (A[1] * x[2] - A[2] * x[1]);
          cov[1] += 2 * (A[2] * x[0] - A[0] * x[2]);
          cov[2] += 2 * (A[0] * x[1] - A[1] * x[0]);
          val += cov[0] * cov[0] + cov[1] * cov[1] + cov[2] * cov[2];
        }
        const double* Ph = B + comp_index(3, 0);
        double b[3] = {2 * (Ph[1] * x[2] - Ph[2] * x[1]), 2 * (Ph[2] * x[0] - Ph[0] * x[2]),
                       2 * (Ph[0] * x[1] - Ph[1] * x[0])};
        val += b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
      }
      acc += g.w_s * g.w_theta * g.w_rho[k] * rho * std::min(rho, eps) * val;
    }
  }
  if (f.box) {
    const BoxGrid& g = *f.box;
    Eigen::VectorXd d[3];
    detail::box_block_derivs(g, f.box_data, d);
    double h3 = g.h * g.h * g.h;
    for (int n = 0; n < g.n_nodes(); ++n) {
      if (!g.active[n]) continue;
      const double* p = f.box_at(n);
      const double* B = bg.box_at(n);
      double val = 0;
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
          val += cov[0] * cov[0] + cov[1] * cov[1] + cov[2] * cov[2];
        }
        const double* Ph = B + comp_index(3, 0);
        double b[3] = {2 * (Ph[1] * x[2] - Ph[2] * x[1]), 2 * (Ph[2] * x[0] - Ph[0] * x[2]),
                       2 * (Ph[0] * x[1] - Ph[1] * x[0])};
        val += b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
      }
      acc += h3 * std::min(g.rho[n], eps) * val;
    }
  }
  return acc;
}

double boundary_norm2(const ConfigField& f, double rho0, int part) {
  if (!f.tube) return 0;
  const TubeGrid& g = *f.tube;
  // locate rho0 in log space
  double u = std::log(rho0);
  double u0 = std::log(g.rho_min), u1 = std::log(g.rho_max);
  double x = (u - u0) / (u1 - u0) * (g.n_rho - 1);
  int k0 = std::clamp((int)std::floor(x), 0, g.n_rho - 2);
  double fr = std::clamp(x - k0, 0.0, 1.0);
  double acc = 0;
  for (int i = 0; i < g.n_s; ++i)
    for (int j = 0; j < g.n_theta; ++j) {
      const double* pa = f.tube_at(g.node(i, j, k0));
      const double* pb = f.tube_at(g.node(i, j, k0 + 1));
      double v2 = 0;
      for (int slot = 0; slot < 4; ++slot)
        for (int c = 0; c < 3; ++c) {
          if (part == 1 && c != 0) continue;
          if (part == 2 && c == 0) continue;
          int q = comp_index(slot, c);
          double val = pa[q] * (1 - fr) + pb[q] * fr;
          v2 += val * val;
        }
      acc += v2;
    }
  return acc * rho0 * g.w_s * g.w_theta;
}

void split_field(const ConfigField& f, ConfigField* par, ConfigField* perp) {
  auto work = [&](const Eigen::VectorXd& src, Eigen::VectorXd* pp, Eigen::VectorXd* qq) {
    for (int n = 0; n < (int)(src.size() / kComps); ++n)
      for (int slot = 0; slot < 4; ++slot)
        for (int c = 0; c < 3; ++c) {
          int i = (int)((size_t)n * kComps + comp_index(slot, c));
          if (pp) (*pp)[i] = (c == 0) ? src[i] : 0.0;
          if (qq) (*qq)[i] = (c == 0) ? 0.0 : src[i];
        }
  };
  if (par) *par = ConfigField::zeros(f.tube, f.box);
  if (perp) *perp = ConfigField::zeros(f.tube, f.box);
  if (f.tube_data.size())
    work(f.tube_data, par ? &par->tube_data : nullptr, perp ? &perp->tube_data : nullptr);
  if (f.box_data.size())
    work(f.box_data, par ? &par->box_data : nullptr, perp ? &perp->box_data : nullptr);
}

Eigen::VectorXd l2eps_node_weights_tube(const TubeGrid& g, double eps) {
  Eigen::VectorXd w(g.n_nodes());
  for (int n = 0; n < g.n_nodes(); ++n) {
    int k = n % g.n_rho;
    double rho = g.rho[k];
    w[n] = g.w_s * g.w_theta * g.w_rho[k] * rho * std::min(rho, eps);
  }
  return w;
}

Eigen::VectorXd l2eps_node_weights_box(const BoxGrid& g, double eps) {
  Eigen::VectorXd w(g.n_nodes());
  double h3 = g.h * g.h * g.h;
  for (int n = 0; n < g.n_nodes(); ++n)
    w[n] = g.active[n] ? h3 * std::min(g.rho[n], eps) : 0.0;
  return w;
}

}  // namespace knotmono
