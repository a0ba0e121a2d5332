#include "knotmono/config_field.hpp"

#include <cmath>
#include <numbers>

namespace knotmono {

std::shared_ptr<TubeGrid> make_tube_grid(std::shared_ptr<const FrameField> frame, int n_s,
                                         int n_theta, int n_rho, double rho_min, double rho_max) {
  auto g = std::make_shared<TubeGrid>();
  g->frame = frame;
  g->n_s = n_s;
  g->n_theta = n_theta;
  g->n_rho = n_rho;
  g->length = frame->curve().length();
  g->rho_min = rho_min;
  g->rho_max = rho_max;
  g->rho.resize(n_rho);
  g->w_rho.assign(n_rho, 0.0);
  double u0 = std::log(rho_min), u1 = std::log(rho_max);
  double hu = (u1 - u0) / (n_rho - 1);
  for (int k = 0; k < n_rho; ++k) g->rho[k] = std::exp(u0 + hu * k);
  // \int f d rho = \int f(e^u) e^u du with the SBP norm as du-quadrature
  g->sbp_u = make_sbp42(n_rho, hu);
  for (int k = 0; k < n_rho; ++k) g->w_rho[k] = g->sbp_u.H[k] * g->rho[k];
  g->w_theta = 2.0 * std::numbers::pi / n_theta;
  g->w_s = g->length / n_s;
  return g;
}

std::shared_ptr<BoxGrid> make_box_grid(std::shared_ptr<const FrameField> frame, const Vec3& lo,
                                       const Vec3& hi, int n_axis, double rho_cut) {
  auto g = std::make_shared<BoxGrid>();
  g->frame = frame;
  g->lo = lo;
  g->h = (hi[0] - lo[0]) / (n_axis - 1);
  g->n = Eigen::Vector3i(n_axis, std::max(2, (int)std::lround((hi[1] - lo[1]) / g->h)) + 1,
                         std::max(2, (int)std::lround((hi[2] - lo[2]) / g->h)) + 1);
  g->n[1] = std::min(g->n[1], n_axis);
  g->n[2] = std::min(g->n[2], n_axis);
  g->rho_cut = rho_cut;
  g->rho.assign(g->n_nodes(), std::numeric_limits<double>::infinity());
  g->active.assign(g->n_nodes(), 1);
  double inj = frame->curve().injectivity_radius();
  for (int i = 0; i < g->n[0]; ++i)
    for (int j = 0; j < g->n[1]; ++j)
      for (int k = 0; k < g->n[2]; ++k) {
        Vec3 x = g->point(i, j, k);
        int id = g->node(i, j, k);
        // cheap pre-check before the Newton projection
        double d_coarse = std::numeric_limits<double>::max();
        const KnotCurve& c = frame->curve();
        for (int q = 0; q < 64; ++q)
          d_coarse = std::min(d_coarse, (x - c.point(c.length() * q / 64)).norm());
        if (d_coarse > 0.9 * inj + 2.0 * c.length() / 64) {
          g->rho[id] = d_coarse;
          continue;
        }
        try {
          g->rho[id] = from_cartesian(*frame, x).rho;
        } catch (const std::domain_error&) {
          g->rho[id] = d_coarse;
        }
        if (g->rho[id] < rho_cut) g->active[id] = 0;
      }
  return g;
}

ConfigField ConfigField::zeros(std::shared_ptr<const TubeGrid> t, std::shared_ptr<const BoxGrid> b) {
  ConfigField f;
  f.tube = std::move(t);
  f.box = std::move(b);
  if (f.tube) f.tube_data = Eigen::VectorXd::Zero(kComps * f.tube->n_nodes());
  if (f.box) f.box_data = Eigen::VectorXd::Zero(kComps * f.box->n_nodes());
  return f;
}

ConfigField& ConfigField::operator+=(const ConfigField& o) {
  if (tube_data.size() && o.tube_data.size()) tube_data += o.tube_data;
  if (box_data.size() && o.box_data.size()) box_data += o.box_data;
  return *this;
}
ConfigField& ConfigField::operator-=(const ConfigField& o) {
  if (tube_data.size() && o.tube_data.size()) tube_data -= o.tube_data;
  if (box_data.size() && o.box_data.size()) box_data -= o.box_data;
  return *this;
}
ConfigField& ConfigField::operator*=(double c) {
  if (tube_data.size()) tube_data *= c;
  if (box_data.size()) box_data *= c;
  return *this;
}
double ConfigField::dot_plain(const ConfigField& o) const {
  double r = 0;
  if (tube_data.size()) r += tube_data.dot(o.tube_data);
  if (box_data.size()) r += box_data.dot(o.box_data);
  return r;
}

void tube_coframe(const FrameField& frame, double s, double theta, Vec3 out[3]) {
  Vec3 e1v = frame.e1(s), e2v = frame.e2(s), t = frame.curve().deriv(s);
  Vec3 er = std::cos(theta) * e1v + std::sin(theta) * e2v;   // d rho
  Vec3 et = -std::sin(theta) * e1v + std::cos(theta) * e2v;  // rho d theta
  out[0] = er;
  out[1] = et;
  out[2] = t;  // ds
}

ConfigField sample_config(std::shared_ptr<const TubeGrid> tube, std::shared_ptr<const BoxGrid> box,
                          const ConfigFn& fn) {
  ConfigField f = ConfigField::zeros(tube, box);
  if (tube) {
    const FrameField& fr = *tube->frame;
    for (int i = 0; i < tube->n_s; ++i)
      for (int j = 0; j < tube->n_theta; ++j) {
        double s = tube->s_of(i), th = tube->theta_of(j);
        Vec3 co[3];
        tube_coframe(fr, s, th, co);
        for (int k = 0; k < tube->n_rho; ++k) {
          Vec3 x = to_cartesian(fr, {s, tube->rho[k], th});
          ConfigValue v = fn(x);
          double* d = f.tube_at(tube->node(i, j, k));
          for (int slot = 0; slot < 3; ++slot) {
            // coframe component: a(frame vector) = sum_j a_j <dx_j, e_slot>
            Mat2 comp = co[slot][0] * v.a[0] + co[slot][1] * v.a[1] + co[slot][2] * v.a[2];
            Vec3 cf = su2_coeffs(comp);
            for (int c = 0; c < 3; ++c) d[comp_index(slot, c)] = cf[c];
          }
          Vec3 cf = su2_coeffs(v.phi);
          for (int c = 0; c < 3; ++c) d[comp_index(3, c)] = cf[c];
        }
      }
  }
  if (box) {
    for (int i = 0; i < box->n[0]; ++i)
      for (int j = 0; j < box->n[1]; ++j)
        for (int k = 0; k < box->n[2]; ++k) {
          int id = box->node(i, j, k);
          if (!box->active[id]) continue;
          ConfigValue v = fn(box->point(i, j, k));
          double* d = f.box_at(id);
          for (int slot = 0; slot < 3; ++slot) {
            Vec3 cf = su2_coeffs(v.a[slot]);
            for (int c = 0; c < 3; ++c) d[comp_index(slot, c)] = cf[c];
          }
          Vec3 cf = su2_coeffs(v.phi);
          for (int c = 0; c < 3; ++c) d[comp_index(3, c)] = cf[c];
        }
  }
  return f;
}

}  // namespace knotmono
