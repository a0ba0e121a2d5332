#include "knotmono/gluing.hpp"

#include <cmath>
#include <random>

#include "knotmono/operators.hpp"

namespace knotmono {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// orientation aligning the monopole far field -M sigma to +M sigma
Mat2 align_rotation() { return sigma2(); }
}  // namespace

Placement plan_placement(int n, double d, double R, double fiducial_M) {
  if (R < 10.0 * d) throw std::invalid_argument("plan_placement: R >= 10 d required");
  Placement p;
  p.d = d;
  p.R = R;
  if (n > 4) throw std::invalid_argument("plan_placement: cone partition supports n <= 4");
  double ring = 4.0 * R;
  for (int i = 0; i < n; ++i) {
    double ang = kTwoPi * i / std::max(1, n);
    Vec3 dir(std::cos(ang), std::sin(ang), 0.0);
    MonopolePose pose;
    pose.center = ring * dir;
    pose.mass = 2.0 * fiducial_M;
    pose.orientation = align_rotation();
    p.poses.push_back(pose);
    p.rays.push_back({pose.center, dir});
  }
  // audited disjointness: sampled minimization of pairwise distances
  double minsep = std::numeric_limits<double>::max();
  auto ray_point = [&](const Ray& r, double t) { return Vec3(r.origin + t * r.direction); };
  for (int i = 0; i < n; ++i) {
    // against the central ball B_R(O)
    minsep = std::min(minsep, p.rays[i].origin.norm() - R - R);
    for (int j = i + 1; j < n; ++j) {
      double dmin = std::numeric_limits<double>::max();
      for (int a = 0; a <= 64; ++a)
        for (int b = 0; b <= 64; ++b) {
          double ta = 40.0 * R * a / 64.0, tb = 40.0 * R * b / 64.0;
          dmin = std::min(dmin, (ray_point(p.rays[i], ta) - ray_point(p.rays[j], tb)).norm());
        }
      minsep = std::min(minsep, dmin - 2.0 * R);
    }
  }
  p.min_separation = (n > 0) ? minsep : 2.0 * R;
  if (n > 0 && p.min_separation <= 0)
    throw std::domain_error("plan_placement: R-neighborhoods intersect on the ring");
  return p;
}

double PartitionOfUnity::chi(int j, const Vec3& x) const {
  const Placement& p = *placement;
  int n = static_cast<int>(p.poses.size());
  if (j == 0) {
    double s = 1.0;
    for (int q = 1; q <= n; ++q) s -= chi(q, x);
    return s;
  }
  const Ray& ray = p.rays[j - 1];
  double dist = ray.distance_to(x);
  if (dist <= p.d) return 1.0;
  double r = x.norm();
  double band = std::max(p.R, 0.5 * r);
  if (dist >= band) return 0.0;
  double t = (dist - p.d) / (band - p.d);
  return 1.0 - smoothstep5(t);
}

Vec3 PartitionOfUnity::grad_chi(int j, const Vec3& x, double h) const {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    g[a] = (chi(j, xp) - chi(j, xm)) / (2 * h);
  }
  return g;
}

PartitionAudit audit_partition(const PartitionOfUnity& pu, unsigned seed, int n_samples) {
  const Placement& p = *pu.placement;
  PartitionAudit a;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0, 1);
  int n = static_cast<int>(p.poses.size());
  for (int s = 0; s < n_samples; ++s) {
    Vec3 x;
    if (s % 2 == 0 && n > 0) {
      // bias samples into the transition cones
      const Ray& ray = p.rays[s % n];
      double tau = 60.0 * p.R * uni(rng);
      double r_here = (ray.origin + tau * ray.direction).norm();
      double band = std::max(p.R, 0.5 * r_here);
      double dist = p.d + (band - p.d) * uni(rng);
      double ang = kTwoPi * uni(rng);
      Vec3 e1 = ray.direction.unitOrthogonal();
      Vec3 e2 = ray.direction.cross(e1);
      x = ray.origin + tau * ray.direction + dist * (std::cos(ang) * e1 + std::sin(ang) * e2);
    } else {
      x = 12.0 * p.R * Vec3(uni(rng) - 0.5, uni(rng) - 0.5, uni(rng) - 0.5);
      if (x.norm() < 0.1) x += Vec3(1, 0, 0);
    }
    double sum = 0;
    for (int q = 0; q <= n; ++q) sum += pu.chi(q, x);
    a.sum_dev = std::max(a.sum_dev, std::abs(1.0 - sum));
    double r = x.norm();
    for (int q = 1; q <= n; ++q) {
      double g = pu.grad_chi(q, x).norm();
      a.sup_grad_rln = std::max(a.sup_grad_rln, g * r);
      a.sup_grad_dr = std::max(a.sup_grad_dr, g * p.d * r);
    }
  }
  return a;
}

ConfigFn glued_field(const Placement& p, const FiducialParams& fp,
                     std::shared_ptr<const LinkingForm> omega) {
  ConfigFn fiducial = model_fiducial_fn(fp, omega);
  Placement pl = p;
  PartitionOfUnity pu;
  auto placement_copy = std::make_shared<Placement>(pl);
  return [placement_copy, fiducial, fp](const Vec3& x) {
    PartitionOfUnity pu;
    pu.placement = placement_copy.get();
    int n = static_cast<int>(placement_copy->poses.size());
    double chi0 = pu.chi(0, x);
    ConfigValue out;
    if (chi0 != 0.0) {
      ConfigValue f = fiducial(x);
      for (int k = 0; k < 3; ++k) out.a[k] = chi0 * f.a[k];
      out.phi = chi0 * f.phi;
    }
    for (int q = 1; q <= n; ++q) {
      double c = pu.chi(q, x);
      if (c == 0.0) continue;
      ConfigValue m = eval_monopole(placement_copy->poses[q - 1], x);
      for (int k = 0; k < 3; ++k) out.a[k] += c * m.a[k];
      out.phi += c * m.phi;
    }
    return out;
  };
}

AdmissibilityReport admissibility_report(const Placement& p, const FiducialParams& fp,
                                         std::shared_ptr<const LinkingForm> omega,
                                         double mu_target, unsigned seed) {
  AdmissibilityReport rep;
  rep.mu_target = mu_target;
  ConfigFn Psi = glued_field(p, fp, omega);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0, 1);
  int n = static_cast<int>(p.poses.size());

  // (1) |Phi| limit over far shells (in the normalization where the
  // monopole direction field is unit, the fiducial sits at 2 M)
  double want = 2.0 * fp.M;
  std::vector<double> shells = {12.0 * p.R, 24.0 * p.R, 48.0 * p.R};
  double mean_outer = 0, lo = 1e300, hi = -1e300;
  int cnt = 0;
  for (double r : shells)
    for (int s = 0; s < 40; ++s) {
      double mu = 2 * uni(rng) - 1, ang = kTwoPi * uni(rng);
      Vec3 dir(std::sqrt(1 - mu * mu) * std::cos(ang), std::sqrt(1 - mu * mu) * std::sin(ang), mu);
      double v = higgs_profile(Psi(r * dir).phi);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      if (r == shells.back()) {
        mean_outer += v;
        ++cnt;
      }
    }
  rep.phi_limit = mean_outer / std::max(1, cnt);
  rep.phi_spread = (hi - lo) / want;
  rep.pass_limit = std::abs(rep.phi_limit - want) / want < 0.05 && rep.phi_spread < 0.2;

  // (2) r^2 (|grad_A Phi| + |F|) across shells, structured directions so
  // every shell sees the same geometry relative to the rays
  rep.shell_r2F_min = 1e300;
  rep.shell_r2F_max = 0;
  std::vector<Vec3> dirs = {Vec3(0, 0, 1), Vec3(0.6, -0.5, 0.62).normalized(),
                            Vec3(-0.7, 0.1, 0.7).normalized()};
  for (int q = 0; q < n; ++q) {
    Vec3 rd = p.rays[q].direction;
    Vec3 e1 = rd.unitOrthogonal();
    for (double ang : {0.05, 0.15, 0.4, 1.0})
      dirs.push_back((std::cos(ang) * rd + std::sin(ang) * e1).normalized());
  }
  for (double r : {20.0 * p.R, 40.0 * p.R, 80.0 * p.R}) {
    double smax = 0;
    for (const Vec3& dir : dirs) {
      Vec3 x = r * dir;
      double h = 1e-4 * r;
      auto F = curvature_fd_at(Psi, x, h);
      ConfigValue v0 = Psi(x);
      double nf = 0;
      for (auto& m : F) nf = std::max(nf, knotmono::norm(m));
      double ngp = 0;
      for (int axis = 0; axis < 3; ++axis) {
        Vec3 xp = x, xm = x;
        xp[axis] += h;
        xm[axis] -= h;
        Mat2 dphi = (Psi(xp).phi - Psi(xm).phi) / (2 * h) + bracket(v0.a[axis], v0.phi);
        ngp = std::max(ngp, knotmono::norm(dphi));
      }
      smax = std::max(smax, r * r * (nf + ngp));
    }
    rep.shell_r2F_min = std::min(rep.shell_r2F_min, smax);
    rep.shell_r2F_max = std::max(rep.shell_r2F_max, smax);
  }
  rep.pass_decay =
      rep.shell_r2F_max < 8.0 * rep.shell_r2F_min + 1e-9 * fp.M * fp.M;

  // (3) Psi = Psi_hat on N_{100 delta}
  ConfigFn fid = model_fiducial_fn(fp, omega);
  double dev = 0;
  const FrameField& fr = omega->frame();
  for (int s = 0; s < 50; ++s) {
    TubularCoords c{fr.curve().length() * uni(rng),
                    std::min(100.0 * fp.delta, 0.8 * fr.curve().injectivity_radius()) * uni(rng) +
                        1e-3,
                    kTwoPi * uni(rng)};
    Vec3 x = to_cartesian(fr, c);
    ConfigValue a = Psi(x), b = fid(x);
    for (int k = 0; k < 3; ++k) dev = std::max(dev, (a.a[k] - b.a[k]).norm());
    dev = std::max(dev, (a.phi - b.phi).norm());
  }
  rep.fiducial_dev_on_tube = dev;
  rep.pass_fiducial = dev == 0.0;

  // (4) sup |V| over transition zones and bulk samples
  double sup = 0;
  auto probe = [&](const Vec3& x, double h) {
    sup = std::max(sup, sup_entry(residual_at(Psi, x, h)));
  };
  for (int q = 0; q < n; ++q) {
    const Ray& ray = p.rays[q];
    Vec3 e1 = ray.direction.unitOrthogonal();
    Vec3 e2 = ray.direction.cross(e1);
    for (int it = 0; it < 120; ++it) {
      double tau = (it % 2 == 0) ? 8.0 * p.R * uni(rng) : 60.0 * p.R * uni(rng);
      double r_here = (ray.origin + tau * ray.direction).norm();
      double band = std::max(p.R, 0.5 * r_here);
      double dist = p.d * 1.001 + (band - p.d) * uni(rng);
      double ang = kTwoPi * uni(rng);
      Vec3 x = ray.origin + tau * ray.direction + dist * (std::cos(ang) * e1 + std::sin(ang) * e2);
      probe(x, 2e-3 * std::max(1.0, dist));
    }
  }
  for (int it = 0; it < 60; ++it) {
    Vec3 x = 10.0 * p.R * Vec3(uni(rng) - 0.5, uni(rng) - 0.5, uni(rng) - 0.5);
    if (x.norm() < 3.0) x = Vec3(3.0, 1.0, 0.5);
    probe(x, 1e-2);
  }
  rep.sup_V = sup;
  rep.pass_mu = sup <= mu_target;
  return rep;
}

}  // namespace knotmono
