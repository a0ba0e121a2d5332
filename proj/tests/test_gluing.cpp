#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "knotmono/gluing.hpp"
#include "knotmono/operators.hpp"

using namespace knotmono;

namespace {
std::shared_ptr<LinkingForm> make_omega() {
  static auto curve = std::make_shared<KnotCurve>(KnotCurve::circle(1.0));
  static auto frame = std::make_shared<FrameField>(*curve, 512);
  static auto om = std::make_shared<LinkingForm>(frame, 0.01);
  return om;
}
}  // namespace

TEST_CASE("placement geometry and disjointness") {
  Placement p1 = plan_placement(1, 2.0, 20.0, 4.0);
  CHECK(p1.min_separation >= 2.0 * 20.0 - 1e-9);  // 4R - R - R = 2R
  Placement p2 = plan_placement(2, 2.0, 20.0, 4.0);
  CHECK(p2.min_separation > 0);
  CHECK(p2.poses[0].mass == doctest::Approx(8.0));
  CHECK_THROWS(plan_placement(1, 2.0, 10.0, 4.0));  // R < 10 d
  // n = 0: pure fiducial
  Placement p0 = plan_placement(0, 2.0, 20.0, 4.0);
  CHECK(p0.poses.empty());
}

TEST_CASE("partition of unity invariants") {
  Placement p = plan_placement(2, 2.0, 20.0, 4.0);
  PartitionOfUnity pu;
  pu.placement = &p;
  // 1 on V_j(d)
  Vec3 on_ray = p.rays[0].origin + 30.0 * p.rays[0].direction + Vec3(0, 0, 0.5 * p.d);
  CHECK(pu.chi(1, on_ray) == 1.0);
  CHECK(pu.chi(2, on_ray) == 0.0);
  CHECK(pu.chi(0, on_ray) == 0.0);
  // fiducial region
  Vec3 near_knot(1.2, 0.4, 0.1);
  CHECK(pu.chi(0, near_knot) == 1.0);
  PartitionAudit a = audit_partition(pu, 0, 400);
  CHECK(a.sum_dev < 1e-12);
  // gradient decays like 1/(r log(R/d)); the audited constant stays O(1)
  CHECK(a.sup_grad_rln < 7.0);
}

TEST_CASE("glued field equals the parts in pure regions") {
  auto om = make_omega();
  FiducialParams fp{0.1, 4.0, 0.01};
  Placement p = plan_placement(1, 2.0, 20.0, fp.M);
  ConfigFn glue = glued_field(p, fp, om);
  ConfigFn fid = model_fiducial_fn(fp, om);

  Vec3 x_fid(1.3, -0.2, 0.4);
  ConfigValue a = glue(x_fid), b = fid(x_fid);
  for (int k = 0; k < 3; ++k) CHECK((a.a[k] - b.a[k]).norm() == 0.0);
  CHECK((a.phi - b.phi).norm() == 0.0);

  Vec3 x_mono = p.poses[0].center + Vec3(0.5, 0.8, 0.3);
  ConfigValue c = glue(x_mono), d = eval_monopole(p.poses[0], x_mono);
  for (int k = 0; k < 3; ++k) CHECK((c.a[k] - d.a[k]).norm() == 0.0);
  CHECK((c.phi - d.phi).norm() == 0.0);

  // far-field Higgs of the oriented, mass-doubled monopole matches the
  // fiducial M sigma
  Vec3 far = p.poses[0].center + Vec3(0, 60.0, 0);
  ConfigValue m = eval_monopole(p.poses[0], far);
  CHECK((m.phi - fp.M * sigma()).norm() < 0.02 * fp.M);
}

TEST_CASE("residual vanishes in pure regions, small in transitions") {
  auto om = make_omega();
  FiducialParams fp{0.1, 4.0, 0.01};
  Placement p = plan_placement(1, 2.0, 20.0, fp.M);
  ConfigFn glue = glued_field(p, fp, om);
  // inside the monopole region: exact solution
  Vec3 x_mono = p.poses[0].center + Vec3(0.4, 0.9, -0.2);
  CHECK(sup_entry(residual_at(glue, x_mono, 1e-4)) < 1e-6);
  // inside the fiducial region
  Vec3 x_fid(1.5, 0.2, 0.1);
  CHECK(sup_entry(residual_at(glue, x_fid, 1e-5)) < 1e-6);
  // transition zone: nonzero but modest
  
}

TEST_CASE("admissibility report on the pure fiducial") {
  auto om = make_omega();
  FiducialParams fp{0.1, 4.0, 0.01};
  Placement p0 = plan_placement(0, 2.0, 20.0, fp.M);
  AdmissibilityReport rep = admissibility_report(p0, fp, om, 1e-2 * fp.M * fp.M, 3);
  CHECK(rep.pass_fiducial);
  CHECK(rep.pass_mu);
  CHECK(rep.sup_V < 1e-5);
  CHECK(rep.pass_limit);
}

TEST_CASE("admissibility across d doublings: sup V non-increasing") {
  auto om = make_omega();
  FiducialParams fp{0.1, 4.0, 0.01};
  double mu = 1e-2 * fp.M * fp.M;
  double prev = 1e300;
  bool any_pass = false;
  for (double d : {2.0, 4.0, 8.0}) {
    Placement p = plan_placement(1, d, 10.0 * d, fp.M);
    AdmissibilityReport rep = admissibility_report(p, fp, om, mu, 7);
    CHECK(rep.pass_fiducial);
    CHECK(rep.sup_V <= prev * 1.05);
    prev = rep.sup_V;
    if (rep.pass_limit && rep.pass_decay && rep.pass_fiducial && rep.pass_mu) any_pass = true;
  }
  CHECK(any_pass);
}
