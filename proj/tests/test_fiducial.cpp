#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "knotmono/fiducial.hpp"

using namespace knotmono;

namespace {
std::mt19937_64 rng(2024);
double rnd() {
  std::normal_distribution<double> g;
  return g(rng);
}
ConfigFn monopole_fn(const MonopolePose& p) {
  return [p](const Vec3& x) { return eval_monopole(p, x); };
}
}  // namespace

TEST_CASE("higgs profile matches M(coth r - 1/r)") {
  MonopolePose pose;
  pose.mass = 1.7;
  for (int it = 0; it < 50; ++it) {
    Vec3 x(rnd(), rnd(), rnd());
    if (x.norm() < 0.1) x += Vec3(1, 0, 0);
    double r = pose.mass * x.norm();
    ConfigValue v = eval_monopole(pose, x);
    double want = pose.mass * (1.0 / std::tanh(r) - 1.0 / r);
    CHECK(higgs_profile(v.phi) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("profile near the center goes like M r / 3") {
  MonopolePose pose;
  pose.mass = 2.0;
  for (double rr : {1e-2, 5e-3, 1e-3}) {
    Vec3 x(rr / pose.mass / std::sqrt(2.0), rr / pose.mass / std::sqrt(2.0), 0);
    ConfigValue v = eval_monopole(pose, x);
    double r = pose.mass * x.norm();
    CHECK(higgs_profile(v.phi) ==
          doctest::Approx(pose.mass * (r / 3 - r * r * r / 45)).epsilon(1e-6));
  }
}

TEST_CASE("Bogomolny residual of the closed form converges at order 2") {
  MonopolePose pose;
  pose.mass = 1.3;
  ConfigFn fn = monopole_fn(pose);
  int ok = 0, total = 0;
  for (int it = 0; it < 60; ++it) {
    Vec3 x(rnd(), rnd(), rnd());
    if (std::hypot(x[0], x[1]) < 0.3) x[0] += 1.0;
    double h = 2e-3;
    double r1 = sup_entry(residual_at(fn, x, h));
    double r2 = sup_entry(residual_at(fn, x, h / 2));
    double r4 = sup_entry(residual_at(fn, x, h / 4));
    if (r1 > 1e-12) {
      double o1 = std::log2(r1 / r2), o2 = std::log2(r2 / r4);
      ++total;
      if (o1 > 1.8 && o1 < 2.2 && o2 > 1.7 && o2 < 2.3) ++ok;
    }
  }
  CHECK(total > 40);
  CHECK(ok >= total * 9 / 10);
}

TEST_CASE("far field direction: v -> -sigma/2 off the Dirac ray") {
  MonopolePose pose;
  pose.mass = 1.0;
  for (double r : {8.0, 15.0, 30.0}) {
    Vec3 x(0.5 * r, 0.2 * r, -0.8 * r);
    x *= r / x.norm();
    Mat2 v = monopole_v(pose, x);
    CHECK((v + 0.5 * sigma()).norm() < 5.0 * std::exp(-0.5 * r) + 1e-10);
  }
}

TEST_CASE("closed-form curvature matches finite differences") {
  MonopolePose pose;
  pose.mass = 1.7;
  for (int it = 0; it < 25; ++it) {
    Vec3 x(rnd(), rnd(), rnd());
    if (std::hypot(x[0], x[1]) < 0.3) x[0] += 1.0;
    auto Fc = monopole_curvature_closed_form(pose, x);
    auto Ff = curvature_fd_at(monopole_fn(pose), x, 1e-4);
    for (int k = 0; k < 3; ++k) CHECK((Fc[k] - Ff[k]).norm() < 2e-6 * (1 + Ff[k].norm()));
  }
  // Bogomolny identity *F = d_A Phi <=> residual_at uses the same F; check
  // the v-component of F12 vanishes on the t = 0 plane
  Vec3 x0(0.8, -0.4, 0.0);
  auto F = monopole_curvature_closed_form(pose, x0);
  Mat2 v = monopole_v(pose, x0);
  CHECK(std::abs(inner(F[2], v) / (F[2].norm() + 1e-30)) < 1e-12);
}

TEST_CASE("|F| = O(1/r^2): r^2 |F| bounded on [5, 50]") {
  MonopolePose pose;
  pose.mass = 1.0;
  double lo = 1e30, hi = 0;
  for (double r : {5.0, 10.0, 20.0, 35.0, 50.0}) {
    Vec3 x = r * Vec3(0.3, 0.5, -0.81).normalized();
    auto F = monopole_curvature_closed_form(pose, x);
    double nf = 0;
    for (auto& m : F) nf = std::max(nf, knotmono::norm(m));
    lo = std::min(lo, r * r * nf);
    hi = std::max(hi, r * r * nf);
  }
  CHECK(hi < 10.0 * lo);
  CHECK(hi < 10.0);
}

TEST_CASE("hedgehog gauge equivalence") {
  MonopolePose pose;
  pose.mass = 1.9;
  // |Phi| equal pointwise
  for (int it = 0; it < 100; ++it) {
    Vec3 x(rnd(), rnd(), rnd());
    if (x.norm() < 0.05) x[2] += 0.5;
    ConfigValue a = eval_monopole(pose, x);
    ConfigValue b = hedgehog_equivalent(pose, x);
    CHECK(higgs_profile(a.phi) == doctest::Approx(higgs_profile(b.phi)).epsilon(1e-10));
  }
  // hedgehog solves the equation too
  ConfigFn fn = [&](const Vec3& x) { return hedgehog_equivalent(pose, x); };
  for (int it = 0; it < 10; ++it) {
    Vec3 x(rnd(), rnd(), rnd());
    if (x.norm() < 0.3) x[0] += 1.0;
    double r1 = sup_entry(residual_at(fn, x, 1e-3));
    double r2 = sup_entry(residual_at(fn, x, 5e-4));
    CHECK(r2 < 0.35 * r1 + 1e-11);
  }
  // both profiles tend to M at infinity
  Vec3 far(40.0, 3.0, -11.0);
  CHECK(higgs_profile(eval_monopole(pose, far).phi) == doctest::Approx(pose.mass).epsilon(1e-2));
  CHECK(higgs_profile(hedgehog_equivalent(pose, far).phi) ==
        doctest::Approx(pose.mass).epsilon(1e-2));
}

TEST_CASE("Dirac ray evaluation is finite and flagged") {
  MonopolePose pose;
  pose.mass = 1.0;
  int flags = 0;
  ConfigValue v = eval_monopole(pose, Vec3(0, 0, 2.0), &flags);
  CHECK(flags == 1);
  for (int k = 0; k < 3; ++k) CHECK(std::isfinite(v.a[k].cwiseAbs().maxCoeff()));
  CHECK(std::isfinite(v.phi.cwiseAbs().maxCoeff()));
  // large-r evaluation does not overflow
  ConfigValue w = eval_monopole(pose, Vec3(1.0, 0.5, 900.0));
  CHECK(std::isfinite(w.a[0].cwiseAbs().maxCoeff()));
  double r = pose.mass * Vec3(1.0, 0.5, 900.0).norm();
  CHECK(higgs_profile(w.phi) == doctest::Approx(pose.mass * (1.0 - 1.0 / r)).epsilon(1e-9));
}

TEST_CASE("linking form: circulation, closedness, chart agreement") {
  auto curve = std::make_shared<KnotCurve>(KnotCurve::circle(1.0));
  auto frame = std::make_shared<FrameField>(*curve, 512);
  double delta = 0.06;
  auto om = std::make_shared<LinkingForm>(frame, delta);

  // meridian circulation 2 pi (small loop around the knot, outside the chart
  // region so the Gauss branch is exercised)
  auto meridian = [&](double t) {
    return to_cartesian(*frame, {0.3, 2.5 * delta, 2 * std::numbers::pi * t});
  };
  CHECK(om->circulation(meridian) == doctest::Approx(2 * std::numbers::pi).epsilon(1e-6));
  // inside the chart region omega = d theta exactly
  auto meridian_in = [&](double t) {
    return to_cartesian(*frame, {1.0, 0.4 * delta, 2 * std::numbers::pi * t});
  };
  CHECK(om->circulation(meridian_in) == doctest::Approx(2 * std::numbers::pi).epsilon(1e-9));
  for (int it = 0; it < 20; ++it) {
    TubularCoords c{curve->length() * 0.05 * it, 1.9 * delta * (0.2 + 0.04 * it),
                    2 * std::numbers::pi * 0.05 * it};
    Vec3 x = to_cartesian(*frame, c);
    CHECK((om->eval(x) - om->dtheta_chart(x)).norm() < 1e-8);
  }

  // closed: d omega = 0 by finite differences at off-knot points, including
  // the matching shell (stiff there: cutoff scale ~ delta)
  auto omega_fn = [&](const Vec3& x) { return om->eval(x); };
  for (Vec3 x : {Vec3(1.35, 0.2, 0.03), Vec3(0.4, 0.9, 0.3), Vec3(1.0 + 2.45 * delta, 0, 0.01),
                 Vec3(2.0, 1.0, 0.8)}) {
    double h = 1e-5;
    Mat3 J;
    for (int i = 0; i < 3; ++i) {
      Vec3 xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      J.col(i) = (omega_fn(xp) - omega_fn(xm)) / (2 * h);
    }
    double curl = std::abs(J(1, 2) - J(2, 1)) + std::abs(J(2, 0) - J(0, 2)) +
                  std::abs(J(0, 1) - J(1, 0));
    CHECK(curl < 5e-5);
  }

  // circulation over a loop not linking K
  auto unlinked = [&](double t) {
    double a = 2 * std::numbers::pi * t;
    return Vec3(3.0 + 0.3 * std::cos(a), 0.0, 0.3 * std::sin(a));
  };
  CHECK(std::abs(om->circulation(unlinked)) < 1e-6);

  // symmetry axis of the unknot: the transverse components vanish
  Vec3 wa = om->eval(Vec3(0, 0, 0.7));
  CHECK(std::abs(wa[0]) < 1e-10);
  CHECK(std::abs(wa[1]) < 1e-10);
}

TEST_CASE("far truncation gives bounded support") {
  auto curve = std::make_shared<KnotCurve>(KnotCurve::circle(1.0));
  auto frame = std::make_shared<FrameField>(*curve, 256);
  auto om = std::make_shared<LinkingForm>(frame, 0.06, 6.0);
  CHECK(om->eval(Vec3(13.0, 1.0, 2.0)).norm() == 0.0);
  // still closed across the truncation shell
  Vec3 x(8.5, 1.0, 0.5);
  double h = 1e-3;
  Mat3 J;
  for (int i = 0; i < 3; ++i) {
    Vec3 xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    J.col(i) = (om->eval(xp) - om->eval(xm)) / (2 * h);
  }
  double curl = std::abs(J(1, 2) - J(2, 1)) + std::abs(J(2, 0) - J(0, 2)) +
                std::abs(J(0, 1) - J(1, 0));
  CHECK(curl < 2e-5);
}

TEST_CASE("model fiducial: exact on the tube block, small residual globally") {
  auto curve = std::make_shared<KnotCurve>(KnotCurve::circle(1.0));
  auto frame = std::make_shared<FrameField>(*curve, 512);
  FiducialParams fp{0.1, 4.0, 0.06};
  auto om = std::make_shared<LinkingForm>(frame, fp.delta);
  auto tube = make_tube_grid(frame, 8, 16, 16, fp.delta / 64, 2.0 * fp.delta);
  ConfigField f = model_fiducial_field(fp, om, tube, nullptr);
  ConfigField V = bogomolny_residual(f);
  // analytically zero; the discrete kernels keep it at the roundoff floor
  CHECK(sup_norm(V) < 1e-9);

  // pointwise residual off the tube via the analytic form, order-2 refinement
  ConfigFn fn = model_fiducial_fn(fp, om);
  double worst = 0;
  for (Vec3 x : {Vec3(1.6, 0.3, 0.2), Vec3(0.3, 0.2, 0.5), Vec3(1.0 + 2.5 * fp.delta, 0.0, 0.0)}) {
    double r1 = sup_entry(residual_at(fn, x, 2e-5));
    double r2 = sup_entry(residual_at(fn, x, 1e-5));
    double r3 = sup_entry(residual_at(fn, x, 5e-6));
    worst = std::max(worst, r3);
    CHECK(r2 < 0.35 * r1 + 1e-9);
    CHECK(r3 < 0.35 * r2 + 1e-9);
  }
  CHECK(worst < 1e-6);

  // gamma = 0: flat connection, constant Higgs
  FiducialParams f0{0.0, 4.0, 0.06};
  ConfigFn fn0 = model_fiducial_fn(f0, om);
  ConfigValue v0 = fn0(Vec3(1.4, 0.1, 0.1));
  CHECK(v0.a[0].norm() + v0.a[1].norm() + v0.a[2].norm() == 0.0);
  CHECK((v0.phi - 4.0 * sigma()).norm() < 1e-15);
}
