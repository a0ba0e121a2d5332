#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "knotmono/fiducial.hpp"
#include "knotmono/picard.hpp"

using namespace knotmono;

namespace {

struct World {
  std::shared_ptr<const FrameField> frame;
  std::shared_ptr<TubeGrid> tube;
  std::shared_ptr<BoxGrid> box;
  std::shared_ptr<LinkingForm> omega;
  FiducialParams fp{0.1, 4.0, 0.06};
  ConfigField fiducial;
};

World& world() {
  static World w = [] {
    World v;
    auto curve = std::make_shared<KnotCurve>(KnotCurve::circle(1.0));
    v.frame = std::make_shared<FrameField>(*curve, 256);
    v.omega = std::make_shared<LinkingForm>(v.frame, v.fp.delta);
    v.tube = make_tube_grid(v.frame, 8, 16, 16, v.fp.delta / 64, v.fp.delta);
    v.box = make_box_grid(v.frame, Vec3(-2, -2, -2), Vec3(2, 2, 2), 14, 0.8 * v.fp.delta);
    v.fiducial = model_fiducial_field(v.fp, v.omega, v.tube, v.box);
    return v;
  }();
  return w;
}

ConfigField smooth_random(const World& w, unsigned seed, double amp) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  ConfigField f = ConfigField::zeros(w.tube, w.box);
  // compact smooth bumps on the box, smooth tube content decaying at the ends
  Vec3 c1(1.2 * g(rng), 1.2 * g(rng), g(rng));
  double coef[kComps];
  for (int c = 0; c < kComps; ++c) coef[c] = amp * g(rng);
  for (int i = 0; i < w.box->n[0]; ++i)
    for (int j = 0; j < w.box->n[1]; ++j)
      for (int k = 0; k < w.box->n[2]; ++k) {
        int id = w.box->node(i, j, k);
        if (!w.box->active[id]) continue;
        Vec3 x = w.box->point(i, j, k);
        double t = (x - c1).norm() / 1.0;
        if (t >= 1) continue;
        double b = std::pow(1 - t * t, 4);
        for (int c = 0; c < kComps; ++c) f.box_at(id)[c] += b * coef[c];
      }
  const TubeGrid& t = *w.tube;
  for (int i = 0; i < t.n_s; ++i)
    for (int j = 0; j < t.n_theta; ++j)
      for (int k = 0; k < t.n_rho; ++k) {
        double u = std::log(t.rho[k] / t.rho_min) / std::log(t.rho_max / t.rho_min);
        double bump = std::pow(std::max(0.0, u * (1 - u)), 2);
        double th = t.theta_of(j);
        double* d = f.tube_at(t.node(i, j, k));
        for (int c = 0; c < kComps; ++c)
          d[c] += amp * bump * coef[(c + 5) % kComps] * (1 + 0.3 * std::cos(th));
      }
  return f;
}

}  // namespace

TEST_CASE("operator handle basics") {
  World& w = world();
  LinearOperatorHandle h = assemble_operator(w.fiducial, w.fp, w.fp.delta);
  ConfigField z = ConfigField::zeros(w.tube, w.box);
  CHECK(sup_norm(h.apply(z)) == 0.0);
  ConfigField x = smooth_random(w, 3, 1.0);
  ConfigField a = h.apply(x);
  ConfigField b = apply_extended(w.fiducial, x, false, Scheme::FD2);
  CHECK(sup_norm(a - b) == 0.0);
}

TEST_CASE("pure gauge probe reproduces the gauge-fixing functional") {
  // psi = (a, phi) = (d f, [Phi, f]) at A = 0, Phi = M sigma:
  // gauge row = *d*d f + [Phi, [Phi, f]]
  World& w = world();
  double M = w.fp.M;
  auto curve = std::make_shared<KnotCurve>(KnotCurve::circle(1.0));
  auto box = make_box_grid(w.frame, Vec3(0.8, 0.8, 0.8), Vec3(3.2, 3.2, 3.2), 24, 0.0);
  // f = bump * sigma2
  Vec3 c0(2.0, 2.0, 2.0);
  auto fval = [&](const Vec3& x) { return std::exp(-2.0 * (x - c0).squaredNorm()); };
  ConfigField bg = ConfigField::zeros(nullptr, box);
  ConfigField psi = ConfigField::zeros(nullptr, box);
  for (int n = 0; n < box->n_nodes(); ++n) {
    int i = n / (box->n[1] * box->n[2]);
    int j = (n / box->n[2]) % box->n[1];
    int k = n % box->n[2];
    Vec3 x = box->point(i, j, k);
    bg.box_at(n)[comp_index(3, 0)] = M;  // Phi = M sigma
    double f = fval(x);
    Vec3 grad = -4.0 * f * (x - c0);
    for (int a = 0; a < 3; ++a) psi.box_at(n)[comp_index(a, 1)] = grad[a];  // d f along sigma2
    // phi-part = [M sigma, f sigma2] = 2 M f sigma3
    psi.box_at(n)[comp_index(3, 2)] = 2.0 * M * f;
  }
  ConfigField gf = gauge_functional(bg, psi, Scheme::FD2);
  // expected: laplacian(f) sigma2 + [M sigma, 2 M f sigma3] = lap f sigma2 - 4 M^2 f sigma2
  double worst = 0;
  for (int i = 3; i < box->n[0] - 3; ++i)
    for (int j = 3; j < box->n[1] - 3; ++j)
      for (int k = 3; k < box->n[2] - 3; ++k) {
        int n = box->node(i, j, k);
        Vec3 x = box->point(i, j, k);
        double f = fval(x);
        double lap = (16.0 * (x - c0).squaredNorm() - 12.0) * f;
        double want = lap - 4.0 * M * M * f;
        worst = std::max(worst, std::abs(gf.box_at(n)[comp_index(3, 1)] - want));
      }
  CHECK(worst < 0.05);  // second-order FD on h ~ 0.1
}

TEST_CASE("solve_linear: zero rhs and manufactured recovery") {
  World& w = world();
  LinearOperatorHandle h = assemble_operator(w.fiducial, w.fp, w.fp.delta);
  SolveResult s0 = solve_linear(h, ConfigField::zeros(w.tube, w.box), 1e-10, 100);
  CHECK(s0.converged);
  CHECK(sup_norm(s0.psi) == 0.0);

  // psi0 in range(L^T W): orthogonal to the kernel of the weighted problem
  ConfigField seedf = smooth_random(w, 11, 1.0);
  ConfigField psi0 = h.apply_transpose(seedf);
  ConfigField rhs = h.apply(psi0);
  SolveResult s = solve_linear(h, rhs, 1e-10, 8000);
  CHECK(s.converged);
  CHECK(s.rel_residual < 1e-8);
  ConfigField diff = s.psi - psi0;
  double rel = std::sqrt(h.l2eps_dot(diff, diff) / h.l2eps_dot(psi0, psi0));
  CHECK(rel < 1e-5);
  CHECK(std::isfinite(s.c_emp));
}

TEST_CASE("picard contracts on a perturbed fiducial") {
  World& w = world();
  // background = fiducial + smooth perturbation: not a solution, V != 0
  ConfigField pert = smooth_random(w, 21, 0.02);
  ConfigField bg = w.fiducial;
  bg += pert;
  LinearOperatorHandle h = assemble_operator(bg, w.fp, w.fp.delta);
  PicardOptions opt;
  opt.tol_rel = 1e-6;
  opt.solve_tol = 1e-10;
  opt.solve_max_iter = 12000;
  auto [corr, trace] = picard_iterate(h, ConfigField::zeros(w.tube, w.box), opt);
  CHECK(trace.converged);
  REQUIRE(trace.steps.size() >= 2);
  double v0 = trace.steps.front().v_norm;
  double vend = trace.steps.back().v_norm;
  CHECK(vend < 1e-5 * trace.steps.front().v_norm + 1e-12);
  for (size_t i = 2; i < trace.steps.size(); ++i)
    if (trace.steps[i].psi_norm > 1e-14) CHECK(trace.steps[i].ratio < 0.55);
  CHECK(trace.steps.back().gauge_norm < 1e-6 * (v0 + 1));
  // exact solution start: zero iterations of work
  LinearOperatorHandle h0 = assemble_operator(w.fiducial, w.fp, w.fp.delta);
  auto [c2, t2] = picard_iterate(h0, ConfigField::zeros(w.tube, w.box), PicardOptions{});
  CHECK(std::sqrt(h0.l2eps_dot(c2, c2)) < 1e-10);
}

TEST_CASE("projected iteration with a synthetic cokernel") {
  World& w = world();
  ConfigField pert = smooth_random(w, 31, 0.02);
  ConfigField bg = w.fiducial;
  bg += pert;
  LinearOperatorHandle h = assemble_operator(bg, w.fp, w.fp.delta);
  // zero cokernel: same trace as plain iteration
  PicardOptions opt;
  opt.n_max = 4;
  opt.solve_tol = 1e-9;
  opt.solve_max_iter = 8000;
  auto [c1, t1] = picard_iterate(h, ConfigField::zeros(w.tube, w.box), opt);
  ProjectedResult pr = picard_project(h, ConfigField::zeros(w.tube, w.box), {}, opt);
  REQUIRE(t1.steps.size() == pr.trace.steps.size());
  for (size_t i = 0; i < t1.steps.size(); ++i)
    CHECK(pr.trace.steps[i].v_norm == doctest::Approx(t1.steps[i].v_norm).epsilon(1e-9));
  CHECK(sup_norm(pr.obstruction) == 0.0);

  // rank-1 synthetic cokernel: the obstruction equals the projection of the
  // final residual onto it
  ConfigField e = smooth_random(w, 77, 1.0);
  ProjectedResult p2 = picard_project(h, ConfigField::zeros(w.tube, w.box), {e}, opt);
  ConfigField state = bg;
  state += p2.correction;
  ConfigField V = bogomolny_residual(state, Scheme::FD2);
  double want = h.l2eps_dot(V, e) / h.l2eps_dot(e, e);
  REQUIRE(p2.obstruction_coeffs.size() == 1);
  CHECK(p2.obstruction_coeffs[0] == doctest::Approx(want).epsilon(1e-8));
}

TEST_CASE("scalar toy recursion contracts geometrically") {
  // same recursion shape on scalars: L x_n = -2 q (x_0+..+x_{n-2}) x_{n-1}
  //                                            - q x_{n-1}^2, L = 1
  double q = 0.3, v = 0.1;
  double x_prev = -v;  // first step: L x_1 = -V
  double sum = x_prev;
  double prev = std::abs(x_prev);
  for (int n = 2; n <= 10; ++n) {
    double x = -2.0 * q * (sum - x_prev) * x_prev - q * x_prev * x_prev;
    sum += x;
    double ratio = std::abs(x) / prev;
    CHECK(ratio < 0.5);
    prev = std::abs(x);
    if (prev < 1e-30) break;
  }
  // the limit solves v + x + q x^2 = 0
  CHECK(v + sum + q * sum * sum == doctest::Approx(0.0).epsilon(1e-10));
}
