#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "knotmono/norms.hpp"
#include "knotmono/operators.hpp"

using namespace knotmono;

namespace {

std::mt19937_64 rng(99);
double rnd() {
  std::normal_distribution<double> g;
  return g(rng);
}

struct Setup {
  std::shared_ptr<const FrameField> frame;
  std::shared_ptr<TubeGrid> tube;
  std::shared_ptr<BoxGrid> box;
};

Setup make_setup(int ns = 8, int nt = 16, int nr = 16, int nb = 12) {
  static auto curve = std::make_shared<KnotCurve>(KnotCurve::circle(1.0));
  static auto frame = std::make_shared<FrameField>(*curve, 512);
  Setup s;
  s.frame = frame;
  s.tube = make_tube_grid(frame, ns, nt, nr, 0.002, 0.12);
  s.box = make_box_grid(frame, Vec3(-1.8, -1.8, -1.8), Vec3(1.8, 1.8, 1.8), nb, 0.10);
  return s;
}

ConfigField random_field(const Setup& s, unsigned seed) {
  std::mt19937_64 r2(seed);
  std::normal_distribution<double> g;
  ConfigField f = ConfigField::zeros(s.tube, s.box);
  for (int i = 0; i < f.tube_data.size(); ++i) f.tube_data[i] = g(r2);
  for (int n = 0; n < s.box->n_nodes(); ++n) {
    if (!s.box->active[n]) continue;
    for (int c = 0; c < kComps; ++c) f.box_data[(size_t)n * kComps + c] = g(r2);
  }
  return f;
}

// smooth low-mode random field on the tube (for discretization-rate checks)
ConfigField smooth_field(const Setup& s, unsigned seed) {
  std::mt19937_64 r2(seed);
  std::normal_distribution<double> g;
  double amp[kComps][5];
  for (auto& row : amp)
    for (double& v : row) v = g(r2);
  ConfigField f = ConfigField::zeros(s.tube, s.box);
  const TubeGrid& t = *s.tube;
  for (int i = 0; i < t.n_s; ++i)
    for (int j = 0; j < t.n_theta; ++j)
      for (int k = 0; k < t.n_rho; ++k) {
        double th = t.theta_of(j), sc = 2 * std::numbers::pi * t.s_of(i) / t.length;
        double rho = t.rho[k];
        double* d = f.tube_at(t.node(i, j, k));
        for (int c = 0; c < kComps; ++c)
          d[c] = amp[c][0] + amp[c][1] * std::cos(th) + amp[c][2] * std::sin(2 * th) +
                 amp[c][3] * std::cos(sc) * (rho / t.rho_max) +
                 amp[c][4] * rho * rho * std::sin(sc);
      }
  return f;
}

}  // namespace

TEST_CASE("clifford relation and basic actions") {
  // tau = dx1, psi = X dx1 -> phi part X
  ConfigValue psi;
  psi.a[0] = sigma();
  ConfigValue out = clifford_mul(Vec3(1, 0, 0), psi);
  CHECK((out.phi - sigma()).norm() < 1e-15);
  CHECK(out.a[0].norm() + out.a[1].norm() + out.a[2].norm() < 1e-15);

  // pure 0-form goes to the 1-form slot (with the Clifford-consistent sign)
  ConfigValue psi2;
  psi2.phi = sigma();
  ConfigValue out2 = clifford_mul(Vec3(1, 0, 0), psi2);
  CHECK((out2.a[0] + sigma()).norm() < 1e-15);

  // rho(tau)^2 = -1 for unit tau
  for (int it = 0; it < 50; ++it) {
    Vec3 tau = Vec3(rnd(), rnd(), rnd()).normalized();
    ConfigValue p;
    for (int k = 0; k < 3; ++k) p.a[k] = su2_from(Vec3(rnd(), rnd(), rnd()));
    p.phi = su2_from(Vec3(rnd(), rnd(), rnd()));
    ConfigValue q = clifford_mul(tau, clifford_mul(tau, p));
    for (int k = 0; k < 3; ++k) CHECK((q.a[k] + p.a[k]).norm() < 1e-12);
    CHECK((q.phi + p.phi).norm() < 1e-12);
  }
}

TEST_CASE("clifford with explicit metric reduces to the flat one") {
  for (int it = 0; it < 10; ++it) {
    Vec3 tau = Vec3(rnd(), rnd(), rnd());
    ConfigValue p;
    for (int k = 0; k < 3; ++k) p.a[k] = su2_from(Vec3(rnd(), rnd(), rnd()));
    p.phi = su2_from(Vec3(rnd(), rnd(), rnd()));
    ConfigValue q1 = clifford_mul(tau, p);
    ConfigValue q2 = clifford_mul(tau, p, Mat3::Identity());
    for (int k = 0; k < 3; ++k) CHECK((q1.a[k] - q2.a[k]).norm() < 1e-13);
    CHECK((q1.phi - q2.phi).norm() < 1e-13);
  }
}

TEST_CASE("curvature: zero field and abelian linear field") {
  Setup s = make_setup();
  ConfigField zero = ConfigField::zeros(s.tube, s.box);
  TwoFormField F0 = curvature(zero);
  CHECK(sup_norm(F0) == 0.0);

  // A = sigma x2 dx1 on the box: F_12 = d1 A2 - d2 A1 = -sigma
  ConfigField A = sample_config(nullptr, s.box, [](const Vec3& x) {
    ConfigValue v;
    v.a[0] = x[1] * sigma();
    return v;
  });
  TwoFormField F = curvature(A);
  for (int n = 0; n < s.box->n_nodes(); ++n) {
    if (!s.box->active[n]) continue;
    const double* f = F.box_data.data() + (size_t)9 * n;
    CHECK(std::abs(f[2 * 3 + 0] + 1.0) < 1e-9);  // F_12 sigma-coefficient
    CHECK(std::abs(f[0 * 3 + 0]) < 1e-9);
    CHECK(std::abs(f[1 * 3 + 0]) < 1e-9);
  }
}

TEST_CASE("exact quadratic Taylor identity nodewise") {
  Setup s = make_setup();
  for (unsigned seed : {1u, 2u}) {
    ConfigField Psi = random_field(s, seed);
    ConfigField psi = random_field(s, seed + 10);
    ConfigField v0 = bogomolny_residual(Psi);
    ConfigField v1 = bogomolny_residual(Psi + psi);
    ConfigField L = apply_linearization(Psi, psi);
    ConfigField Q = quadratic(psi, psi);
    ConfigField diff = v1 - v0 - L - Q;
    double scale = sup_norm(v1) + sup_norm(v0) + 1;
    CHECK(sup_norm(diff) < 1e-11 * scale);
  }
}

TEST_CASE("quadratic is symmetric and vanishes on sigma-parallel pairs") {
  Setup s = make_setup();
  ConfigField p1 = random_field(s, 5), p2 = random_field(s, 6);
  ConfigField q12 = quadratic(p1, p2), q21 = quadratic(p2, p1);
  CHECK(sup_norm(q12 - q21) < 1e-13 * (sup_norm(q12) + 1));
  CHECK(sup_norm(quadratic(p1, ConfigField::zeros(s.tube, s.box))) == 0.0);

  ConfigField par1, par2;
  split_field(p1, &par1, nullptr);
  split_field(p2, &par2, nullptr);
  CHECK(sup_norm(quadratic(par1, par2)) < 1e-14);
}

TEST_CASE("extended operator transpose is exact") {
  Setup s = make_setup();
  ConfigField Psi = random_field(s, 21);
  for (Scheme sch : {Scheme::FD2, Scheme::Spectral}) {
    for (bool dag : {false, true}) {
      ConfigField x = random_field(s, 31), y = random_field(s, 32);
      ConfigField Lx = apply_extended(Psi, x, dag, sch);
      ConfigField Lty = apply_extended_transpose(Psi, y, dag, sch);
      double a = Lx.dot_plain(y), b = x.dot_plain(Lty);
      CHECK(a == doctest::Approx(b).epsilon(1e-11));
    }
  }
}

TEST_CASE("extended operator on constant field with Phi-only background") {
  // psi = h-like constant, Psi = M sigma: L~ psi = [M sigma, psi] slotwise
  Setup s = make_setup();
  double M = 1.7;
  ConfigField Psi = sample_config(s.tube, s.box, [&](const Vec3&) {
    ConfigValue v;
    v.phi = M * sigma();
    return v;
  });
  ConfigField psi = sample_config(s.tube, s.box, [&](const Vec3&) {
    ConfigValue v;
    v.phi = sigma2();
    return v;
  });
  ConfigField out = apply_extended(Psi, psi, false);
  // phi slot gets [M sigma, sigma2] = 2 M sigma3; 1-form slots stay 0
  Vec3 want = su2_coeffs(M * bracket(sigma(), sigma2()));
  for (int n = 0; n < s.tube->n_nodes(); ++n) {
    const double* d = out.tube_at(n);
    for (int c = 0; c < 3; ++c) CHECK(d[comp_index(3, c)] == doctest::Approx(want[c]).epsilon(1e-10));
    for (int slot = 0; slot < 3; ++slot)
      for (int c = 0; c < 3; ++c) CHECK(std::abs(d[comp_index(slot, c)]) < 1e-10);
  }
  // dagger flips the sign
  ConfigField outd = apply_extended(Psi, psi, true);
  CHECK(sup_norm(outd + out) < 1e-10);
}

namespace {

// interior pairing mismatch <L~ x, y> - <x, L~+ y> with the rho d^3x weight
double duality_mismatch(const Setup& s, const ConfigField& x, const ConfigField& y,
                        double* scale_out) {
  const TubeGrid& t = *s.tube;
  ConfigField Psi = ConfigField::zeros(s.tube, nullptr);
  ConfigField Lx = apply_extended(Psi, x, false, Scheme::Spectral);
  ConfigField Ldy = apply_extended(Psi, y, true, Scheme::Spectral);
  double lhs = 0, rhs = 0, sc = 0;
  for (int n = 0; n < t.n_nodes(); ++n) {
    int k = n % t.n_rho;
    double w = t.w_s * t.w_theta * t.w_rho[k] * t.rho[k];
    const double* lx = Lx.tube_at(n);
    const double* yy = y.tube_at(n);
    const double* xx = x.tube_at(n);
    const double* ld = Ldy.tube_at(n);
    for (int c = 0; c < kComps; ++c) {
      lhs += w * lx[c] * yy[c];
      rhs += w * xx[c] * ld[c];
      sc += w * (lx[c] * lx[c] + yy[c] * yy[c] + xx[c] * xx[c] + ld[c] * ld[c]);
    }
  }
  if (scale_out) *scale_out = sc + 1e-300;
  return std::abs(lhs - rhs);
}

}  // namespace

TEST_CASE("summation-by-parts duality on compactly supported fields") {
  // fields vanishing near both rho ends: the interior pairing mismatch is
  // pure roundoff (SBP in rho, exactly antisymmetric theta/s derivatives)
  Setup s = make_setup(8, 16, 32, 0);
  s.box.reset();
  const TubeGrid& t = *s.tube;
  ConfigField x = ConfigField::zeros(s.tube, nullptr), y = ConfigField::zeros(s.tube, nullptr);
  std::mt19937_64 r2(4);
  std::normal_distribution<double> g;
  double a1[kComps], a2[kComps];
  for (int c = 0; c < kComps; ++c) {
    a1[c] = g(r2);
    a2[c] = g(r2);
  }
  for (int i = 0; i < t.n_s; ++i)
    for (int j = 0; j < t.n_theta; ++j)
      for (int k = 0; k < t.n_rho; ++k) {
        double bump = (k < 6 || k >= t.n_rho - 6)
                          ? 0.0
                          : std::sin(std::numbers::pi * (k - 6.0) / (t.n_rho - 12.0));
        double th = t.theta_of(j), sc = 2 * std::numbers::pi * t.s_of(i) / t.length;
        double* dx = x.tube_at(t.node(i, j, k));
        double* dy = y.tube_at(t.node(i, j, k));
        for (int c = 0; c < kComps; ++c) {
          dx[c] = bump * a1[c] * (1 + 0.3 * std::cos(th) + 0.2 * std::sin(sc));
          dy[c] = bump * a2[c] * (1 - 0.4 * std::sin(th) + 0.1 * std::cos(sc));
        }
      }
  double scale = 0;
  double mis = duality_mismatch(s, x, y, &scale);
  CHECK(mis < 1e-10 * scale);
}

TEST_CASE("norm equivalence of the two tube semi-norms") {
  Setup s = make_setup(8, 16, 24, 8);
  double eps = s.tube->rho_max;
  FiducialParams fp{0.12, 2.0, 0.2};
  double lo = std::min(4 * fp.gamma * fp.gamma,
                       (1 - 2 * fp.gamma) * (1 - 2 * fp.gamma) / 2);
  double hi = 1 + 4 * fp.gamma * fp.gamma + 4 * fp.M * fp.M * eps * eps;
  for (unsigned seed : {11u, 12u, 13u, 14u}) {
    ConfigField f = smooth_field(s, seed);
    double h = norm2_HN(f, eps, fp);
    double ht = norm2_HtildeN(f, eps);
    CHECK(h >= lo * ht * (1 - 1e-9));
    CHECK(h <= hi * ht * (1 + 1e-9));
  }
}

TEST_CASE("sigma-parallel constant is a null direction of H_N") {
  Setup s = make_setup();
  ConfigField f = sample_config(s.tube, nullptr, [](const Vec3&) {
    ConfigValue v;
    v.phi = sigma();
    return v;
  });
  FiducialParams fp{0.3, 5.0, 0.2};
  CHECK(norm2_HN(f, s.tube->rho_max, fp) < 1e-20);
}
