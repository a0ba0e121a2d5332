#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "knotmono/su2.hpp"

using namespace knotmono;

namespace {
std::mt19937_64 rng(12345);
Mat2 random_su2() {
  std::normal_distribution<double> g;
  return su2_from(Vec3(g(rng), g(rng), g(rng)));
}
Mat2 random_sl2c() {
  std::normal_distribution<double> g;
  Mat2 m;
  m << cplx(g(rng), g(rng)), cplx(g(rng), g(rng)), cplx(g(rng), g(rng)), 0;
  m(1, 1) = -m(0, 0);
  return m;
}
}  // namespace

TEST_CASE("sigma and h_j basis") {
  CHECK(bracket(sigma(), sigma()).norm() == 0.0);
  Mat2 is = cplx(0, 1) * sigma();
  CHECK((bracket(is, h_plus()) - 2.0 * h_plus()).norm() < 1e-15);
  CHECK((bracket(is, h_minus()) + 2.0 * h_minus()).norm() < 1e-15);
  CHECK(bracket(is, sigma()).norm() == 0.0);
}

TEST_CASE("killing normalization") {
  CHECK(inner(sigma(), sigma()) == doctest::Approx(1.0).epsilon(1e-15));
  Mat2 x = sigma2();  // ((0,1),(-1,0)) up to sign
  CHECK(std::abs(inner(sigma(), x)) < 1e-15);
  CHECK(inner(2.0 * sigma(), 3.0 * sigma()) == doctest::Approx(6.0));
  // orthonormal triple
  CHECK(inner(sigma2(), sigma2()) == doctest::Approx(1.0));
  CHECK(inner(sigma3(), sigma3()) == doctest::Approx(1.0));
  CHECK(std::abs(inner(sigma2(), sigma3())) < 1e-15);
}

TEST_CASE("bracket antisymmetry and jacobi") {
  for (int it = 0; it < 50; ++it) {
    Mat2 x = random_sl2c(), y = random_sl2c(), z = random_sl2c();
    CHECK((bracket(x, y) + bracket(y, x)).norm() < 1e-13 * (x.norm() + y.norm()));
    Mat2 j = bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) + bracket(z, bracket(x, y));
    CHECK(j.norm() < 1e-13 * x.norm() * y.norm() * z.norm() + 1e-13);
  }
}

TEST_CASE("bracket of su2 values stays in su2") {
  for (int it = 0; it < 20; ++it) {
    Mat2 b = bracket(random_su2(), random_su2());
    CHECK(is_su2(b, 1e-13));
  }
}

TEST_CASE("split parallel/perp") {
  auto [p, q] = split_parallel_perp(sigma());
  CHECK((p - sigma()).norm() < 1e-15);
  CHECK(q.norm() < 1e-15);
  Mat2 h = sigma2();
  auto [p2, q2] = split_parallel_perp(h);
  CHECK(p2.norm() < 1e-15);
  CHECK((q2 - h).norm() < 1e-15);
  Mat2 m = sigma() + h;
  auto [p3, q3] = split_parallel_perp(m);
  CHECK((p3 - sigma()).norm() < 1e-14);
  CHECK((q3 - h).norm() < 1e-14);
}

TEST_CASE("|[sigma,psi]|^2 = 4 |psi_perp|^2") {
  for (int it = 0; it < 100; ++it) {
    Mat2 x = random_su2();
    auto [par, perp] = split_parallel_perp(x);
    double lhs = norm2(bracket(sigma(), x));
    double rhs = 4.0 * norm2(perp);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("exp on su(2)") {
  CHECK((exp_su2(Mat2::Zero()) - Mat2::Identity()).norm() < 1e-15);
  // exp(pi sigma) = -I: eigenvalues exp(-i pi), exp(i pi)
  Mat2 e = exp_su2(std::numbers::pi * sigma());
  CHECK((e + Mat2::Identity()).norm() < 1e-12);
  // exp(2 pi 0.25 sigma) = diag(e^{-i pi/2}, e^{i pi/2})
  Mat2 e2 = exp_su2(2.0 * std::numbers::pi * 0.25 * sigma());
  Mat2 want;
  want << std::polar(1.0, -std::numbers::pi / 2), 0, 0, std::polar(1.0, std::numbers::pi / 2);
  CHECK((e2 - want).norm() < 1e-12);

  for (int it = 0; it < 50; ++it) {
    Mat2 x = random_su2();
    Mat2 u = exp_su2(x);
    CHECK(is_special_unitary(u, 1e-12));
    CHECK((exp_su2(x) * exp_su2(Mat2(-x)) - Mat2::Identity()).norm() < 1e-12);
  }
}

TEST_CASE("log inverts exp off the cut") {
  for (int it = 0; it < 50; ++it) {
    Mat2 x = random_su2();
    if (knotmono::norm(x) > 3.0) continue;
    Mat2 back = log_su2(exp_su2(x));
    double a = knotmono::norm(x);
    // log returns the principal branch; compare modulo 2 pi direction
    if (a < std::numbers::pi) CHECK((back - x).norm() < 1e-11 * std::max(1.0, x.norm()));
  }
}

TEST_CASE("hj decomposition round trip") {
  for (int it = 0; it < 30; ++it) {
    Mat2 w = random_sl2c();
    cplx c0, cp, cm;
    hj_coeffs(w, c0, cp, cm);
    Mat2 back = c0 * sigma() + cp * h_plus() + cm * h_minus();
    CHECK((back - w).norm() < 1e-13 * std::max(1.0, w.norm()));
  }
}

TEST_CASE("typed wrappers enforce invariants") {
  CHECK_NOTHROW(Su2Value(sigma()));
  CHECK_THROWS(Su2Value(h_plus()));
  CHECK_NOTHROW(Sl2cValue(h_plus()));
  Mat2 bad;
  bad << 1, 0, 0, 1;
  CHECK_THROWS(Sl2cValue(bad));
}
