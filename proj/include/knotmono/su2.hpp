#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <utility>

// Exact 2x2 algebra for su(2) and sl(2,C): Killing inner product, the sigma
// element, the h_j eigenbasis of [i*sigma, .], exponentials and logs on SU(2).
//
// Normalization: <X,Y> = -1/2 tr(XY), so |sigma| = 1.

namespace knotmono {

using Mat2 = Eigen::Matrix2cd;
using Vec3 = Eigen::Vector3d;
using cplx = std::complex<double>;

inline const Mat2& sigma1() {
  static const Mat2 m = (Mat2() << cplx(0, -1), 0, 0, cplx(0, 1)).finished();
  return m;
}
inline const Mat2& sigma2() {
  static const Mat2 m = (Mat2() << 0, -1, 1, 0).finished();
  return m;
}
inline const Mat2& sigma3() {
  static const Mat2 m = (Mat2() << 0, cplx(0, 1), cplx(0, 1), 0).finished();
  return m;
}
// sigma = sigma1 = diag(-i, i)
inline const Mat2& sigma() { return sigma1(); }

// [i*sigma, h_pm] = ±2 h_pm
inline const Mat2& h_plus() {
  static const Mat2 m = (Mat2() << 0, 1, 0, 0).finished();
  return m;
}
inline const Mat2& h_minus() {
  static const Mat2 m = (Mat2() << 0, 0, 1, 0).finished();
  return m;
}

inline Mat2 bracket(const Mat2& x, const Mat2& y) { return x * y - y * x; }

// Killing form, bilinear: -1/2 tr(XY). Real for su(2) arguments.
inline cplx killing(const Mat2& x, const Mat2& y) { return -0.5 * (x * y).trace(); }

// Real inner product on sl(2,C) viewed as a real vector space, restricting to
// -1/2 tr(XY) on su(2): <X,Y> = 1/2 Re tr(X Y^dag).
inline double inner(const Mat2& x, const Mat2& y) {
  return 0.5 * (x * y.adjoint()).trace().real();
}
inline double norm2(const Mat2& x) { return 0.5 * x.squaredNorm(); }
inline double norm(const Mat2& x) { return std::sqrt(norm2(x)); }

// X = X_par + X_perp with X_par along sigma, <X_perp, sigma> = 0.
inline std::pair<Mat2, Mat2> split_parallel_perp(const Mat2& x) {
  Mat2 par = inner(x, sigma()) * sigma();
  return {par, x - par};
}

// su(2) coefficients in the orthonormal basis {sigma1, sigma2, sigma3}.
inline Vec3 su2_coeffs(const Mat2& x) {
  return Vec3(inner(x, sigma1()), inner(x, sigma2()), inner(x, sigma3()));
}
inline Mat2 su2_from(const Vec3& c) {
  return c[0] * sigma1() + c[1] * sigma2() + c[2] * sigma3();
}

// Closed-form exponential on su(2): X^2 = -|X|^2 I.
inline Mat2 exp_su2(const Mat2& x) {
  double a = norm(x);
  if (a < 1e-30) return Mat2::Identity() + x;
  return std::cos(a) * Mat2::Identity() + (std::sin(a) / a) * x;
}

// Principal logarithm SU(2) -> su(2). Throws if u is at the -I cut (angle pi).
inline Mat2 log_su2(const Mat2& u) {
  double c = 0.5 * u.trace().real();
  c = std::clamp(c, -1.0, 1.0);
  double a = std::acos(c);
  Mat2 skew = 0.5 * (u - u.adjoint());
  double sn = norm(skew);
  if (sn < 1e-14) {
    if (c < 0.0) throw std::domain_error("log_su2: matrix at the -I branch cut");
    return skew;  // u ~ I + skew
  }
  return (a / sn) * skew;
}

inline bool is_traceless(const Mat2& x, double tol = 1e-14) {
  double scale = x.norm();
  return std::abs(x.trace()) <= tol * std::max(1.0, scale);
}
inline bool is_su2(const Mat2& x, double tol = 1e-14) {
  double scale = std::max(1.0, x.norm());
  return is_traceless(x, tol) && (x + x.adjoint()).norm() <= tol * scale;
}
inline bool is_special_unitary(const Mat2& u, double tol = 1e-12) {
  return (u * u.adjoint() - Mat2::Identity()).norm() <= tol &&
         std::abs(u.determinant() - cplx(1, 0)) <= tol;
}

// Typed carriers used at module boundaries; constructors enforce invariants.
struct Su2Value {
  Mat2 m;
  explicit Su2Value(const Mat2& x) : m(x) {
    if (!is_su2(x, 1e-13)) throw std::invalid_argument("Su2Value: not anti-hermitian traceless");
  }
};
struct Sl2cValue {
  Mat2 m;
  explicit Sl2cValue(const Mat2& x) : m(x) {
    if (!is_traceless(x, 1e-13)) throw std::invalid_argument("Sl2cValue: trace not zero");
  }
};

// Decompose a traceless W in the bilinear-dual basis of {sigma, h+, h-}:
// W = c0 sigma + cp h+ + cm h-.
inline void hj_coeffs(const Mat2& w, cplx& c0, cplx& cp, cplx& cm) {
  c0 = killing(w, sigma());
  cp = -2.0 * killing(w, h_minus());
  cm = -2.0 * killing(w, h_plus());
}

}  // namespace knotmono
