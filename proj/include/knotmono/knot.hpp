#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

// Knot parametrization, rotation-minimizing normal frames, tubular
// coordinates (s, rho, theta) <-> R^3, and the knot-adapted metric g_delta.

namespace knotmono {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct TubularCoords {
  double s = 0;      // arc length in [0, l)
  double rho = 0;    // distance to the knot
  double theta = 0;  // meridian angle in [0, 2pi)
};

// Closed unit-speed curve. Analytic built-ins keep closure and |K'| = 1 to
// machine precision; sampled input is arc-length reparametrized on load.
class KnotCurve {
 public:
  static KnotCurve circle(double radius);
  // (a + b cos(3u)) e_r(2u) + c sin(3u) e_z, arc-length reparametrized.
  static KnotCurve trefoil(double a = 2.0, double b = 0.8, double c = 0.8);
  static KnotCurve from_samples(const std::vector<Vec3>& pts);

  double length() const { return length_; }
  Vec3 point(double s) const;   // K(s)
  Vec3 deriv(double s) const;   // K'(s), unit
  Vec3 deriv2(double s) const;  // K''(s)

  double max_curvature() const { return max_curvature_; }
  double min_self_distance() const { return min_self_dist_; }
  // min(0.5/max|K''|, half the minimal self-distance of non-adjacent samples)
  double injectivity_radius() const;

 private:
  KnotCurve() = default;
  void finalize();  // fills cached bounds

  std::function<Vec3(double)> pos_, vel_, acc_;
  double length_ = 0;
  double max_curvature_ = 0;
  double min_self_dist_ = 0;
};

// Orthonormal normal frame {e1, e2} with e_i . K' = 0, closed over [0, l].
// Built by the double-reflection rotation-minimizing method plus a linear
// twist that (a) closes the frame and (b) zeroes the self-linking of the
// pushed-off longitude, so the tube angle extends to a global closed 1-form.
class FrameField {
 public:
  FrameField(const KnotCurve& curve, int n_samples);

  Vec3 e1(double s) const;
  Vec3 e2(double s) const;
  // analytic s-derivatives of the frame (spline-exact)
  void frame_with_derivs(double s, Vec3& e1v, Vec3& e2v, Vec3& de1, Vec3& de2) const;
  // total twist applied on top of the rotation-minimizing frame, radians
  double twist_correction() const { return twist_total_; }
  int self_link_before_correction() const { return self_link_; }
  double closure_error() const { return closure_err_; }

  const KnotCurve& curve() const { return curve_; }

 private:
  KnotCurve curve_;  // held by value (cheap: evaluation closures share tables)
  int n_;
  double ds_;
  std::vector<Vec3> e1_raw_;  // RMF samples before twist
  std::vector<Vec3> e1_m_;    // periodic cubic spline second derivatives
  double twist_total_ = 0;
  double phi_err_ = 0;
  int self_link_ = 0;
  double closure_err_ = 0;

  void build_spline();
  Vec3 e1_rmf(double s) const;  // smooth RMF frame (periodic cubic spline)
};

Vec3 to_cartesian(const FrameField& frame, const TubularCoords& c);
// Throws std::domain_error("outside tubular neighborhood") when x is farther
// from K than the injectivity radius estimate.
TubularCoords from_cartesian(const FrameField& frame, const Vec3& x);

// g_delta in ambient Cartesian components: product tube metric inside
// N_delta, Euclidean outside N_{2delta}, quintic smoothstep between.
Mat3 metric_at(const FrameField& frame, const Vec3& x, double delta);

// quintic smoothstep: 0 for t<=0, 1 for t>=1
double smoothstep5(double t);
// cutoff chi_delta(rho): 1 on [0, delta], 0 on [2delta, inf)
double chi_cutoff(double rho, double delta);

struct MetricDeviationStats {
  double sup_ratio0 = 0;  // sup |g_delta - g0| / rho over in-tube samples
  double sup_dev1 = 0;    // sup |grad g_delta - grad g0| (finite differences)
  int n_in_tube = 0;
};
MetricDeviationStats metric_deviation_stats(const FrameField& frame, double delta,
                                            int n_samples, unsigned seed = 0);

// Gauss linking number of two closed sampled curves (rounds the integral).
int linking_number(const std::vector<Vec3>& a, const std::vector<Vec3>& da,
                   const std::vector<Vec3>& b, const std::vector<Vec3>& db,
                   double period_a, double period_b);

}  // namespace knotmono
