#pragma once

#include <array>
#include <memory>

#include "knotmono/config_field.hpp"
#include "knotmono/norms.hpp"
#include "knotmono/operators.hpp"

// The model fiducial configuration (gamma sigma omega, M sigma) with its
// closed linking 1-form, and the closed-form 1-monopole with curvature.

namespace knotmono {

// --- 1-monopole -------------------------------------------------------------

struct MonopolePose {
  Vec3 center{0, 0, 0};
  double mass = 1.0;              // the M of the closed form
  Mat2 orientation = Mat2::Identity();  // constant gauge rotation
};

// Closed-form evaluation; total off the center (the Dirac-ray gauge
// singularity is evaluated in the transverse limit and counted in *flagged).
ConfigValue eval_monopole(const MonopolePose& pose, const Vec3& x, int* flagged = nullptr);
// (F_23, F_31, F_12) from the closed-form curvature display.
std::array<Mat2, 3> monopole_curvature_closed_form(const MonopolePose& pose, const Vec3& x,
                                                   int* flagged = nullptr);
// Gauge-equivalent hedgehog form of the same solution.
ConfigValue hedgehog_equivalent(const MonopolePose& pose, const Vec3& x);

// Gauge-invariant radial profile in the normalization where the asymptotic
// direction field is unit: sqrt(-2 tr Phi^2) = M (coth r - 1/r).
double higgs_profile(const Mat2& phi);
// The unit direction field v of the closed form (before orientation).
Mat2 monopole_v(const MonopolePose& pose, const Vec3& x);

// --- linking form -----------------------------------------------------------

// Closed 1-form on R^3 \ K equal to d theta on N_{2.1 delta}, with meridian
// circulation 2 pi; built from the Gauss integral with a shell correction,
// optionally truncated to bounded support outside r_far.
class LinkingForm {
 public:
  LinkingForm(std::shared_ptr<const FrameField> frame, double delta, double r_far = 0.0);

  Vec3 eval(const Vec3& x) const;        // covector components
  Vec3 gauss_integral(const Vec3& x) const;
  Vec3 dtheta_chart(const Vec3& x) const;  // d theta of the tube chart
  // scalar potential g with dg = omega_G - d theta on the matching shell
  double shell_potential(const Vec3& x) const;
  double circulation(const std::function<Vec3(double)>& loop, int n = 256) const;

  double delta() const { return delta_; }
  const FrameField& frame() const { return *frame_; }

 private:
  std::shared_ptr<const FrameField> frame_;
  double delta_;
  double r_far_;
  double g_offset_ = 0;   // shell potential is normalized to near-zero mean
  double shell_out_ = 6;  // outer shell edge in units of delta
  int n_quad_ = 512;
  std::vector<Vec3> kpts_, kvel_;

  double far_potential(const Vec3& x) const;
};

// --- model fiducial ---------------------------------------------------------

// A = gamma sigma omega, Phi = M sigma as a pointwise closure
ConfigFn model_fiducial_fn(const FiducialParams& p, std::shared_ptr<const LinkingForm> omega);

// Grid-sampled fiducial; the tube block is filled analytically
// (a_theta = gamma sigma / rho, phi = M sigma), so its discrete Bogomolny
// residual vanishes identically.
ConfigField model_fiducial_field(const FiducialParams& p,
                                 std::shared_ptr<const LinkingForm> omega,
                                 std::shared_ptr<const TubeGrid> tube,
                                 std::shared_ptr<const BoxGrid> box);

}  // namespace knotmono
