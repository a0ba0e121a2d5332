#pragma once

#include <array>

#include "knotmono/config_field.hpp"

// Clifford multiplication, curvature, the Bogomolny residual V, the
// linearization L_Psi, the extended operator L~ and its formal adjoint, and
// the quadratic form Q. All first-order pieces share the same discrete
// derivative kernels, so V(Psi + psi) = V(Psi) + L(psi) + Q(psi,psi) holds
// nodewise to roundoff.

namespace knotmono {

enum class Scheme { FD2, Spectral };

// rho(tau)(a + phi) = <tau,a> + *(tau ^ a) - phi tau.
// Orthonormal-frame components; satisfies rho(tau)^2 = -|tau|^2.
ConfigValue clifford_mul(const Vec3& tau, const ConfigValue& psi);
// Metric-aware version: tau and psi.a in coordinate components, g SPD.
ConfigValue clifford_mul(const Vec3& tau, const ConfigValue& psi, const Mat3& g);

struct TwoFormField {
  std::shared_ptr<const TubeGrid> tube;
  std::shared_ptr<const BoxGrid> box;
  // components (F_23, F_31, F_12), 3 su(2) coefficients each
  Eigen::VectorXd tube_data, box_data;
  bool one_sided_stencils = false;  // set when boundary stencils were used
};

TwoFormField curvature(const ConfigField& A, Scheme scheme = Scheme::Spectral);

// V(Psi) = *F^A - d_A Phi. Output lives in the 1-form slots; 0-form slot 0.
ConfigField bogomolny_residual(const ConfigField& Psi, Scheme scheme = Scheme::Spectral);

// L_Psi(psi) = *d_A a - d_A phi - [a ^ Phi] (1-form part only).
ConfigField apply_linearization(const ConfigField& Psi, const ConfigField& psi,
                                Scheme scheme = Scheme::Spectral);

// Extended operator: 1-form part of L_Psi plus the gauge row
// *d_A*a + [Phi, phi] in the 0-form slot; dagger flips the [Phi, .] sign.
ConfigField apply_extended(const ConfigField& Psi, const ConfigField& psi, bool dagger,
                           Scheme scheme = Scheme::Spectral);

// Exact transpose of apply_extended under the plain coefficient dot product.
ConfigField apply_extended_transpose(const ConfigField& Psi, const ConfigField& w, bool dagger,
                                     Scheme scheme = Scheme::Spectral);

// Symmetric bilinear Q with Q(psi,psi) the quadratic Taylor term of V.
ConfigField quadratic(const ConfigField& psi1, const ConfigField& psi2);

// Gauge-fixing functional *d_A*a + [Phi, phi] alone (0-form slot).
ConfigField gauge_functional(const ConfigField& Psi, const ConfigField& psi,
                             Scheme scheme = Scheme::Spectral);

double sup_norm(const ConfigField& f);          // max nodewise su(2) norm over slots
double sup_norm(const TwoFormField& f);

// --- pointwise probes for analytic configurations ---

// V at a point by centered differences of step h on the Cartesian components.
std::array<Mat2, 3> residual_at(const ConfigFn& fn, const Vec3& x, double h);
// F = dA + 1/2 [A^A]; returns (F_23, F_31, F_12).
std::array<Mat2, 3> curvature_fd_at(const ConfigFn& fn, const Vec3& x, double h);
double sup_entry(const std::array<Mat2, 3>& m);

}  // namespace knotmono
