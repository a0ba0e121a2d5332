#pragma once

#include <complex>

#include "knotmono/config_field.hpp"
#include "knotmono/norms.hpp"
#include "knotmono/sbp.hpp"

// Fourier-component calculus near the knot: radial operators for the
// extended linearization and its adjoint, mode energies, the eigenvalue
// sandwich, and the lower-bound inequality on single modes.

namespace knotmono {

using VecXc = Eigen::VectorXcd;

struct ModeGrid {
  int n = 0;
  double eps = 0, rho_min = 0;
  std::vector<double> rho;
  SbpOperator sbp_u;  // d/du on the log grid
  std::vector<double> w;  // weights for \int f d rho

  static ModeGrid make(double eps, int n = 257, double depth = 1048576.0 /* 2^20 */);
};

struct ModePair {
  ModeGrid grid;
  VecXc u, v;   // radial coefficients of alpha, beta along h_j
  int m = 0;    // theta index
  double k = 0; // s frequency, k l / (2 pi) integer
  int j = 0;    // [i sigma, .] eigenvalue / 2
  double gamma = 0.1, M = 4.0;

  double lambda() const { return m + 1 + 2.0 * gamma * j; }
  static ModePair make(const ModeGrid& g, int m, int n_s_winding, double knot_length, int j,
                       double gamma, double M);
};

// the two radial expressions of the extended operator on a Fourier component;
// dagger flips the sign of the M j coupling
std::pair<VecXc, VecXc> mode_apply(const ModePair& p, bool dagger);

// || psi ||^2_{H_{N,eps}} of the assembled mode
double mode_energy(const ModePair& p);
// || L~ psi ||^2_{L2_eps} via the radial expressions
double mode_l2_of_apply(const ModePair& p, bool dagger);

struct ThetaBoundResult {
  double lhs = 0, mid = 0, rhs = 0;
  double lhs2 = 0;  // min{4 gamma^2, (1-2 gamma)^2} j^2
  bool ok = false;
};
// min{4g^2,(1-2g)^2/2}(m^2+j^2) <= (m+2gj)^2 <= (1+4g^2)(m^2+j^2),
// and min{4g^2,(1-2g)^2} j^2 <= (m+2gj)^2
ThetaBoundResult theta_bound_check(double gamma, int m, int j);

struct ModeMarginReport {
  double lhs = 0, rhs = 0, margin = 0, scale = 0;
  double l2_Lpsi = 0, energy = 0, boundary_perp = 0, boundary_term = 0;
};
// || L~ psi ||^2 + c_perp * boundary_perp >= c_H ||psi||^2_H + boundary_term,
// with the constants of the gamma in (0,1/8) proposition or its
// (3/8,1/2) variant. Throws for gamma outside both ranges.
ModeMarginReport prop_lower_bound_check(const ModePair& p, bool dagger = false);

// decomposition audit: || L~ psi ||^2 minus its exact radial decomposition
// (integration-by-parts residue; ~roundoff by the SBP structure)
double mode_ibp_residue(const ModePair& p, bool dagger);

// assemble the 3D field (real and imaginary parts) on a tube grid sharing the
// rho nodes of p.grid
void assemble_mode_field(const ModePair& p, const std::shared_ptr<const TubeGrid>& tube,
                         ConfigField& re, ConfigField& im);
// read back (alpha, beta) radial coefficients along the theta = 0, s = 0 line
void extract_profiles(const ConfigField& re, const ConfigField& im, int j, VecXc& alpha,
                      VecXc& beta);
// |h_j|^2 under the real pairing: the 3D norms of an assembled mode carry an
// extra factor pi*l*hj_norm2 relative to the 1D radial integrals
inline double hj_norm2(int j) { return j == 0 ? 1.0 : 0.5; }

// recover the two radial rows of the operator output on an assembled mode
void extract_mode_rows(const ConfigField& out_re, const ConfigField& out_im, int j, VecXc& row1,
                       VecXc& row2);

}  // namespace knotmono
