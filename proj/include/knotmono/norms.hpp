#pragma once

#include "knotmono/config_field.hpp"
#include "knotmono/operators.hpp"

// Weighted (semi-)norms: L2_{N,eps}, Htilde_{N,eps}, H_{N,eps} on the tube,
// the global rho_eps-weighted L2_eps / H_eps, and boundary integrals over
// partial N_rho. All integrands and both sides of every inequality check are
// evaluated on the same nodes with the same weights.

namespace knotmono {

struct FiducialParams {
  double gamma = 0.1;
  double M = 4.0;
  double delta = 0.1;
};

// squared norms; N-kinds integrate tube nodes with rho <= eps
double norm2_L2N(const ConfigField& f, double eps);
double norm2_HtildeN(const ConfigField& f, double eps, Scheme scheme = Scheme::Spectral);
double norm2_HN(const ConfigField& f, double eps, const FiducialParams& fp,
                Scheme scheme = Scheme::Spectral);

// global: tube block (weight rho*rho_eps) plus box block (weight rho_eps)
double norm2_L2eps(const ConfigField& f, double eps);
// bg supplies the connection (a-slots) and Higgs (phi-slot) of the fiducial
// used for nabla^A and [Phi, .]; pass the model fiducial or a glued field.
double norm2_Heps(const ConfigField& f, double eps, const ConfigField& bg,
                  Scheme scheme = Scheme::Spectral);

// \oint_{partial N_rho0} |psi|^2 rho dOmega, components linearly interpolated
// in log rho. parts: 0 = full, 1 = sigma-parallel, 2 = perpendicular.
double boundary_norm2(const ConfigField& f, double rho0, int part = 0);

// pointwise split along sigma
void split_field(const ConfigField& f, ConfigField* par, ConfigField* perp);

// L2_eps quadrature weight per node (shared by the least-squares solver)
Eigen::VectorXd l2eps_node_weights_tube(const TubeGrid& g, double eps);
Eigen::VectorXd l2eps_node_weights_box(const BoxGrid& g, double eps);

// shared derivative kernels (same discretization as the operators)
namespace detail {
void tube_block_derivs(const TubeGrid& g, const Eigen::VectorXd& data, Scheme scheme,
                       Eigen::VectorXd& dr, Eigen::VectorXd& dt, Eigen::VectorXd& ds);
void box_block_derivs(const BoxGrid& g, const Eigen::VectorXd& data, Eigen::VectorXd d[3]);
}  // namespace detail

// coefficient-level |psi|^2 at a node
inline double node_norm2(const double* p) {
  double r = 0;
  for (int c = 0; c < kComps; ++c) r += p[c] * p[c];
  return r;
}

}  // namespace knotmono
