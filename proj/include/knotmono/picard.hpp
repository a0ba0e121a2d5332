#pragma once

#include "knotmono/norms.hpp"
#include "knotmono/operators.hpp"

// Matrix-free discretization of the extended linearization, weighted
// least-squares solves (CGLS), and the contraction iteration of the local
// structure theorem.

namespace knotmono {

struct LinearOperatorHandle {
  ConfigField Psi;  // background configuration on the grids
  FiducialParams fp;
  double eps = 0;
  Scheme scheme = Scheme::FD2;
  Eigen::VectorXd sqw_tube, sqw_box;  // sqrt of the L2_eps node weights
  Eigen::VectorXd pc_tube, pc_box;    // Jacobi column scaling (1/sqrt diag est)

  ConfigField apply(const ConfigField& psi, bool dagger = false) const;
  ConfigField apply_transpose(const ConfigField& w, bool dagger = false) const;
  double l2eps_dot(const ConfigField& a, const ConfigField& b) const;
};

LinearOperatorHandle assemble_operator(const ConfigField& Psi, const FiducialParams& fp,
                                       double eps, Scheme scheme = Scheme::FD2);

struct SolveResult {
  ConfigField psi;
  double rel_residual = 1;  // ||L psi - rhs||_{L2eps} / ||rhs||_{L2eps}
  int iterations = 0;
  double c_emp = 0;  // ||psi||_{H_Psi,eps} / ||rhs||_{L2eps}
  bool converged = false;
};

// least-squares solve of L~ psi = rhs in the weighted norm; when a cokernel
// basis is supplied the right side is first projected off it
SolveResult solve_linear(const LinearOperatorHandle& h, const ConfigField& rhs, double tol,
                         int max_iter, const std::vector<ConfigField>* cokernel = nullptr);

struct IterationStep {
  int n = 0;
  double psi_norm = 0;     // H_{Psi,eps} norm of the step
  double v_norm = 0;       // L2_eps norm of V(Psi + sum psi)
  double gauge_norm = 0;   // L2_eps norm of the gauge functional
  double solve_residual = 0;
  double ratio = 0;        // psi_norm / previous psi_norm
};
struct IterationTrace {
  std::vector<IterationStep> steps;
  bool converged = false;
  std::string stop_reason;
};

struct PicardOptions {
  int n_max = 12;
  double tol_rel = 1e-6;       // target ||V|| relative to the initial one
  double solve_tol = 1e-9;
  int solve_max_iter = 20000;
  double contraction_guard = 0.9;
};

std::pair<ConfigField, IterationTrace> picard_iterate(const LinearOperatorHandle& h,
                                                      const ConfigField& psi0,
                                                      const PicardOptions& opt);

// cokernel-projected variant; returns the final obstruction (the projection
// of the residual drive onto the supplied basis)
struct ProjectedResult {
  ConfigField correction;
  IterationTrace trace;
  ConfigField obstruction;
  std::vector<double> obstruction_coeffs;
};
ProjectedResult picard_project(const LinearOperatorHandle& h, const ConfigField& psi0,
                               const std::vector<ConfigField>& cokernel,
                               const PicardOptions& opt);

}  // namespace knotmono
