#pragma once

#include "knotmono/fiducial.hpp"

// Admissible approximate solutions: n 1-monopoles with disjoint Dirac-ray
// neighborhoods glued into the global fiducial through a partition of unity.

namespace knotmono {

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit
  double distance_to(const Vec3& x) const {
    Vec3 v = x - origin;
    double t = std::max(0.0, v.dot(direction));
    return (v - t * direction).norm();
  }
};

struct Placement {
  std::vector<MonopolePose> poses;  // pose mass = 2 M (far field matches M sigma)
  std::vector<Ray> rays;
  double d = 0, R = 0;
  Vec3 origin{0, 0, 0};
  double min_separation = 0;  // audited distance between the R-neighborhoods
};

// centers on a ring of radius 4R with outward rays; throws when the ring
// cannot hold n disjoint R-neighborhoods
Placement plan_placement(int n, double d, double R, double fiducial_M);

// partition of unity: cutoffs 1 on V_j(d), transitioning over a log profile
// within a cone that widens with r so the gradient decays like 1/r
struct PartitionOfUnity {
  const Placement* placement = nullptr;
  // chi_j for j = 0..n (0 = fiducial slot)
  double chi(int j, const Vec3& x) const;
  Vec3 grad_chi(int j, const Vec3& x, double h = 1e-4) const;
};

struct PartitionAudit {
  double sum_dev = 0;       // max |1 - sum chi_j|
  double sup_grad_rln = 0;  // max |grad chi_j| * r
  double sup_grad_dr = 0;   // max |grad chi_j| * d * r (reported)
};
PartitionAudit audit_partition(const PartitionOfUnity& pu, unsigned seed = 0, int n_samples = 400);

// glued configuration as a pointwise closure
ConfigFn glued_field(const Placement& p, const FiducialParams& fp,
                     std::shared_ptr<const LinkingForm> omega);

struct AdmissibilityReport {
  double phi_limit = 0;       // shell-averaged |Phi| at the largest radius
  double phi_spread = 0;      // relative spread across shells/directions
  double shell_r2F_min = 0, shell_r2F_max = 0;  // r^2 (|grad Phi| + |F|)
  double fiducial_dev_on_tube = 0;  // sup |Psi - Psi_hat| on N_{100 delta}
  double sup_V = 0;           // pointwise Bogomolny residual, sampled
  double mu_target = 0;
  bool pass_limit = false, pass_decay = false, pass_fiducial = false, pass_mu = false;
};

AdmissibilityReport admissibility_report(const Placement& p, const FiducialParams& fp,
                                         std::shared_ptr<const LinkingForm> omega,
                                         double mu_target, unsigned seed = 0);

}  // namespace knotmono
