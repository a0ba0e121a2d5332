#pragma once

#include "knotmono/fiducial.hpp"
#include "knotmono/modes.hpp"
#include "knotmono/norms.hpp"

// Numerical audits of the standalone inequalities: boundary decay, the eta
// pair, the local quadratic estimate, trace/Hardy/Sobolev bounds, and the
// perp bound. Explicit-constant inequalities are asserted; implicit-constant
// ones report their empirical best constant.

namespace knotmono {

enum class IneqId {
  BOUNDARY_DECAY,
  ETA_PAIR,
  LOCAL_QUAD,
  TRACE_EXT,
  TRACE_SCALED,
  RADIAL_HARDY_EXT,
  WEIGHTED_SOBOLEV,
  SOBOLEV_EXT,
  HARDY_BALL,
  PERP_BOUND,
  EPS1_BOUNDARY,
};

const char* ineq_name(IneqId id);
bool ineq_asserted(IneqId id);  // margin is asserted (explicit constant)

struct HarnessContext {
  std::shared_ptr<const FrameField> frame;
  std::shared_ptr<const TubeGrid> tube;
  std::shared_ptr<const BoxGrid> box;
  std::shared_ptr<const LinkingForm> omega;
  ConfigField fiducial;  // model fiducial sampled on the grids
  FiducialParams fp;
  double eps = 0;  // tube->rho_max

  static HarnessContext make(double gamma, double M = 4.0, int n_s = 8, int n_theta = 16,
                             int n_rho = 24, int n_box = 16);
};

struct TestFieldSpec {
  // tubular content: triples (m, winding, j) with random profiles from the
  // polynomial x rho^p family, p in {0, 2 gamma, 1 - 2 gamma, 1}
  int n_modes = 3;
  int support = 2;  // 0 tube, 1 exterior, 2 both
  unsigned seed = 0;
};

ConfigField random_test_field(const HarnessContext& cx, const TestFieldSpec& spec);

struct MarginReport {
  IneqId id;
  double lhs = 0, rhs = 0;
  double margin = 0;        // rhs - lhs (nonnegative when the bound holds)
  double scale = 0;         // |lhs| + |rhs|
  double empirical_c = 0;   // best constant where the stated one is implicit
  bool asserted = false;
};

MarginReport check_inequality(IneqId id, const HarnessContext& cx, unsigned seed,
                              double eta = 0.5);

}  // namespace knotmono
