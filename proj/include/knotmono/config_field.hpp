#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "knotmono/knot.hpp"
#include "knotmono/sbp.hpp"
#include "knotmono/su2.hpp"

// Grid-sampled configurations ("0+1"-forms). Two blocks:
//  - tubular block in (s, theta, rho) with the product tube metric, field
//    components in the orthonormal coframe (d rho, rho d theta, ds);
//  - exterior Cartesian box with the tube carved out, components in dx_j.
// Per node 12 reals: three 1-form slots + the 0-form slot, each an su(2)
// coefficient triple in the {sigma1, sigma2, sigma3} basis.

namespace knotmono {

constexpr int kComps = 12;  // 4 slots x 3 su(2) coefficients

// slot order: 0,1,2 = 1-form components, 3 = 0-form
inline int comp_index(int slot, int su2c) { return slot * 3 + su2c; }

struct TubeGrid {
  int n_s = 0, n_theta = 0, n_rho = 0;
  double length = 0;          // knot length l
  double rho_min = 0, rho_max = 0;
  std::vector<double> rho;    // log-spaced nodes, ascending
  std::vector<double> w_rho;  // weights for \int f(rho) d rho (SBP norm in log rho)
  SbpOperator sbp_u;          // d/du on the uniform log-rho grid
  double w_theta = 0, w_s = 0;

  std::shared_ptr<const FrameField> frame;

  int n_nodes() const { return n_s * n_theta * n_rho; }
  // rho varies fastest
  int node(int i_s, int j_th, int k_rho) const { return (i_s * n_theta + j_th) * n_rho + k_rho; }
  double s_of(int i) const { return length * i / n_s; }
  double theta_of(int j) const { return 2.0 * std::numbers::pi * j / n_theta; }
};

std::shared_ptr<TubeGrid> make_tube_grid(std::shared_ptr<const FrameField> frame, int n_s,
                                         int n_theta, int n_rho, double rho_min, double rho_max);

struct BoxGrid {
  Eigen::Vector3i n{0, 0, 0};
  Vec3 lo{0, 0, 0};
  double h = 0;
  double rho_cut = 0;              // nodes with rho < rho_cut are masked out
  std::vector<double> rho;         // distance to the knot per node (inf if far)
  std::vector<std::uint8_t> active;
  std::shared_ptr<const FrameField> frame;

  int n_nodes() const { return n[0] * n[1] * n[2]; }
  int node(int i, int j, int k) const { return (i * n[1] + j) * n[2] + k; }
  Vec3 point(int i, int j, int k) const { return lo + h * Vec3(i, j, k); }
};

std::shared_ptr<BoxGrid> make_box_grid(std::shared_ptr<const FrameField> frame, const Vec3& lo,
                                       const Vec3& hi, int n_axis, double rho_cut);

struct ConfigField {
  std::shared_ptr<const TubeGrid> tube;
  std::shared_ptr<const BoxGrid> box;
  Eigen::VectorXd tube_data;  // kComps * tube->n_nodes()
  Eigen::VectorXd box_data;   // kComps * box->n_nodes()
  std::string metric = "g_delta";

  static ConfigField zeros(std::shared_ptr<const TubeGrid> t, std::shared_ptr<const BoxGrid> b);

  double* tube_at(int node) { return tube_data.data() + kComps * node; }
  const double* tube_at(int node) const { return tube_data.data() + kComps * node; }
  double* box_at(int node) { return box_data.data() + kComps * node; }
  const double* box_at(int node) const { return box_data.data() + kComps * node; }

  ConfigField& operator+=(const ConfigField& o);
  ConfigField& operator-=(const ConfigField& o);
  ConfigField& operator*=(double c);
  friend ConfigField operator+(ConfigField a, const ConfigField& b) { return a += b; }
  friend ConfigField operator-(ConfigField a, const ConfigField& b) { return a -= b; }
  friend ConfigField operator*(double c, ConfigField a) { return a *= c; }

  double dot_plain(const ConfigField& o) const;  // unweighted l2, both blocks
  int size() const { return static_cast<int>(tube_data.size() + box_data.size()); }
};

// Pointwise value of an analytic configuration: Cartesian 1-form components
// A[0..2] and the 0-form Phi, all 2x2 matrices.
struct ConfigValue {
  Mat2 a[3]{Mat2::Zero(), Mat2::Zero(), Mat2::Zero()};
  Mat2 phi{Mat2::Zero()};
};
using ConfigFn = std::function<ConfigValue(const Vec3&)>;

// Sample an analytic configuration onto both blocks (Cartesian components are
// rotated into the tube coframe on the tubular block).
ConfigField sample_config(std::shared_ptr<const TubeGrid> tube, std::shared_ptr<const BoxGrid> box,
                          const ConfigFn& fn);

// Tube coframe (d rho, rho d theta, ds) as Cartesian row vectors at (s,theta).
void tube_coframe(const FrameField& frame, double s, double theta, Vec3 out[3]);

}  // namespace knotmono
