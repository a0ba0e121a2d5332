#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

// Diagonal-norm summation-by-parts first derivative on a uniform grid
// (4th-order interior, 2nd-order boundary closures). The pair (D, H)
// satisfies H D + D^T H = diag(-1, 0, ..., 0, 1) exactly, so discrete
// integration by parts holds with no interior residual; H is a 4th-order
// accurate quadrature.

namespace knotmono {

struct SbpOperator {
  int n = 0;
  double h = 1;
  std::vector<double> H;  // norm weights, including the h factor
  // banded rows: row k couples nodes idx[k][j] with weights w[k][j]
  std::vector<std::vector<int>> idx;
  std::vector<std::vector<double>> w;
};

inline SbpOperator make_sbp42(int n, double h) {
  if (n < 12) throw std::invalid_argument("make_sbp42: need at least 12 nodes");
  SbpOperator op;
  op.n = n;
  op.h = h;
  op.H.assign(n, h);
  const double hb[4] = {17.0 / 48, 59.0 / 48, 43.0 / 48, 49.0 / 48};
  for (int i = 0; i < 4; ++i) {
    op.H[i] = hb[i] * h;
    op.H[n - 1 - i] = hb[i] * h;
  }
  // Q = antisymmetric + diag(-1/2, 0, ..., 0, 1/2); D = H^{-1} Q
  std::vector<std::vector<double>> Q(n, std::vector<double>(n, 0.0));
  auto set_upper = [&](int a, int b, double v) {
    Q[a][b] = v;
    Q[b][a] = -v;
  };
  // interior stencil
  for (int k = 0; k < n; ++k) {
    if (k + 1 < n) set_upper(k, k + 1, 2.0 / 3);
    if (k + 2 < n) set_upper(k, k + 2, -1.0 / 12);
  }
  // boundary closures (Mattsson-Nordstrom); entries not listed keep the
  // interior values
  set_upper(0, 1, 59.0 / 96);
  set_upper(0, 3, -1.0 / 32);
  set_upper(1, 2, 59.0 / 96);
  set_upper(1, 3, 0.0);
  set_upper(2, 3, 59.0 / 96);
  set_upper(n - 2, n - 1, 59.0 / 96);
  set_upper(n - 4, n - 1, -1.0 / 32);
  set_upper(n - 3, n - 2, 59.0 / 96);
  set_upper(n - 4, n - 2, 0.0);
  set_upper(n - 4, n - 3, 59.0 / 96);
  Q[0][0] = -0.5;
  Q[n - 1][n - 1] = 0.5;

  op.idx.resize(n);
  op.w.resize(n);
  for (int k = 0; k < n; ++k)
    for (int j = std::max(0, k - 6); j <= std::min(n - 1, k + 6); ++j)
      if (Q[k][j] != 0.0) {
        op.idx[k].push_back(j);
        op.w[k].push_back(Q[k][j] / op.H[k]);
      }
  return op;
}

}  // namespace knotmono
