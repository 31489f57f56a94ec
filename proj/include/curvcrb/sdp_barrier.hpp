#pragma once

// Small dense semidefinite programs of the form
//
//   maximize    c^T x
//   subject to  A x = b,  mat_k(x) >= 0 for every block k,
//
// where x stacks the upper triangles (row-major, i <= j) of symmetric blocks.
// Solved by a primal log-barrier method on the affine feasible set,
// parameterized as x = x0 + B y with B an orthonormal null-space basis of A.
// The cones are shifted by shift * I so that a feasible start sitting on the
// boundary of the PSD cone (singular blocks) is admissible.

#include <vector>

#include <Eigen/Dense>

namespace curvcrb {

struct BlockSdpProblem {
  std::vector<int> block_sizes;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  Eigen::VectorXd x0;  // A x0 = b, blocks PSD
};

struct BarrierOptions {
  double shift = 1e-10;
  double gap_tol = 1e-10;      // stop once (barrier parameter) / t falls below
  double t_initial = 1.0;
  double t_growth = 10.0;
  int max_newton = 200;
  double centering_tol = 1e-13;  // Newton decrement^2 / 2
};

struct BarrierResult {
  Eigen::VectorXd x;
  int newton_iterations = 0;
  int outer_iterations = 0;
  bool converged = false;
  bool hit_iteration_cap = false;
  double gap_bound = 0.0;  // barrier parameter / final t
  std::vector<double> objective_history;  // c^T x after each centering
};

/// Number of packed upper-triangle entries of an n x n symmetric matrix.
inline int packed_size(int n) { return n * (n + 1) / 2; }

Eigen::MatrixXd unpack_block(const Eigen::VectorXd& x, int offset, int n);
Eigen::VectorXd pack_block(const Eigen::MatrixXd& m);

BarrierResult solve_block_sdp(const BlockSdpProblem& problem, const BarrierOptions& options = {});

}  // namespace curvcrb
