#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "semitrans/empirical.hpp"

namespace semitrans {

// Transformed Fredholm system on the event grid: kernel k(t,u) = c(min(t,u)) with
// jump measures dc = P(0,.)^{-2} dC and db = P(0,.)^2 dB.
struct FredholmSystem {
  GridPtr grid;
  std::vector<double> dc, db;  // jumps
  std::vector<double> c, b;    // cumulative
  std::vector<double> log_p0;
  std::vector<double> psi1_from0;   // Psi1(0, t_k)
  std::vector<double> psi0_to_end;  // Psi0(t_k, tau0), atom at t_k excluded
  std::vector<double> kappa_curve;  // kappa(t_k) = sum_{j<=k} c_j db_j
  double psi0_total = 1.0;          // Psi0(0, tau0)
  double kappa = 0.0;

  std::size_t size() const { return dc.size(); }
  StepFunction c_fn() const { return StepFunction(grid, c, 0.0, true); }
  StepFunction b_fn() const { return StepFunction(grid, b, 0.0, true); }
  StepFunction kappa_fn() const { return StepFunction(grid, kappa_curve, 0.0, true); }
};

FredholmSystem build_system(const Functionals& fun);
// from raw jumps of C, B and log P(0,.) on a grid of the same length
FredholmSystem build_system(GridPtr grid, std::span<const double> dC, std::span<const double> dB,
                            std::span<const double> log_p0);
// directly from the transformed jumps (P == 1)
FredholmSystem build_transformed(std::span<const double> dc, std::span<const double> db);

// resolvent of the transformed problem at grid indices s, t
double resolvent(const FredholmSystem& sys, std::size_t s, std::size_t t);
Eigen::MatrixXd resolvent_matrix(const FredholmSystem& sys);

// apply the resolvent: out_k = sum_j resolvent(k, j) g_j, column by column, in O(m)
GridMatrix apply_resolvent(const FredholmSystem& sys, const GridMatrix& g);

// dense assembly (I + k diag(db)) psi = rhs; m <= 2000
GridMatrix solve_dense_oracle(const FredholmSystem& sys, const GridMatrix& rhs);
Eigen::MatrixXd resolvent_dense(const FredholmSystem& sys);
// dense operator I + k diag(db) and its eigenvalues (through the symmetric
// similar form I + db^{1/2} k db^{1/2})
Eigen::MatrixXd dense_operator(const FredholmSystem& sys);
Eigen::VectorXd operator_eigenvalues(const FredholmSystem& sys);

// tridiagonal route: (k^{-1} + diag(db)) psi = g solves (I + k diag(db)) psi = k g
GridMatrix solve_tridiagonal(const FredholmSystem& sys, const GridMatrix& g);

// k g in O(m)
GridMatrix apply_kernel(const FredholmSystem& sys, const GridMatrix& g);

// grid surrogate of the L2(B x B) norm of K: sum_{t,u} K(t,u)^2 dB(t) dB(u)
double kernel_l2_surrogate(const FredholmSystem& sys);

struct PhiSolution {
  GridMatrix phi;        // m x p
  GridMatrix d_f;        // D[f]
  GridMatrix rho_tilde;  // P(0,t) (cov[f,l'] + var[l'] D[f])
  double residual = 0;
  std::string route;     // psi, tridiagonal or dense
};

// phi = -D[f] + P(0,.) psi_tilde with psi_tilde = resolvent applied to rho_tilde dN
PhiSolution solve_phi(const FredholmSystem& sys, const Functionals& fun, double tol = 1e-8);

// sup-norm residual of phi = -D - sum K phi dB + sum K cov[f,l'] dN
double fredholm_residual(const Functionals& fun, const FredholmSystem& sys, const GridMatrix& phi,
                         const GridMatrix& d_f);

// Interval functions on cuts: entry (p,q), p <= q, covers atoms p+1..q (1-based),
// i.e. the grid window (t_p, t_q].
struct IntervalTables {
  Eigen::MatrixXd psi0, psi1, psi2, psi3;
};
IntervalTables interval_tables(const FredholmSystem& sys);

}  // namespace semitrans
