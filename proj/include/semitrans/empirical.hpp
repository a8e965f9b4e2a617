#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "semitrans/core_model.hpp"
#include "semitrans/dataset.hpp"
#include "semitrans/direction.hpp"

namespace semitrans {

// row k holds the value at t_k
using GridMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Risk-set functionals on the event grid at (gamma, theta).
struct Functionals {
  GridPtr grid;
  std::size_t p = 0;  // direction dimension
  std::size_t d = 0;  // dim_theta
  std::vector<double> dN;
  std::vector<double> s1;
  std::vector<double> s_lp;
  std::vector<double> e_lp;
  std::vector<double> var_lp;
  GridMatrix s_f;          // m x p
  GridMatrix e_f;          // m x p
  GridMatrix var_f;        // m x p*p
  GridMatrix cov_f_lp;     // m x p
  GridMatrix cov_f_ldot;   // m x p*d, entry (i,j) at i*d+j
  GridMatrix s_ldot;       // m x d
  GridMatrix e_ldot;       // m x d
  GridMatrix cov_lp_ldot;  // m x d
  std::vector<double> dC;
  std::vector<double> dB;
  std::vector<double> log_p0;  // log P(0, t_k)

  std::size_t size() const { return dN.size(); }
  StepFunction C() const { return StepFunction::from_jumps(grid, dC, 0.0, true); }
  StepFunction B() const { return StepFunction::from_jumps(grid, dB, 0.0, true); }
  StepFunction logP0() const { return StepFunction(grid, log_p0, 0.0); }
  StepFunction s1_fn() const { return StepFunction(grid, s1, 0.0); }
  // P(t_u, t_t) for grid indices; index npos stands for time 0
  double p_ratio(std::size_t u, std::size_t t) const;
};

enum class SHatTag { One, EllPrime, EllDoublePrime, EllDot };

// (1/n) sum over the risk set of f * alpha at gamma(t_k)
GridMatrix s_hat(const CensoredSample& sample, const CoreModel& model, const StepFunction& gamma,
                 std::span<const double> theta, SHatTag tag);
GridMatrix s_hat(const CensoredSample& sample, const CoreModel& model, const StepFunction& gamma,
                 std::span<const double> theta, const Direction& f);

Functionals conditional_moments(const CensoredSample& sample, const CoreModel& model,
                                const StepFunction& gamma, std::span<const double> theta,
                                const Direction& f);

StepFunction gamma_check(const CensoredSample& sample, const CoreModel& model,
                         const StepFunction& gamma, std::span<const double> theta);

struct GammaFitOptions {
  double tol = 1e-10;
  int max_iter = 200;
};

struct GammaFit {
  StepFunction gamma;
  double residual = 0;  // sup |gamma_check(gamma) - gamma|
  int iterations = 0;   // fixed-point refinements after the forward pass
};

GammaFit fit_gamma(const CensoredSample& sample, const CoreModel& model,
                   std::span<const double> theta, const GammaFitOptions& opts = {});

// D[f] by recursion, one column per component of s_f
GridMatrix d_volterra(const Functionals& fun, const GridMatrix& s_f);
// D[f](t_k) = -sum_{j<=k} s_f(t_j) dC(t_j) P(t_j, t_k)
GridMatrix d_volterra_explicit(const Functionals& fun, const GridMatrix& s_f);

}  // namespace semitrans
