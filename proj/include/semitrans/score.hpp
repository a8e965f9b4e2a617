#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "semitrans/core_model.hpp"
#include "semitrans/dataset.hpp"
#include "semitrans/direction.hpp"
#include "semitrans/empirical.hpp"
#include "semitrans/fredholm.hpp"
#include "semitrans/simulate.hpp"

namespace semitrans {

struct ScoreOptions {
  Direction direction = Direction::efficient();
  GammaFitOptions gamma;
  double phi_tol = 1e-8;
  bool per_subject = false;
};

struct ScoreContext {
  std::vector<double> theta;
  StepFunction gamma;        // transformation used for all plug-ins
  StepFunction gamma_check;  // its self-consistency image
  double gamma_residual = 0;
  int gamma_iterations = 0;
  Functionals functionals;
  FredholmSystem system;
  PhiSolution phi;
  GridMatrix d_ldot;  // D[ldot]
  GridMatrix tail;    // T_k = sum_{j>=k} P(t_k,t_j) rho[f,phi](t_j) dN(t_j)
  Direction direction;
};

struct ScoreOutput {
  Eigen::VectorXd u;
  Eigen::MatrixXd sigma1, sigma2, sigma0;
  Eigen::MatrixXd v;
  double v_condition = 0;
  GridMatrix per_subject;  // n x p, sorted record order; empty unless requested
};

struct ScoreResult {
  ScoreContext context;
  ScoreOutput output;
};

// fits the transformation at theta, then evaluates the score
ScoreResult score(const CensoredSample& sample, const CoreModel& model,
                  std::span<const double> theta, const ScoreOptions& opts = {});
// evaluates at a supplied transformation on the sample grid
ScoreResult score_at(const CensoredSample& sample, const CoreModel& model,
                     std::span<const double> theta, const StepFunction& gamma,
                     const ScoreOptions& opts = {});

// backward-pass tail integrals, and the O(m^2) direct double sum
GridMatrix tail_integrals(const Functionals& fun, const GridMatrix& phi);
GridMatrix tail_integrals_direct(const Functionals& fun, const GridMatrix& phi);

Eigen::VectorXd score_vector(const CensoredSample& sample, const CoreModel& model,
                             const ScoreContext& ctx);

struct SigmaMatrices {
  Eigen::MatrixXd sigma1, sigma2, sigma0;
};
SigmaMatrices sigma_matrices(const ScoreContext& ctx);

// plug-in V; throws SingularMatrix when the condition number exceeds 1e12
Eigen::MatrixXd v_matrix(const ScoreContext& ctx);
Eigen::MatrixXd v_matrix_unchecked(const ScoreContext& ctx);
double v_condition(const ScoreContext& ctx, const Eigen::MatrixXd& V);
double condition_number(const Eigen::MatrixXd& m);
constexpr double kMaxCondition = 1e12;

// per-record contributions whose mean (with the fitted transformation) is u
GridMatrix per_subject_contributions(const CensoredSample& sample, const CoreModel& model,
                                     const ScoreContext& ctx);

// Nuisance direction g(u), piecewise constant in time: values[q] on [breaks[q-1], breaks[q]).
struct NuisanceDirection {
  std::string label;
  std::vector<double> breaks;
  std::vector<double> values{1.0};

  static NuisanceDirection constant(double c = 1.0);
  static NuisanceDirection indicator_upto(double cut);
};

struct OrthogonalityEntry {
  std::string label;
  std::size_t component = 0;
  double sum = 0;
  double sum_sq = 0;
  std::size_t count = 0;

  double mean() const;
  double se() const;
  double z() const;
};

struct OrthogonalityReport {
  std::vector<OrthogonalityEntry> entries;
  // per component: mean of the score contributions and of their squares
  std::vector<double> u_sum, u_sum_sq;
  std::size_t count = 0;

  void merge(const OrthogonalityReport& other);
  bool pass(double z_limit = 3.0) const;
};

// Covariance between efficient-score contributions at (theta0, gamma0) and the
// nuisance scores of each g, using the true martingales of the sample.
OrthogonalityReport nuisance_orthogonality_check(const CensoredSample& sample,
                                                 const CoreModel& model,
                                                 std::span<const double> theta0,
                                                 const TransformSpec& gamma0,
                                                 const std::vector<NuisanceDirection>& g_specs);

}  // namespace semitrans
