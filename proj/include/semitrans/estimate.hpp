#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "semitrans/error.hpp"
#include "semitrans/score.hpp"

namespace semitrans {

enum class Method { ZEstimator, OneStep };
const char* method_name(Method m);

struct FitResult {
  std::vector<double> theta_hat;
  StepFunction gamma_hat;
  Eigen::MatrixXd cov_theta;
  std::vector<double> se;
  std::vector<double> score;  // U at theta_hat
  double score_norm_at_solution = 0;
  int iterations = 0;
  Method method = Method::ZEstimator;
  std::map<std::string, double> diagnostics;
};

struct EstimateOptions {
  double tol = 1e-8;
  int max_iter = 50;
  double trust_radius = 1.0;
  Box box;  // empty means [-10, 10]^dim_theta
  int max_halvings = 30;
  GammaFitOptions gamma;
  double phi_tol = 1e-8;
  bool covariance = true;
};

// Estimation failure carrying the last iterate for diagnostics.
class EstimationError : public Error {
 public:
  EstimationError(ErrorCode code, const std::string& message, FitResult last)
      : Error(code, message), last_(std::move(last)) {}
  const FitResult& last() const { return last_; }

 private:
  FitResult last_;
};

FitResult z_estimate(const CensoredSample& sample, const CoreModel& model, const Direction& f,
                     std::span<const double> theta_init, const EstimateOptions& opts = {});

FitResult one_step(const CensoredSample& sample, const CoreModel& model, const Direction& f,
                   std::span<const double> theta0_hat, const EstimateOptions& opts = {});

struct Interval {
  double lo = 0;
  double hi = 0;
};
std::vector<Interval> confidence_intervals(const FitResult& fit, double level);

// V^{-1} Sigma0 V^{-T} / n
Eigen::MatrixXd sandwich_covariance(const ScoreOutput& out, std::size_t n);

}  // namespace semitrans
