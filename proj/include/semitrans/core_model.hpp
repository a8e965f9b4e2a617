#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace semitrans {

enum class Family { OddsRatio, LinearHazard };

// Parametric conditional hazard family alpha(x, theta, z).
// OddsRatio: alpha = r / (1 + eta r x), r = exp(theta'z); eta = 0 is proportional hazards.
// LinearHazard: alpha = a + x b, a = exp(theta1'z), b = exp(theta2'z), theta = (theta1, theta2).
class CoreModel {
 public:
  static CoreModel odds_ratio(double eta, std::size_t dim_theta,
                              double covariate_bound = std::numeric_limits<double>::infinity());
  static CoreModel linear_hazard(std::size_t dim_theta,
                                 double covariate_bound = std::numeric_limits<double>::infinity());

  Family family() const { return family_; }
  double eta() const { return eta_; }
  std::size_t dim_theta() const { return dim_theta_; }
  std::size_t dim_z() const { return family_ == Family::OddsRatio ? dim_theta_ : dim_theta_ / 2; }
  double covariate_bound() const { return covariate_bound_; }

  // hazard does not depend on x (proportional hazards)
  bool x_free() const { return family_ == Family::OddsRatio && eta_ == 0.0; }

  std::string family_name() const;

 private:
  CoreModel(Family family, double eta, std::size_t dim_theta, double bound)
      : family_(family), eta_(eta), dim_theta_(dim_theta), covariate_bound_(bound) {}

  Family family_;
  double eta_;
  std::size_t dim_theta_;
  double covariate_bound_;
};

struct LogHazardDerivs {
  double ell = 0;
  double ell_prime = 0;
  double ell_dprime = 0;
  std::vector<double> ell_dot;
};

double hazard(const CoreModel& model, double x, std::span<const double> theta,
              std::span<const double> z);
LogHazardDerivs log_hazard_derivs(const CoreModel& model, double x, std::span<const double> theta,
                                  std::span<const double> z);
double cum_hazard(const CoreModel& model, double x, std::span<const double> theta,
                  std::span<const double> z);
double inverse_cum_hazard(const CoreModel& model, double a, std::span<const double> theta,
                          std::span<const double> z);
// gradient of cum_hazard with respect to theta
std::vector<double> cum_hazard_theta_grad(const CoreModel& model, double x,
                                          std::span<const double> theta,
                                          std::span<const double> z);

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  static Box cube(std::size_t dim, double half_width) {
    return Box{std::vector<double>(dim, -half_width), std::vector<double>(dim, half_width)};
  }
  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> v) const;
  bool bounded() const;
};

struct RegularityReport {
  bool pass = true;
  std::string message;
  std::string worst_quantity;
  double worst_value = 0;
  double worst_x = 0;
  std::vector<double> worst_theta;
  std::vector<double> worst_z;
  double alpha0_min = 0;  // m1
  double alpha0_max = 0;  // m2
  double lp_envelope = 0;
  double ldp_envelope = 0;
  double ldot_envelope = 0;
};

// Numeric check of the envelope conditions on a lattice of the theta and z boxes:
// sup|l'|(x), sup|l''|(x) bounded and nonincreasing in x, sup|ldot|(x) bounded
// and square integrable against exp(-x), alpha(0) bounded away from 0 and infinity.
RegularityReport check_regularity(const CoreModel& model, const Box& theta_box, const Box& z_box,
                                  std::span<const double> x_grid, std::size_t lattice_points = 5);

}  // namespace semitrans
