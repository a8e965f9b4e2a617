#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "semitrans/core_model.hpp"
#include "semitrans/dataset.hpp"
#include "semitrans/rng.hpp"

namespace semitrans {

// Strictly increasing continuous map with value 0 at 0.
struct TransformSpec {
  enum class Form { Identity, Power, Log1p };
  Form form = Form::Identity;
  double p = 1.0;

  static TransformSpec identity() { return {}; }
  static TransformSpec power(double p);
  static TransformSpec log1p() { return {Form::Log1p, 1.0}; }

  double value(double t) const;
  double inverse(double y) const;
  std::string name() const;
};

struct CovariateLaw {
  enum class Kind { Uniform, Discrete };
  Kind kind = Kind::Uniform;
  std::size_t dim = 1;
  std::vector<double> lo{-1.0};
  std::vector<double> hi{1.0};
  std::vector<std::vector<double>> support;
  std::vector<double> probs;  // empty means equal weights

  static CovariateLaw uniform(std::size_t dim, double lo = -1.0, double hi = 1.0);
  static CovariateLaw discrete(std::vector<std::vector<double>> support,
                               std::vector<double> probs = {});
  double bound() const;  // max |z_j| over the support
};

struct CensoringSpec {
  enum class Kind { None, KoziolGreen, IndependentWithAtom };
  enum class Continuous { Uniform, Exponential };
  Kind kind = Kind::None;
  double a = 1.0;       // Koziol-Green exponent
  double tau0 = 1.0;    // upper support point
  double atom = 0.5;    // mass at tau0
  Continuous continuous = Continuous::Uniform;
  double rate = 1.0;    // exponential continuous part

  static CensoringSpec none() { return {}; }
  static CensoringSpec koziol_green(double a);
  static CensoringSpec with_atom(double tau0, double atom,
                                 Continuous continuous = Continuous::Uniform, double rate = 1.0);
};

struct SimConfig {
  CoreModel model = CoreModel::odds_ratio(0.0, 1);
  std::vector<double> theta0{0.0};
  TransformSpec gamma0;
  CovariateLaw covariates;
  CensoringSpec censoring;
  std::size_t n = 100;
  std::uint64_t seed = 1;
};

void validate(const SimConfig& config);

std::vector<double> draw_covariates(const CovariateLaw& law, CounterRng& rng);

// T = gamma0^{-1}(A^{-1}(E)) for a given exponential variate E.
double failure_time_from_exponential(const CoreModel& model, std::span<const double> theta0,
                                     const TransformSpec& gamma0, std::span<const double> z,
                                     double e);
double draw_failure(const CoreModel& model, std::span<const double> theta0,
                    const TransformSpec& gamma0, std::span<const double> z, CounterRng& rng);
double draw_censoring(const SimConfig& config, std::span<const double> z, CounterRng& rng);

// record i is generated from stream i under config.seed, so the result does not
// depend on the number of jobs
std::vector<CensoredRecord> simulate_sample(const SimConfig& config, unsigned jobs = 1);

}  // namespace semitrans
