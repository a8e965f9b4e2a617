#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "semitrans/core_model.hpp"

namespace semitrans {

// Arguments available to a score direction f(x, theta, z) at grid index k.
struct DirectionArgs {
  std::size_t k;  // grid index, or npos off the grid
  double x;       // transformation value
  const double* z;
  double ell_prime;
  const double* ell_dot;
};

// f_j(x, z) = z[covariate] * w(x), w piecewise constant with values[q] on
// [breaks[q-1], breaks[q])
struct StepComponent {
  std::size_t covariate = 0;
  std::vector<double> breaks;
  std::vector<double> values{1.0};

  double weight(double x) const {
    auto q = static_cast<std::size_t>(std::upper_bound(breaks.begin(), breaks.end(), x) -
                                      breaks.begin());
    return values[q];
  }
};

class Direction {
 public:
  enum class Kind { Efficient, Step, Custom };
  using Fn = std::function<void(const DirectionArgs&, double* out)>;

  Direction() = default;
  static Direction efficient();
  static Direction step(std::vector<StepComponent> components);
  static Direction custom(std::size_t dim, Fn fn, std::string label = "custom");

  Kind kind() const { return kind_; }
  bool is_efficient() const { return kind_ == Kind::Efficient; }
  std::size_t dim(const CoreModel& model) const {
    return kind_ == Kind::Efficient ? model.dim_theta() : dim_;
  }
  const std::vector<StepComponent>& components() const { return components_; }
  const std::string& label() const { return label_; }

  // throws if the direction is inconsistent with the model
  void validate(const CoreModel& model) const;

  void eval(const DirectionArgs& a, std::size_t dim_theta, double* out) const {
    switch (kind_) {
      case Kind::Efficient:
        for (std::size_t j = 0; j < dim_theta; ++j) out[j] = a.ell_dot[j];
        break;
      case Kind::Step:
        for (std::size_t j = 0; j < components_.size(); ++j)
          out[j] = a.z[components_[j].covariate] * components_[j].weight(a.x);
        break;
      case Kind::Custom:
        fn_(a, out);
        break;
    }
  }

 private:
  Kind kind_ = Kind::Efficient;
  std::size_t dim_ = 0;
  std::vector<StepComponent> components_;
  Fn fn_;
  std::string label_ = "efficient";
};

}  // namespace semitrans
