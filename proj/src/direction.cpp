#include "semitrans/direction.hpp"

#include <cmath>

#include "semitrans/error.hpp"

namespace semitrans {

Direction Direction::efficient() { return Direction(); }

Direction Direction::step(std::vector<StepComponent> components) {
  if (components.empty()) fail(ErrorCode::InvalidConfig, "step direction needs components");
  for (const auto& c : components) {
    if (c.values.size() != c.breaks.size() + 1)
      fail(ErrorCode::InvalidConfig, "step component needs one more value than breaks");
    for (std::size_t q = 0; q < c.breaks.size(); ++q) {
      if (!std::isfinite(c.breaks[q]) || (q > 0 && !(c.breaks[q] > c.breaks[q - 1])))
        fail(ErrorCode::InvalidConfig, "step breaks must be finite and strictly increasing");
    }
    for (double v : c.values)
      if (!std::isfinite(v)) fail(ErrorCode::InvalidConfig, "step values must be finite");
  }
  Direction d;
  d.kind_ = Kind::Step;
  d.dim_ = components.size();
  d.components_ = std::move(components);
  d.label_ = "step";
  return d;
}

Direction Direction::custom(std::size_t dim, Fn fn, std::string label) {
  if (dim == 0 || !fn) fail(ErrorCode::InvalidArgument, "custom direction needs dim and function");
  Direction d;
  d.kind_ = Kind::Custom;
  d.dim_ = dim;
  d.fn_ = std::move(fn);
  d.label_ = std::move(label);
  return d;
}

void Direction::validate(const CoreModel& model) const {
  if (kind_ == Kind::Step)
    for (const auto& c : components_)
      if (c.covariate >= model.dim_z())
        fail(ErrorCode::InvalidConfig, "step component refers to covariate " +
                                           std::to_string(c.covariate) + " outside dimension " +
                                           std::to_string(model.dim_z()));
  if (dim(model) > 32) fail(ErrorCode::InvalidConfig, "direction dimension too large");
}

}  // namespace semitrans
