#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>

#include "semitrans/core_model.hpp"
#include "semitrans/error.hpp"

namespace semitrans::detail {

constexpr std::size_t kMaxDim = 32;

struct Point {
  double alpha;
  double lp;   // l'
  double ldp;  // l''
  std::array<double, kMaxDim> ldot;
};

// Per covariate vector quantities at a fixed theta.
struct Unit {
  double r1;  // exp(theta'z) or a
  double r2;  // b (linear hazard)
  const double* z;
};

// Fast evaluation of a core model at a fixed theta.
class Kernel {
 public:
  Kernel(const CoreModel& model, std::span<const double> theta)
      : family_(model.family()), eta_(model.eta()), d_(model.dim_z()), p_(model.dim_theta()),
        theta_{} {
    if (theta.size() != p_) fail(ErrorCode::DimensionMismatch, "theta has wrong dimension");
    if (p_ > kMaxDim) fail(ErrorCode::InvalidArgument, "dim_theta exceeds supported maximum");
    for (std::size_t j = 0; j < p_; ++j) theta_[j] = theta[j];
  }

  std::size_t dim_theta() const { return p_; }
  std::size_t dim_z() const { return d_; }

  Unit unit(const double* z) const {
    if (family_ == Family::OddsRatio) {
      double s = 0;
      for (std::size_t j = 0; j < d_; ++j) s += theta_[j] * z[j];
      return Unit{std::exp(s), 0.0, z};
    }
    double s1 = 0, s2 = 0;
    for (std::size_t j = 0; j < d_; ++j) {
      s1 += theta_[j] * z[j];
      s2 += theta_[d_ + j] * z[j];
    }
    return Unit{std::exp(s1), std::exp(s2), z};
  }

  double alpha(const Unit& u, double x) const {
    if (family_ == Family::OddsRatio) return u.r1 / (1.0 + eta_ * u.r1 * x);
    return u.r1 + x * u.r2;
  }

  // alpha and d alpha / dx
  void alpha_slope(const Unit& u, double x, double& a, double& da) const {
    if (family_ == Family::OddsRatio) {
      double q = 1.0 / (1.0 + eta_ * u.r1 * x);
      a = u.r1 * q;
      da = -eta_ * a * a;
    } else {
      a = u.r1 + x * u.r2;
      da = u.r2;
    }
  }

  void eval(const Unit& u, double x, Point& pt) const {
    if (family_ == Family::OddsRatio) {
      double q = 1.0 / (1.0 + eta_ * u.r1 * x);
      pt.alpha = u.r1 * q;
      pt.lp = -eta_ * pt.alpha;
      pt.ldp = pt.lp * pt.lp;
      for (std::size_t j = 0; j < d_; ++j) pt.ldot[j] = u.z[j] * q;
    } else {
      pt.alpha = u.r1 + x * u.r2;
      double inv = 1.0 / pt.alpha;
      pt.lp = u.r2 * inv;
      pt.ldp = -pt.lp * pt.lp;
      double wa = u.r1 * inv, wb = x * u.r2 * inv;
      for (std::size_t j = 0; j < d_; ++j) {
        pt.ldot[j] = wa * u.z[j];
        pt.ldot[d_ + j] = wb * u.z[j];
      }
    }
  }

  double cum(const Unit& u, double x) const {
    if (family_ == Family::OddsRatio) {
      if (eta_ == 0.0) return u.r1 * x;
      return std::log1p(eta_ * u.r1 * x) / eta_;
    }
    return u.r1 * x + 0.5 * u.r2 * x * x;
  }

  double inverse_cum(const Unit& u, double a) const {
    if (family_ == Family::OddsRatio) {
      if (eta_ == 0.0) return a / u.r1;
      return std::expm1(eta_ * a) / (eta_ * u.r1);
    }
    return 2.0 * a / (u.r1 + std::sqrt(u.r1 * u.r1 + 2.0 * u.r2 * a));
  }

  // d cum / d theta
  void cum_grad(const Unit& u, double x, double* out) const {
    if (family_ == Family::OddsRatio) {
      double w = u.r1 * x / (1.0 + eta_ * u.r1 * x);
      for (std::size_t j = 0; j < d_; ++j) out[j] = u.z[j] * w;
    } else {
      double wa = u.r1 * x, wb = 0.5 * u.r2 * x * x;
      for (std::size_t j = 0; j < d_; ++j) {
        out[j] = wa * u.z[j];
        out[d_ + j] = wb * u.z[j];
      }
    }
  }

 private:
  Family family_;
  double eta_;
  std::size_t d_;
  std::size_t p_;
  std::array<double, kMaxDim> theta_;
};

}  // namespace semitrans::detail
