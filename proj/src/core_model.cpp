#include "semitrans/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semitrans/detail/kernel.hpp"
#include "semitrans/error.hpp"

namespace semitrans {

CoreModel CoreModel::odds_ratio(double eta, std::size_t dim_theta, double covariate_bound) {
  if (!(eta >= 0) || !std::isfinite(eta)) fail(ErrorCode::InvalidConfig, "eta must be finite and >= 0");
  if (dim_theta == 0) fail(ErrorCode::InvalidConfig, "dim_theta must be positive");
  if (!(covariate_bound > 0)) fail(ErrorCode::InvalidConfig, "covariate_bound must be positive");
  return CoreModel(Family::OddsRatio, eta, dim_theta, covariate_bound);
}

CoreModel CoreModel::linear_hazard(std::size_t dim_theta, double covariate_bound) {
  if (dim_theta == 0 || dim_theta % 2 != 0)
    fail(ErrorCode::InvalidConfig, "linear_hazard needs an even positive dim_theta");
  if (!(covariate_bound > 0)) fail(ErrorCode::InvalidConfig, "covariate_bound must be positive");
  return CoreModel(Family::LinearHazard, 0.0, dim_theta, covariate_bound);
}

std::string CoreModel::family_name() const {
  return family_ == Family::OddsRatio ? "odds_ratio" : "linear_hazard";
}

namespace {

void validate(const CoreModel& model, double x, std::span<const double> theta,
              std::span<const double> z) {
  if (!(x >= 0) || std::isnan(x)) fail(ErrorCode::InvalidArgument, "x must be >= 0");
  if (theta.size() != model.dim_theta())
    fail(ErrorCode::DimensionMismatch, "theta has wrong dimension");
  if (z.size() != model.dim_z()) fail(ErrorCode::DimensionMismatch, "z has wrong dimension");
  double bound = model.covariate_bound();
  for (double v : z) {
    if (!std::isfinite(v)) fail(ErrorCode::OutOfBox, "covariate is not finite");
    if (std::abs(v) > bound) {
      std::ostringstream os;
      os << "covariate " << v << " outside declared box |z| <= " << bound;
      fail(ErrorCode::OutOfBox, os.str());
    }
  }
}

}  // namespace

double hazard(const CoreModel& model, double x, std::span<const double> theta,
              std::span<const double> z) {
  validate(model, x, theta, z);
  detail::Kernel k(model, theta);
  return k.alpha(k.unit(z.data()), x);
}

LogHazardDerivs log_hazard_derivs(const CoreModel& model, double x, std::span<const double> theta,
                                  std::span<const double> z) {
  validate(model, x, theta, z);
  detail::Kernel k(model, theta);
  detail::Point pt;
  k.eval(k.unit(z.data()), x, pt);
  LogHazardDerivs out;
  out.ell = std::log(pt.alpha);
  out.ell_prime = pt.lp;
  out.ell_dprime = pt.ldp;
  out.ell_dot.assign(pt.ldot.begin(), pt.ldot.begin() + model.dim_theta());
  return out;
}

double cum_hazard(const CoreModel& model, double x, std::span<const double> theta,
                  std::span<const double> z) {
  validate(model, x, theta, z);
  detail::Kernel k(model, theta);
  return k.cum(k.unit(z.data()), x);
}

double inverse_cum_hazard(const CoreModel& model, double a, std::span<const double> theta,
                          std::span<const double> z) {
  if (!(a >= 0)) fail(ErrorCode::InvalidArgument, "cumulative hazard level must be >= 0");
  validate(model, 0.0, theta, z);
  if (std::isinf(a)) return a;
  detail::Kernel k(model, theta);
  return k.inverse_cum(k.unit(z.data()), a);
}

std::vector<double> cum_hazard_theta_grad(const CoreModel& model, double x,
                                          std::span<const double> theta,
                                          std::span<const double> z) {
  validate(model, x, theta, z);
  detail::Kernel k(model, theta);
  std::vector<double> out(model.dim_theta());
  k.cum_grad(k.unit(z.data()), x, out.data());
  return out;
}

bool Box::contains(std::span<const double> v) const {
  if (v.size() != lo.size()) return false;
  for (std::size_t j = 0; j < v.size(); ++j)
    if (!(v[j] >= lo[j] && v[j] <= hi[j])) return false;
  return true;
}

bool Box::bounded() const {
  if (lo.size() != hi.size()) return false;
  for (std::size_t j = 0; j < lo.size(); ++j)
    if (!std::isfinite(lo[j]) || !std::isfinite(hi[j]) || lo[j] > hi[j]) return false;
  return true;
}

namespace {

std::vector<std::vector<double>> lattice(const Box& box, std::size_t points) {
  std::vector<std::vector<double>> out{{}};
  for (std::size_t j = 0; j < box.dim(); ++j) {
    std::vector<std::vector<double>> next;
    std::size_t q = box.lo[j] == box.hi[j] ? 1 : std::max<std::size_t>(points, 2);
    for (const auto& v : out) {
      for (std::size_t i = 0; i < q; ++i) {
        auto w = v;
        double t = q == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(q - 1);
        w.push_back(box.lo[j] + t * (box.hi[j] - box.lo[j]));
        next.push_back(std::move(w));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

RegularityReport check_regularity(const CoreModel& model, const Box& theta_box, const Box& z_box,
                                  std::span<const double> x_grid, std::size_t lattice_points) {
  RegularityReport rep;
  auto reject = [&](std::string msg) {
    rep.pass = false;
    rep.message = std::move(msg);
    return rep;
  };
  if (theta_box.dim() != model.dim_theta()) return reject("theta box has wrong dimension");
  if (z_box.dim() != model.dim_z()) return reject("covariate box has wrong dimension");
  if (!theta_box.bounded()) return reject("theta box is not bounded");
  if (!z_box.bounded())
    return reject("covariate box is not bounded; envelope conditions need bounded covariates");
  for (std::size_t j = 0; j < z_box.dim(); ++j)
    if (std::max(std::abs(z_box.lo[j]), std::abs(z_box.hi[j])) > model.covariate_bound())
      return reject("covariate box exceeds the model's covariate bound");
  if (x_grid.empty()) return reject("empty x grid");
  std::vector<double> xs(x_grid.begin(), x_grid.end());
  for (double x : xs)
    if (!(x >= 0) || !std::isfinite(x)) return reject("x grid must be finite and >= 0");
  if (!std::is_sorted(xs.begin(), xs.end())) return reject("x grid must be increasing");

  auto thetas = lattice(theta_box, lattice_points);
  auto zs = lattice(z_box, lattice_points);
  std::size_t g = xs.size();
  std::vector<double> env_lp(g, 0), env_ldp(g, 0), env_ldot(g, 0);
  std::vector<std::size_t> arg_lp(g), arg_ldp(g), arg_ldot(g);
  rep.alpha0_min = std::numeric_limits<double>::infinity();
  rep.alpha0_max = 0;
  std::size_t p = model.dim_theta();
  for (std::size_t ti = 0; ti < thetas.size(); ++ti) {
    detail::Kernel k(model, thetas[ti]);
    for (std::size_t zi = 0; zi < zs.size(); ++zi) {
      auto u = k.unit(zs[zi].data());
      double a0 = k.alpha(u, 0.0);
      rep.alpha0_min = std::min(rep.alpha0_min, a0);
      rep.alpha0_max = std::max(rep.alpha0_max, a0);
      detail::Point pt;
      std::size_t tag = ti * zs.size() + zi;
      for (std::size_t xi = 0; xi < g; ++xi) {
        k.eval(u, xs[xi], pt);
        double nd = 0;
        for (std::size_t j = 0; j < p; ++j) nd += pt.ldot[j] * pt.ldot[j];
        nd = std::sqrt(nd);
        if (!std::isfinite(pt.lp) || !std::isfinite(pt.ldp) || !std::isfinite(nd)) {
          rep.worst_quantity = "non-finite derivative";
          rep.worst_x = xs[xi];
          rep.worst_theta = thetas[ti];
          rep.worst_z = zs[zi];
          return reject("non-finite log-hazard derivative");
        }
        if (std::abs(pt.lp) > env_lp[xi]) { env_lp[xi] = std::abs(pt.lp); arg_lp[xi] = tag; }
        if (std::abs(pt.ldp) > env_ldp[xi]) { env_ldp[xi] = std::abs(pt.ldp); arg_ldp[xi] = tag; }
        if (nd > env_ldot[xi]) { env_ldot[xi] = nd; arg_ldot[xi] = tag; }
      }
    }
  }
  auto locate = [&](std::size_t tag, std::size_t xi, const char* what, double value) {
    rep.worst_quantity = what;
    rep.worst_value = value;
    rep.worst_x = xs[xi];
    rep.worst_theta = thetas[tag / zs.size()];
    rep.worst_z = zs[tag % zs.size()];
  };
  rep.lp_envelope = *std::max_element(env_lp.begin(), env_lp.end());
  rep.ldp_envelope = *std::max_element(env_ldp.begin(), env_ldp.end());
  rep.ldot_envelope = *std::max_element(env_ldot.begin(), env_ldot.end());
  if (!(rep.alpha0_min > 0) || !std::isfinite(rep.alpha0_max))
    return reject("alpha(0) not bounded away from 0 and infinity");
  for (std::size_t xi = 1; xi < g; ++xi) {
    double slack = 1e-12 * std::max(1.0, env_lp[xi - 1]);
    if (env_lp[xi] > env_lp[xi - 1] + slack) {
      locate(arg_lp[xi], xi, "|l'| envelope increasing", env_lp[xi]);
      return reject("envelope of |l'| is not nonincreasing");
    }
    slack = 1e-12 * std::max(1.0, env_ldp[xi - 1]);
    if (env_ldp[xi] > env_ldp[xi - 1] + slack) {
      locate(arg_ldp[xi], xi, "|l''| envelope increasing", env_ldp[xi]);
      return reject("envelope of |l''| is not nonincreasing");
    }
  }
  double l2 = 0;
  for (std::size_t xi = 0; xi + 1 < g; ++xi)
    l2 += env_ldot[xi] * env_ldot[xi] * (std::exp(-xs[xi]) - std::exp(-xs[xi + 1]));
  if (!std::isfinite(l2)) return reject("|ldot| envelope not square integrable");
  std::size_t xi = static_cast<std::size_t>(
      std::max_element(env_ldot.begin(), env_ldot.end()) - env_ldot.begin());
  locate(arg_ldot[xi], xi, "|ldot| envelope maximum", env_ldot[xi]);
  rep.message = "envelope conditions hold on the lattice";
  return rep;
}

}  // namespace semitrans
