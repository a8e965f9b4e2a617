#include "semitrans/empirical.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "semitrans/detail/kernel.hpp"
#include "semitrans/error.hpp"

namespace semitrans {

using detail::kMaxDim;

double Functionals::p_ratio(std::size_t u, std::size_t t) const {
  double lu = u == CensoredSample::npos ? 0.0 : log_p0[u];
  double lt = t == CensoredSample::npos ? 0.0 : log_p0[t];
  return std::exp(lt - lu);
}

namespace {

void check_gamma(const CensoredSample& sample, const StepFunction& gamma) {
  if (!gamma.grid() || gamma.size() != sample.num_events() ||
      (gamma.grid() != sample.grid() && *gamma.grid() != *sample.grid()))
    fail(ErrorCode::GridMismatch, "gamma is not defined on the sample's event grid");
  double prev = gamma.value_at_0();
  for (std::size_t k = 0; k < gamma.size(); ++k) {
    double v = gamma.at(k);
    if (!(v >= 0) || !std::isfinite(v) || v < prev)
      fail(ErrorCode::InvalidArgument, "gamma must be finite, nonnegative and nondecreasing");
    prev = v;
  }
}

std::vector<detail::Unit> make_units(const CensoredSample& sample, const detail::Kernel& kern) {
  std::vector<detail::Unit> units(sample.num_units());
  for (std::size_t u = 0; u < units.size(); ++u) units[u] = kern.unit(sample.unit_z(u));
  return units;
}

void check_theta(const CoreModel& model, const CensoredSample& sample,
                 std::span<const double> theta) {
  if (theta.size() != model.dim_theta())
    fail(ErrorCode::DimensionMismatch, "theta has wrong dimension");
  if (sample.dim_z() != model.dim_z())
    fail(ErrorCode::DimensionMismatch, "sample covariate dimension " +
                                           std::to_string(sample.dim_z()) +
                                           " does not match model dimension " +
                                           std::to_string(model.dim_z()));
  for (double v : theta)
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "theta must be finite");
}

// sum over the risk set of multiplicity * alpha (and its x slope) at x
void alpha_sums(const CensoredSample& sample, const detail::Kernel& kern,
                const std::vector<detail::Unit>& units, std::size_t k, double x, double& s,
                double& ds) {
  s = 0;
  ds = 0;
  sample.for_each_at_risk(k, [&](std::size_t u, double w) {
    double a, da;
    kern.alpha_slope(units[u], x, a, da);
    s += w * a;
    ds += w * da;
  });
}

}  // namespace

GridMatrix s_hat(const CensoredSample& sample, const CoreModel& model, const StepFunction& gamma,
                 std::span<const double> theta, SHatTag tag) {
  check_theta(model, sample, theta);
  check_gamma(sample, gamma);
  detail::Kernel kern(model, theta);
  auto units = make_units(sample, kern);
  std::size_t m = sample.num_events(), p = model.dim_theta();
  std::size_t cols = tag == SHatTag::EllDot ? p : 1;
  GridMatrix out = GridMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(cols));
  double inv_n = 1.0 / static_cast<double>(sample.size());
  detail::Point pt;
  for (std::size_t k = 0; k < m; ++k) {
    double x = gamma.at(k);
    double* row = out.data() + k * cols;
    sample.for_each_at_risk(k, [&](std::size_t u, double w) {
      kern.eval(units[u], x, pt);
      double wa = w * pt.alpha;
      switch (tag) {
        case SHatTag::One: row[0] += wa; break;
        case SHatTag::EllPrime: row[0] += wa * pt.lp; break;
        case SHatTag::EllDoublePrime: row[0] += wa * pt.ldp; break;
        case SHatTag::EllDot:
          for (std::size_t j = 0; j < p; ++j) row[j] += wa * pt.ldot[j];
          break;
      }
    });
    for (std::size_t j = 0; j < cols; ++j) row[j] *= inv_n;
  }
  return out;
}

GridMatrix s_hat(const CensoredSample& sample, const CoreModel& model, const StepFunction& gamma,
                 std::span<const double> theta, const Direction& f) {
  check_theta(model, sample, theta);
  check_gamma(sample, gamma);
  f.validate(model);
  detail::Kernel kern(model, theta);
  auto units = make_units(sample, kern);
  std::size_t m = sample.num_events(), d = model.dim_theta(), p = f.dim(model);
  GridMatrix out = GridMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
  double inv_n = 1.0 / static_cast<double>(sample.size());
  detail::Point pt;
  std::array<double, kMaxDim> fv{};
  for (std::size_t k = 0; k < m; ++k) {
    double x = gamma.at(k);
    double* row = out.data() + k * p;
    sample.for_each_at_risk(k, [&](std::size_t u, double w) {
      kern.eval(units[u], x, pt);
      f.eval(DirectionArgs{k, x, units[u].z, pt.lp, pt.ldot.data()}, d, fv.data());
      double wa = w * pt.alpha;
      for (std::size_t j = 0; j < p; ++j) row[j] += wa * fv[j];
    });
    for (std::size_t j = 0; j < p; ++j) row[j] *= inv_n;
  }
  return out;
}

Functionals conditional_moments(const CensoredSample& sample, const CoreModel& model,
                                const StepFunction& gamma, std::span<const double> theta,
                                const Direction& f) {
  check_theta(model, sample, theta);
  check_gamma(sample, gamma);
  f.validate(model);
  detail::Kernel kern(model, theta);
  auto units = make_units(sample, kern);
  const std::size_t m = sample.num_events(), d = model.dim_theta(), p = f.dim(model);
  const auto M = static_cast<Eigen::Index>(m);
  const auto P = static_cast<Eigen::Index>(p), D = static_cast<Eigen::Index>(d);
  Functionals F;
  F.grid = sample.grid();
  F.p = p;
  F.d = d;
  F.dN.assign(sample.event_counts().begin(), sample.event_counts().end());
  F.s1.resize(m);
  F.s_lp.resize(m);
  F.e_lp.resize(m);
  F.var_lp.resize(m);
  F.s_f.resize(M, P);
  F.e_f.resize(M, P);
  F.var_f.resize(M, P * P);
  F.cov_f_lp.resize(M, P);
  F.cov_f_ldot.resize(M, P * D);
  F.s_ldot.resize(M, D);
  F.e_ldot.resize(M, D);
  F.cov_lp_ldot.resize(M, D);
  F.dC.resize(m);
  F.dB.resize(m);
  F.log_p0.resize(m);

  const double inv_n = 1.0 / static_cast<double>(sample.size());
  detail::Point pt;
  std::array<double, kMaxDim> fv{};
  std::array<double, kMaxDim> sf{}, sflp{}, sld{}, slpld{};
  std::array<double, kMaxDim * kMaxDim> sff{}, sfld{};
  double logp = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double x = gamma.at(k);
    double s1 = 0, slp = 0, slp2 = 0;
    std::fill_n(sf.begin(), p, 0.0);
    std::fill_n(sflp.begin(), p, 0.0);
    std::fill_n(sld.begin(), d, 0.0);
    std::fill_n(slpld.begin(), d, 0.0);
    std::fill_n(sff.begin(), p * p, 0.0);
    std::fill_n(sfld.begin(), p * d, 0.0);
    sample.for_each_at_risk(k, [&](std::size_t u, double w) {
      kern.eval(units[u], x, pt);
      f.eval(DirectionArgs{k, x, units[u].z, pt.lp, pt.ldot.data()}, d, fv.data());
      const double wa = w * pt.alpha;
      const double wal = wa * pt.lp;
      s1 += wa;
      slp += wal;
      slp2 += wal * pt.lp;
      for (std::size_t j = 0; j < d; ++j) {
        sld[j] += wa * pt.ldot[j];
        slpld[j] += wal * pt.ldot[j];
      }
      for (std::size_t i = 0; i < p; ++i) {
        const double wf = wa * fv[i];
        sf[i] += wf;
        sflp[i] += wf * pt.lp;
        for (std::size_t j = 0; j < p; ++j) sff[i * p + j] += wf * fv[j];
        for (std::size_t j = 0; j < d; ++j) sfld[i * d + j] += wf * pt.ldot[j];
      }
    });
    if (!(s1 > 0)) fail(ErrorCode::Internal, "empty risk set on the event grid");
    const double inv_s1 = 1.0 / s1;
    const double elp = slp * inv_s1;
    F.s1[k] = s1 * inv_n;
    F.s_lp[k] = slp * inv_n;
    F.e_lp[k] = elp;
    F.var_lp[k] = model.x_free() ? 0.0 : std::max(0.0, slp2 * inv_s1 - elp * elp);
    for (std::size_t i = 0; i < p; ++i) {
      const double ef = sf[i] * inv_s1;
      F.s_f(k, i) = sf[i] * inv_n;
      F.e_f(k, i) = ef;
      F.cov_f_lp(k, i) = sflp[i] * inv_s1 - ef * elp;
      for (std::size_t j = 0; j < p; ++j)
        F.var_f(k, i * p + j) = sff[i * p + j] * inv_s1 - ef * sf[j] * inv_s1;
      for (std::size_t j = 0; j < d; ++j)
        F.cov_f_ldot(k, i * d + j) = sfld[i * d + j] * inv_s1 - ef * sld[j] * inv_s1;
    }
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < i; ++j) {
        double v = 0.5 * (F.var_f(k, i * p + j) + F.var_f(k, j * p + i));
        F.var_f(k, i * p + j) = v;
        F.var_f(k, j * p + i) = v;
      }
    for (std::size_t j = 0; j < d; ++j) {
      const double eld = sld[j] * inv_s1;
      F.s_ldot(k, j) = sld[j] * inv_n;
      F.e_ldot(k, j) = eld;
      F.cov_lp_ldot(k, j) = slpld[j] * inv_s1 - elp * eld;
    }
    const double dc = F.dN[k] / (F.s1[k] * F.s1[k]);
    F.dC[k] = dc;
    F.dB[k] = F.var_lp[k] * F.dN[k];
    logp -= F.s_lp[k] * dc;
    F.log_p0[k] = logp;
  }
  return F;
}

StepFunction gamma_check(const CensoredSample& sample, const CoreModel& model,
                         const StepFunction& gamma, std::span<const double> theta) {
  check_theta(model, sample, theta);
  check_gamma(sample, gamma);
  detail::Kernel kern(model, theta);
  auto units = make_units(sample, kern);
  std::size_t m = sample.num_events();
  std::vector<double> v(m);
  double acc = 0;
  const auto dN = sample.event_counts();
  double inv_n = 1.0 / static_cast<double>(sample.size());
  for (std::size_t k = 0; k < m; ++k) {
    double s = 0, ds = 0;
    alpha_sums(sample, kern, units, k, gamma.at(k), s, ds);
    acc += dN[k] / (s * inv_n);
    v[k] = acc;
  }
  return StepFunction(sample.grid(), std::move(v), 0.0, true);
}

GammaFit fit_gamma(const CensoredSample& sample, const CoreModel& model,
                   std::span<const double> theta, const GammaFitOptions& opts) {
  check_theta(model, sample, theta);
  if (!(opts.tol > 0)) fail(ErrorCode::InvalidArgument, "fit_gamma tolerance must be > 0");
  detail::Kernel kern(model, theta);
  auto units = make_units(sample, kern);
  const std::size_t m = sample.num_events();
  const auto dN = sample.event_counts();
  const auto Y = sample.at_risk();
  const double n = static_cast<double>(sample.size());
  const bool bounded = model.family() == Family::OddsRatio && model.eta() > 0;
  std::vector<double> g(m);
  double prev = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double target = dN[k] * n;  // failures at t_k
    if (bounded && target >= Y[k] * n / model.eta() * (1 - 1e-12))
      fail(ErrorCode::NonConvergence,
           "fit_gamma: no finite jump at event " + std::to_string(k) +
               " (all of the risk set fails while eta >= 1); residual inf");
    double s, ds;
    alpha_sums(sample, kern, units, k, prev, s, ds);
    double step = target / s;
    if (!model.x_free()) {
      for (int it = 0; it < 100; ++it) {
        alpha_sums(sample, kern, units, k, prev + step, s, ds);
        double r = step * s - target;
        double dr = s + step * ds;
        double next = step - r / dr;
        if (!(next > 0)) next = 0.5 * step;
        bool done = std::abs(r) <= 1e-15 * target || std::abs(next - step) <= 1e-16 * step;
        step = next;
        if (done) break;
        if (!std::isfinite(step))
          fail(ErrorCode::NonConvergence,
               "fit_gamma: diverging jump at event " + std::to_string(k));
      }
    }
    prev += step;
    g[k] = prev;
  }
  GammaFit out;
  out.gamma = StepFunction(sample.grid(), g, 0.0, true);
  auto check = gamma_check(sample, model, out.gamma, theta);
  auto resid = [&](const StepFunction& a, const StepFunction& b) {
    double r = 0;
    for (std::size_t k = 0; k < m; ++k) r = std::max(r, std::abs(a.at(k) - b.at(k)));
    return r;
  };
  out.residual = resid(check, out.gamma);
  double damping = 1.0;
  while (out.residual > opts.tol) {
    if (out.iterations >= opts.max_iter)
      fail(ErrorCode::NonConvergence, "fit_gamma: no convergence after " +
                                          std::to_string(opts.max_iter) +
                                          " iterations; final residual " +
                                          std::to_string(out.residual));
    std::vector<double> next(m);
    double lo = 0;
    for (std::size_t k = 0; k < m; ++k) {
      next[k] = std::max(lo, out.gamma.at(k) + damping * (check.at(k) - out.gamma.at(k)));
      lo = next[k];
    }
    StepFunction cand(sample.grid(), std::move(next), 0.0, true);
    auto cand_check = gamma_check(sample, model, cand, theta);
    double r = resid(cand_check, cand);
    if (r > out.residual) damping = 0.5;
    out.gamma = std::move(cand);
    check = std::move(cand_check);
    out.residual = r;
    ++out.iterations;
  }
  return out;
}

GridMatrix d_volterra(const Functionals& fun, const GridMatrix& s_f) {
  const std::size_t m = fun.size();
  if (static_cast<std::size_t>(s_f.rows()) != m)
    fail(ErrorCode::GridMismatch, "d_volterra: moments not on the functionals grid");
  const auto p = s_f.cols();
  GridMatrix D(s_f.rows(), p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double prev = 0;
    for (std::size_t k = 0; k < m; ++k) {
      double decay = std::exp(-fun.s_lp[k] * fun.dC[k]);
      prev = decay * prev - s_f(static_cast<Eigen::Index>(k), j) * fun.dC[k];
      D(static_cast<Eigen::Index>(k), j) = prev;
    }
  }
  return D;
}

GridMatrix d_volterra_explicit(const Functionals& fun, const GridMatrix& s_f) {
  const std::size_t m = fun.size();
  if (static_cast<std::size_t>(s_f.rows()) != m)
    fail(ErrorCode::GridMismatch, "d_volterra: moments not on the functionals grid");
  const auto p = s_f.cols();
  GridMatrix D = GridMatrix::Zero(s_f.rows(), p);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j <= k; ++j) {
      double w = fun.dC[j] * std::exp(fun.log_p0[k] - fun.log_p0[j]);
      for (Eigen::Index c = 0; c < p; ++c)
        D(static_cast<Eigen::Index>(k), c) -= s_f(static_cast<Eigen::Index>(j), c) * w;
    }
  return D;
}

}  // namespace semitrans
