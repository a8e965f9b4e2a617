#include "semitrans/estimate.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "semitrans/error.hpp"

namespace semitrans {

const char* method_name(Method m) { return m == Method::ZEstimator ? "z_estimator" : "one_step"; }

namespace {

ScoreOptions score_options(const Direction& f, const EstimateOptions& opts) {
  ScoreOptions so;
  so.direction = f;
  so.gamma = opts.gamma;
  so.phi_tol = opts.phi_tol;
  return so;
}

Box effective_box(const CoreModel& model, const EstimateOptions& opts) {
  if (opts.box.dim() == 0) return Box::cube(model.dim_theta(), 10.0);
  if (opts.box.dim() != model.dim_theta())
    fail(ErrorCode::InvalidArgument, "parameter box has wrong dimension");
  return opts.box;
}

void fill_diagnostics(FitResult& fit, const ScoreResult& s) {
  fit.diagnostics["kappa"] = s.context.system.kappa;
  fit.diagnostics["psi0_total"] = s.context.system.psi0_total;
  fit.diagnostics["fredholm_residual"] = s.context.phi.residual;
  fit.diagnostics["v_condition"] = s.output.v_condition;
  fit.diagnostics["gamma_residual"] = s.context.gamma_residual;
  fit.diagnostics["kernel_l2_surrogate"] = kernel_l2_surrogate(s.context.system);
}

void finish(FitResult& fit, const ScoreResult& s, std::size_t n, bool covariance) {
  fit.gamma_hat = s.context.gamma;
  fit.score.assign(s.output.u.data(), s.output.u.data() + s.output.u.size());
  fit.score_norm_at_solution = s.output.u.norm();
  fill_diagnostics(fit, s);
  if (!covariance) return;
  if (!(s.output.v_condition <= kMaxCondition))
    fail(ErrorCode::SingularMatrix, "V matrix is singular at the estimate (condition number " +
                                        std::to_string(s.output.v_condition) + ")");
  fit.cov_theta = sandwich_covariance(s.output, n);
  fit.se.resize(fit.theta_hat.size());
  for (std::size_t j = 0; j < fit.se.size(); ++j)
    fit.se[j] = std::sqrt(std::max(0.0, fit.cov_theta(static_cast<Eigen::Index>(j),
                                                      static_cast<Eigen::Index>(j))));
}

Eigen::VectorXd newton_step(const ScoreOutput& out) {
  if (out.v.rows() != out.v.cols())
    fail(ErrorCode::InvalidArgument, "Newton update needs a square V (direction dimension must equal dim_theta)");
  if (!(out.v_condition <= kMaxCondition))
    fail(ErrorCode::SingularMatrix,
         "V matrix is singular (condition number " + std::to_string(out.v_condition) + ")");
  return out.v.partialPivLu().solve(out.u);
}

}  // namespace

Eigen::MatrixXd sandwich_covariance(const ScoreOutput& out, std::size_t n) {
  Eigen::MatrixXd vi = out.v.inverse();
  Eigen::MatrixXd c = vi * out.sigma0 * vi.transpose() / static_cast<double>(n);
  return 0.5 * (c + c.transpose());
}

FitResult z_estimate(const CensoredSample& sample, const CoreModel& model, const Direction& f,
                     std::span<const double> theta_init, const EstimateOptions& opts) {
  if (theta_init.size() != model.dim_theta())
    fail(ErrorCode::DimensionMismatch, "theta_init has wrong dimension");
  if (!(opts.tol > 0) || opts.max_iter < 0 || !(opts.trust_radius > 0))
    fail(ErrorCode::InvalidArgument, "invalid estimation options");
  Box box = effective_box(model, opts);
  if (!box.contains(theta_init)) fail(ErrorCode::InvalidArgument, "theta_init outside parameter box");
  auto so = score_options(f, opts);
  const auto p = static_cast<Eigen::Index>(model.dim_theta());
  Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(theta_init.data(), p);
  auto eval = [&](const Eigen::VectorXd& th) {
    return score(sample, model, std::span<const double>(th.data(), static_cast<std::size_t>(p)), so);
  };
  ScoreResult cur = eval(theta);
  FitResult fit;
  fit.method = Method::ZEstimator;
  auto snapshot = [&]() {
    FitResult last = fit;
    last.theta_hat.assign(theta.data(), theta.data() + p);
    last.gamma_hat = cur.context.gamma;
    last.score.assign(cur.output.u.data(), cur.output.u.data() + p);
    last.score_norm_at_solution = cur.output.u.norm();
    fill_diagnostics(last, cur);
    return last;
  };
  while (cur.output.u.norm() > opts.tol) {
    if (fit.iterations >= opts.max_iter)
      throw EstimationError(ErrorCode::NonConvergence,
                            "z_estimate: max_iter " + std::to_string(opts.max_iter) +
                                " exceeded; |U| = " + std::to_string(cur.output.u.norm()),
                            snapshot());
    Eigen::VectorXd step;
    try {
      step = newton_step(cur.output);
    } catch (const Error& e) {
      throw EstimationError(e.code(), std::string("z_estimate: ") + e.what(), snapshot());
    }
    double len = step.norm();
    if (len > opts.trust_radius) step *= opts.trust_radius / len;
    double lambda = 1.0;
    bool accepted = false, inside_once = false;
    for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
      Eigen::VectorXd cand = theta + lambda * step;
      if (!box.contains(std::span<const double>(cand.data(), static_cast<std::size_t>(p)))) continue;
      inside_once = true;
      ScoreResult next;
      try {
        next = eval(cand);
      } catch (const Error& e) {
        if (!is_numerical(e.code())) throw;
        continue;
      }
      if (next.output.u.norm() < cur.output.u.norm()) {
        theta = cand;
        cur = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!inside_once)
        throw EstimationError(ErrorCode::BoxEscape, "z_estimate: step escaped the parameter box",
                              snapshot());
      throw EstimationError(ErrorCode::NonConvergence,
                            "z_estimate: step halving failed to decrease |U| (" +
                                std::to_string(cur.output.u.norm()) + ")",
                            snapshot());
    }
    ++fit.iterations;
  }
  fit.theta_hat.assign(theta.data(), theta.data() + p);
  try {
    finish(fit, cur, sample.size(), opts.covariance);
  } catch (const Error& e) {
    throw EstimationError(e.code(), std::string("z_estimate: ") + e.what(), snapshot());
  }
  return fit;
}

FitResult one_step(const CensoredSample& sample, const CoreModel& model, const Direction& f,
                   std::span<const double> theta0_hat, const EstimateOptions& opts) {
  if (theta0_hat.size() != model.dim_theta())
    fail(ErrorCode::DimensionMismatch, "theta0_hat has wrong dimension");
  auto so = score_options(f, opts);
  const auto p = static_cast<Eigen::Index>(model.dim_theta());
  ScoreResult s0 = score(sample, model, theta0_hat, so);
  Eigen::VectorXd step = newton_step(s0.output);
  Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(theta0_hat.data(), p) + step;
  FitResult fit;
  fit.method = Method::OneStep;
  fit.iterations = 1;
  fit.theta_hat.assign(theta.data(), theta.data() + p);
  if (!opts.covariance) {
    finish(fit, s0, sample.size(), false);
    fit.score.clear();
    fit.score_norm_at_solution = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  ScoreResult s1 = score(sample, model, fit.theta_hat, so);
  finish(fit, s1, sample.size(), true);
  return fit;
}

std::vector<Interval> confidence_intervals(const FitResult& fit, double level) {
  if (!(level > 0 && level < 1)) fail(ErrorCode::InvalidArgument, "level must lie in (0,1)");
  if (fit.se.size() != fit.theta_hat.size())
    fail(ErrorCode::InvalidArgument, "fit has no standard errors");
  boost::math::normal_distribution<double> nd;
  double q = boost::math::quantile(nd, 0.5 * (1.0 + level));
  std::vector<Interval> out(fit.theta_hat.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = Interval{fit.theta_hat[j] - q * fit.se[j], fit.theta_hat[j] + q * fit.se[j]};
  return out;
}

}  // namespace semitrans
