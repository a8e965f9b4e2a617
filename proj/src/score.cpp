#include "semitrans/score.hpp"

#include <array>
#include <cmath>

#include "semitrans/detail/kernel.hpp"
#include "semitrans/error.hpp"

namespace semitrans {

using detail::kMaxDim;

namespace {

ScoreContext build_context(const CensoredSample& sample, const CoreModel& model,
                           std::span<const double> theta, StepFunction gamma,
                           const ScoreOptions& opts) {
  ScoreContext ctx;
  ctx.theta.assign(theta.begin(), theta.end());
  ctx.direction = opts.direction;
  ctx.functionals = conditional_moments(sample, model, gamma, theta, opts.direction);
  const auto& F = ctx.functionals;
  std::vector<double> check(F.size());
  double acc = 0, resid = 0;
  for (std::size_t k = 0; k < F.size(); ++k) {
    acc += F.dN[k] / F.s1[k];
    check[k] = acc;
    resid = std::max(resid, std::abs(acc - gamma.at(k)));
  }
  ctx.gamma_check = StepFunction(sample.grid(), std::move(check), 0.0, true);
  ctx.gamma_residual = resid;
  ctx.gamma = std::move(gamma);
  ctx.system = build_system(F);
  ctx.phi = solve_phi(ctx.system, F, opts.phi_tol);
  ctx.d_ldot = d_volterra(F, F.s_ldot);
  ctx.tail = tail_integrals(F, ctx.phi.phi);
  return ctx;
}

ScoreOutput evaluate(const CensoredSample& sample, const CoreModel& model,
                     const ScoreContext& ctx, const ScoreOptions& opts) {
  ScoreOutput out;
  out.u = score_vector(sample, model, ctx);
  auto s = sigma_matrices(ctx);
  out.sigma1 = std::move(s.sigma1);
  out.sigma2 = std::move(s.sigma2);
  out.sigma0 = std::move(s.sigma0);
  out.v = v_matrix_unchecked(ctx);
  out.v_condition = v_condition(ctx, out.v);
  if (opts.per_subject) out.per_subject = per_subject_contributions(sample, model, ctx);
  return out;
}

}  // namespace

ScoreResult score(const CensoredSample& sample, const CoreModel& model,
                  std::span<const double> theta, const ScoreOptions& opts) {
  auto fit = fit_gamma(sample, model, theta, opts.gamma);
  ScoreResult r;
  r.context = build_context(sample, model, theta, std::move(fit.gamma), opts);
  r.context.gamma_iterations = fit.iterations;
  r.output = evaluate(sample, model, r.context, opts);
  return r;
}

ScoreResult score_at(const CensoredSample& sample, const CoreModel& model,
                     std::span<const double> theta, const StepFunction& gamma,
                     const ScoreOptions& opts) {
  ScoreResult r;
  r.context = build_context(sample, model, theta, gamma, opts);
  r.output = evaluate(sample, model, r.context, opts);
  return r;
}

GridMatrix tail_integrals(const Functionals& fun, const GridMatrix& phi) {
  const std::size_t m = fun.size();
  const auto P = phi.cols();
  GridMatrix T(static_cast<Eigen::Index>(m), P);
  for (Eigen::Index c = 0; c < P; ++c) {
    double acc = 0;
    for (std::size_t k = m; k-- > 0;) {
      const auto K = static_cast<Eigen::Index>(k);
      if (k + 1 < m) acc *= std::exp(fun.log_p0[k + 1] - fun.log_p0[k]);
      acc += (fun.cov_f_lp(K, c) - phi(K, c) * fun.var_lp[k]) * fun.dN[k];
      T(K, c) = acc;
    }
  }
  return T;
}

GridMatrix tail_integrals_direct(const Functionals& fun, const GridMatrix& phi) {
  const std::size_t m = fun.size();
  const auto P = phi.cols();
  GridMatrix T = GridMatrix::Zero(static_cast<Eigen::Index>(m), P);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = k; j < m; ++j) {
      const auto J = static_cast<Eigen::Index>(j);
      double w = std::exp(fun.log_p0[j] - fun.log_p0[k]) * fun.dN[j];
      for (Eigen::Index c = 0; c < P; ++c)
        T(static_cast<Eigen::Index>(k), c) += w * (fun.cov_f_lp(J, c) - phi(J, c) * fun.var_lp[j]);
    }
  return T;
}

Eigen::VectorXd score_vector(const CensoredSample& sample, const CoreModel& model,
                             const ScoreContext& ctx) {
  const auto& F = ctx.functionals;
  const std::size_t p = F.p, d = F.d, m = F.size();
  detail::Kernel kern(model, ctx.theta);
  detail::Point pt;
  std::array<double, kMaxDim> fv{};
  Eigen::VectorXd first = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < sample.size(); ++i) {
    std::size_t k = sample.event_index(i);
    if (k == CensoredSample::npos) continue;
    const auto K = static_cast<Eigen::Index>(k);
    double x = ctx.gamma.at(k);
    auto unit = kern.unit(sample.z(i));
    kern.eval(unit, x, pt);
    ctx.direction.eval(DirectionArgs{k, x, unit.z, pt.lp, pt.ldot.data()}, d, fv.data());
    double b2 = pt.lp - F.e_lp[k];
    for (std::size_t j = 0; j < p; ++j) {
      const auto J = static_cast<Eigen::Index>(j);
      first(J) += (fv[j] - F.e_f(K, J)) - b2 * ctx.phi.phi(K, J);
    }
  }
  first /= static_cast<double>(sample.size());
  Eigen::VectorXd second = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < m; ++k) {
    double diff = ctx.gamma_check.jump(k) - ctx.gamma.jump(k);
    for (std::size_t j = 0; j < p; ++j)
      second(static_cast<Eigen::Index>(j)) += ctx.tail(static_cast<Eigen::Index>(k),
                                                       static_cast<Eigen::Index>(j)) * diff;
  }
  return first - second;
}

SigmaMatrices sigma_matrices(const ScoreContext& ctx) {
  const auto& F = ctx.functionals;
  const std::size_t p = F.p, m = F.size();
  const auto P = static_cast<Eigen::Index>(p);
  SigmaMatrices s;
  s.sigma1 = Eigen::MatrixXd::Zero(P, P);
  s.sigma2 = Eigen::MatrixXd::Zero(P, P);
  for (std::size_t k = 0; k < m; ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    for (Eigen::Index i = 0; i < P; ++i) {
      double phi_i = ctx.phi.phi(K, i);
      for (Eigen::Index j = 0; j < P; ++j) {
        double phi_j = ctx.phi.phi(K, j);
        double v = F.var_f(K, i * P + j) - F.cov_f_lp(K, i) * phi_j - phi_i * F.cov_f_lp(K, j) +
                   F.var_lp[k] * phi_i * phi_j;
        s.sigma1(i, j) += v * F.dN[k];
        s.sigma2(i, j) += F.dC[k] * ctx.tail(K, i) * ctx.tail(K, j);
      }
    }
  }
  s.sigma1 = 0.5 * (s.sigma1 + s.sigma1.transpose());
  s.sigma2 = 0.5 * (s.sigma2 + s.sigma2.transpose());
  s.sigma0 = s.sigma1 + s.sigma2;
  return s;
}

Eigen::MatrixXd v_matrix_unchecked(const ScoreContext& ctx) {
  const auto& F = ctx.functionals;
  const auto P = static_cast<Eigen::Index>(F.p), D = static_cast<Eigen::Index>(F.d);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(P, D);
  for (std::size_t k = 0; k < F.size(); ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    for (Eigen::Index i = 0; i < P; ++i) {
      double phi_i = ctx.phi.phi(K, i);
      for (Eigen::Index j = 0; j < D; ++j) {
        double dl = ctx.d_ldot(K, j);
        double v = F.cov_f_ldot(K, i * D + j) + F.cov_f_lp(K, i) * dl -
                   phi_i * F.cov_lp_ldot(K, j) - F.var_lp[k] * phi_i * dl;
        V(i, j) += v * F.dN[k];
      }
    }
  }
  return V;
}

double condition_number(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  double lo = sv(sv.size() - 1), hi = sv(0);
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (!(lo > 0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

double v_condition(const ScoreContext& ctx, const Eigen::MatrixXd& V) {
  const auto& F = ctx.functionals;
  double scale = 0;
  for (std::size_t k = 0; k < F.size(); ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    double w = 0;
    for (std::size_t i = 0; i < F.p; ++i) {
      const auto I = static_cast<Eigen::Index>(i);
      w = std::max(w, F.var_f(K, I * static_cast<Eigen::Index>(F.p) + I) + F.e_f(K, I) * F.e_f(K, I));
    }
    scale += w * F.dN[k];
  }
  if (V.size() && V.norm() <= 1e-10 * scale) return std::numeric_limits<double>::infinity();
  return condition_number(V);
}

Eigen::MatrixXd v_matrix(const ScoreContext& ctx) {
  Eigen::MatrixXd V = v_matrix_unchecked(ctx);
  double cond = v_condition(ctx, V);
  if (!(cond <= kMaxCondition))
    fail(ErrorCode::SingularMatrix,
         "V matrix is singular (condition number " + std::to_string(cond) + ")");
  return V;
}

GridMatrix per_subject_contributions(const CensoredSample& sample, const CoreModel& model,
                                     const ScoreContext& ctx) {
  const auto& F = ctx.functionals;
  const std::size_t p = F.p, d = F.d, m = F.size(), n = sample.size();
  const auto P = static_cast<Eigen::Index>(p);
  detail::Kernel kern(model, ctx.theta);
  detail::Point pt;
  std::array<double, kMaxDim> fv{};
  GridMatrix out = GridMatrix::Zero(static_cast<Eigen::Index>(n), P);
  // W(k, z) = f - e_f - (l' - e_lp) phi - T / s1
  auto weight = [&](const detail::Unit& unit, std::size_t k, double* w, double& alpha) {
    const auto K = static_cast<Eigen::Index>(k);
    double x = ctx.gamma.at(k);
    kern.eval(unit, x, pt);
    ctx.direction.eval(DirectionArgs{k, x, unit.z, pt.lp, pt.ldot.data()}, d, fv.data());
    double b2 = pt.lp - F.e_lp[k];
    for (std::size_t j = 0; j < p; ++j) {
      const auto J = static_cast<Eigen::Index>(j);
      w[j] = fv[j] - F.e_f(K, J) - b2 * ctx.phi.phi(K, J) - ctx.tail(K, J) / F.s1[k];
    }
    alpha = pt.alpha;
  };
  std::array<double, kMaxDim> w{};
  double alpha = 0;
  auto jump_term = [&](std::size_t i, const detail::Unit& unit) {
    std::size_t k = sample.event_index(i);
    if (k == CensoredSample::npos) return;
    weight(unit, k, w.data(), alpha);
    for (std::size_t j = 0; j < p; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += w[j];
  };
  if (!sample.grouped()) {
    for (std::size_t i = 0; i < n; ++i) {
      auto unit = kern.unit(sample.z(i));
      for (std::size_t k = 0; k < sample.risk_end(i); ++k) {
        weight(unit, k, w.data(), alpha);
        double dg = ctx.gamma.jump(k) * alpha;
        for (std::size_t j = 0; j < p; ++j)
          out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -= w[j] * dg;
      }
      jump_term(i, unit);
    }
    return out;
  }
  std::vector<std::vector<std::size_t>> members(sample.num_profiles());
  for (std::size_t i = 0; i < n; ++i) members[sample.profile_of(i)].push_back(i);
  GridMatrix prefix(static_cast<Eigen::Index>(m + 1), P);
  for (std::size_t q = 0; q < sample.num_profiles(); ++q) {
    if (members[q].empty()) continue;
    auto unit = kern.unit(sample.profile_z(q));
    prefix.row(0).setZero();
    for (std::size_t k = 0; k < m; ++k) {
      weight(unit, k, w.data(), alpha);
      double dg = ctx.gamma.jump(k) * alpha;
      for (std::size_t j = 0; j < p; ++j)
        prefix(static_cast<Eigen::Index>(k + 1), static_cast<Eigen::Index>(j)) =
            prefix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) + w[j] * dg;
    }
    for (std::size_t i : members[q]) {
      out.row(static_cast<Eigen::Index>(i)) = -prefix.row(static_cast<Eigen::Index>(sample.risk_end(i)));
      jump_term(i, unit);
    }
  }
  return out;
}

NuisanceDirection NuisanceDirection::constant(double c) {
  NuisanceDirection g;
  g.label = "constant";
  g.values = {c};
  return g;
}

NuisanceDirection NuisanceDirection::indicator_upto(double cut) {
  NuisanceDirection g;
  g.label = "indicator_upto";
  g.breaks = {cut};
  g.values = {1.0, 0.0};
  return g;
}

double OrthogonalityEntry::mean() const { return count ? sum / static_cast<double>(count) : 0.0; }

double OrthogonalityEntry::se() const {
  if (count < 2) return std::numeric_limits<double>::infinity();
  double n = static_cast<double>(count);
  double mu = sum / n;
  double var = (sum_sq - n * mu * mu) / (n - 1);
  return std::sqrt(std::max(var, 0.0) / n);
}

double OrthogonalityEntry::z() const {
  double s = se();
  return s > 0 ? mean() / s : 0.0;
}

void OrthogonalityReport::merge(const OrthogonalityReport& other) {
  if (entries.empty()) {
    *this = other;
    return;
  }
  if (other.entries.size() != entries.size() || other.u_sum.size() != u_sum.size())
    fail(ErrorCode::InvalidArgument, "cannot merge orthogonality reports of different shape");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    entries[i].sum += other.entries[i].sum;
    entries[i].sum_sq += other.entries[i].sum_sq;
    entries[i].count += other.entries[i].count;
  }
  for (std::size_t j = 0; j < u_sum.size(); ++j) {
    u_sum[j] += other.u_sum[j];
    u_sum_sq[j] += other.u_sum_sq[j];
  }
  count += other.count;
}

bool OrthogonalityReport::pass(double z_limit) const {
  for (const auto& e : entries)
    if (!(std::abs(e.z()) <= z_limit)) return false;
  return !entries.empty();
}

OrthogonalityReport nuisance_orthogonality_check(const CensoredSample& sample,
                                                 const CoreModel& model,
                                                 std::span<const double> theta0,
                                                 const TransformSpec& gamma0,
                                                 const std::vector<NuisanceDirection>& g_specs) {
  for (const auto& g : g_specs) {
    if (g.values.size() != g.breaks.size() + 1)
      fail(ErrorCode::InvalidConfig, "nuisance direction needs one more value than breaks");
    for (std::size_t q = 1; q < g.breaks.size(); ++q)
      if (!(g.breaks[q] > g.breaks[q - 1]))
        fail(ErrorCode::InvalidConfig, "nuisance breaks must increase");
  }
  const std::size_t m = sample.num_events(), n = sample.size(), d = model.dim_theta();
  std::vector<double> xg(m);
  for (std::size_t k = 0; k < m; ++k) xg[k] = gamma0.value(sample.event_times()[k]);
  StepFunction gamma(sample.grid(), xg, 0.0, true);
  ScoreOptions opts;
  auto ctx = score_at(sample, model, theta0, gamma, opts).context;
  const auto& F = ctx.functionals;
  const auto D = static_cast<Eigen::Index>(d);
  // constant parts of W on the cell (t_{k-1}, t_k]
  GridMatrix a(static_cast<Eigen::Index>(m), D);
  for (std::size_t k = 0; k < m; ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    for (Eigen::Index j = 0; j < D; ++j)
      a(K, j) = F.e_f(K, j) + ctx.tail(K, j) / F.s1[k] - F.e_lp[k] * ctx.phi.phi(K, j);
  }
  detail::Kernel kern(model, theta0);
  GridMatrix u(static_cast<Eigen::Index>(n), D);
  std::array<double, kMaxDim> g0{}, g1{};
  // integral over (xa, xb] of W alpha dGamma0 for cell k
  auto cell = [&](const detail::Unit& unit, std::size_t k, double xa, double xb, double* out) {
    const auto K = static_cast<Eigen::Index>(k);
    kern.cum_grad(unit, xa, g0.data());
    kern.cum_grad(unit, xb, g1.data());
    double dA = kern.cum(unit, xb) - kern.cum(unit, xa);
    double dal = kern.alpha(unit, xb) - kern.alpha(unit, xa);
    for (Eigen::Index j = 0; j < D; ++j)
      out[j] = (g1[static_cast<std::size_t>(j)] - g0[static_cast<std::size_t>(j)]) - a(K, j) * dA -
               ctx.phi.phi(K, j) * dal;
  };
  std::array<double, kMaxDim> tmp{};
  detail::Point pt;
  auto finish = [&](std::size_t i, const detail::Unit& unit, const double* full) {
    const auto I = static_cast<Eigen::Index>(i);
    std::size_t ke = sample.risk_end(i);
    double xi = gamma0.value(sample.records()[i].x);
    for (Eigen::Index j = 0; j < D; ++j) u(I, j) = -full[j];
    std::size_t c = ke < m ? ke : m - 1;
    double xa = ke == 0 ? 0.0 : xg[ke - 1];
    if (xi > xa) {
      cell(unit, c, xa, xi, tmp.data());
      for (Eigen::Index j = 0; j < D; ++j) u(I, j) -= tmp[static_cast<std::size_t>(j)];
    }
    std::size_t k = sample.event_index(i);
    if (k != CensoredSample::npos) {
      kern.eval(unit, xg[k], pt);
      const auto K = static_cast<Eigen::Index>(k);
      for (Eigen::Index j = 0; j < D; ++j)
        u(I, j) += pt.ldot[static_cast<std::size_t>(j)] - a(K, j) - pt.lp * ctx.phi.phi(K, j);
    }
  };
  std::vector<double> full(d);
  if (sample.grouped()) {
    std::vector<std::vector<std::size_t>> members(sample.num_profiles());
    for (std::size_t i = 0; i < n; ++i) members[sample.profile_of(i)].push_back(i);
    GridMatrix prefix(static_cast<Eigen::Index>(m + 1), D);
    for (std::size_t q = 0; q < members.size(); ++q) {
      if (members[q].empty()) continue;
      auto unit = kern.unit(sample.profile_z(q));
      prefix.row(0).setZero();
      for (std::size_t k = 0; k < m; ++k) {
        cell(unit, k, k == 0 ? 0.0 : xg[k - 1], xg[k], tmp.data());
        for (Eigen::Index j = 0; j < D; ++j)
          prefix(static_cast<Eigen::Index>(k + 1), j) =
              prefix(static_cast<Eigen::Index>(k), j) + tmp[static_cast<std::size_t>(j)];
      }
      for (std::size_t i : members[q]) {
        for (Eigen::Index j = 0; j < D; ++j)
          full[static_cast<std::size_t>(j)] = prefix(static_cast<Eigen::Index>(sample.risk_end(i)), j);
        finish(i, unit, full.data());
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      auto unit = kern.unit(sample.z(i));
      std::fill(full.begin(), full.end(), 0.0);
      for (std::size_t k = 0; k < sample.risk_end(i); ++k) {
        cell(unit, k, k == 0 ? 0.0 : xg[k - 1], xg[k], tmp.data());
        for (std::size_t j = 0; j < d; ++j) full[j] += tmp[j];
      }
      finish(i, unit, full.data());
    }
  }

  OrthogonalityReport rep;
  rep.count = n;
  rep.u_sum.assign(d, 0.0);
  rep.u_sum_sq.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double v = u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      rep.u_sum[j] += v;
      rep.u_sum_sq[j] += v * v;
    }
  for (const auto& g : g_specs) {
    std::vector<double> xb(g.breaks.size());
    for (std::size_t q = 0; q < xb.size(); ++q) xb[q] = gamma0.value(g.breaks[q]);
    // G(x) = integral of g dGamma0 up to the time with Gamma0 = x
    auto big_g = [&](double x) {
      double acc = 0, lo = 0;
      for (std::size_t q = 0; q < xb.size(); ++q) {
        if (x <= xb[q]) return acc + g.values[q] * (x - lo);
        acc += g.values[q] * (xb[q] - lo);
        lo = xb[q];
      }
      return acc + g.values.back() * (x - lo);
    };
    std::vector<OrthogonalityEntry> es(d);
    for (std::size_t j = 0; j < d; ++j) {
      es[j].label = g.label;
      es[j].component = j;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = sample.records()[i];
      auto unit = kern.unit(sample.z(i));
      double xi = gamma0.value(r.x);
      double G = big_g(xi);
      kern.eval(unit, xi, pt);
      double l2 = -G * pt.alpha;
      if (r.delta) {
        auto q = static_cast<std::size_t>(std::upper_bound(g.breaks.begin(), g.breaks.end(), r.x) -
                                          g.breaks.begin());
        l2 += g.values[q] + pt.lp * G;
      }
      for (std::size_t j = 0; j < d; ++j) {
        double v = u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * l2;
        es[j].sum += v;
        es[j].sum_sq += v * v;
        es[j].count += 1;
      }
    }
    rep.entries.insert(rep.entries.end(), es.begin(), es.end());
  }
  return rep;
}

}  // namespace semitrans
