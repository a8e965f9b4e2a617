#include <doctest.h>

#include "oracles.hpp"
#include "semitrans/error.hpp"
#include "semitrans/score.hpp"

using namespace semitrans;

namespace {

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_SUITE("score") {

TEST_CASE("proportional hazards score is the Cox score") {
  for (std::size_t dim : {1u, 3u}) {
    auto recs = oracle::ph_sample(600, 21 + dim, 0.4, dim);
    auto s = CensoredSample::from_records(recs);
    auto m = CoreModel::odds_ratio(0.0, dim);
    std::vector<double> th(dim);
    for (std::size_t j = 0; j < dim; ++j) th[j] = 0.3 - 0.2 * double(j);
    auto res = score(s, m, th);
    auto cx = oracle::cox(recs, Eigen::Map<Eigen::VectorXd>(th.data(), static_cast<Eigen::Index>(dim)));
    for (std::size_t j = 0; j < dim; ++j) {
      const auto J = static_cast<Eigen::Index>(j);
      CHECK(std::abs(res.output.u(J) - cx.score(J)) <= 1e-10);
      for (std::size_t l = 0; l < dim; ++l) {
        const auto L = static_cast<Eigen::Index>(l);
        CHECK(std::abs(res.output.sigma1(J, L) - cx.info(J, L)) <= 1e-10);
        CHECK(std::abs(res.output.v(J, L) - cx.info(J, L)) <= 1e-10);
        CHECK(std::abs(res.output.sigma2(J, L)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("plug-in V equals sigma0 for the efficient direction") {
  auto cfg = oracle::or_config(2000, 5);
  auto s = CensoredSample::from_records(simulate_sample(cfg));
  auto res = score(s, cfg.model, cfg.theta0);
  CHECK(rel(res.output.v, res.output.sigma0) <= 0.05);
  CHECK(rel(res.output.v, res.output.sigma0) <= 1e-10);
  CHECK(res.output.sigma0(0, 0) > 0);
  CHECK(res.output.sigma2(0, 0) > 0);
}

TEST_CASE("tail sums match the direct double sum") {
  auto cfg = oracle::or_config(300, 6, 0.5, 2.0);
  auto s = CensoredSample::from_records(simulate_sample(cfg));
  auto res = score(s, cfg.model, cfg.theta0);
  const auto& ctx = res.context;
  auto a = tail_integrals(ctx.functionals, ctx.phi.phi);
  auto b = tail_integrals_direct(ctx.functionals, ctx.phi.phi);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, b.cwiseAbs().maxCoeff()));
  auto again = score_vector(s, cfg.model, ctx);
  CHECK((again - res.output.u).norm() <= 1e-14);
}

TEST_CASE("per-subject contributions average to the score") {
  for (auto model : {CoreModel::odds_ratio(1.0, 1), CoreModel::odds_ratio(0.0, 1), CoreModel::linear_hazard(2)}) {
    auto cfg = oracle::or_config(700, 8);
    cfg.model = model;
    cfg.theta0.assign(model.dim_theta(), 0.6);
    auto s = CensoredSample::from_records(simulate_sample(cfg));
    ScoreOptions so;
    so.per_subject = true;
    auto res = score(s, model, cfg.theta0, so);
    const auto& ps = res.output.per_subject;
    REQUIRE(static_cast<std::size_t>(ps.rows()) == s.size());
    Eigen::VectorXd mean = ps.colwise().mean().transpose();
    CHECK((mean - res.output.u).norm() <= 1e-12);
  }
}

TEST_CASE("degenerate direction gives an identically zero score") {
  auto cfg = oracle::or_config(500, 14, 0.7, 1.5);
  auto s = CensoredSample::from_records(simulate_sample(cfg));
  auto gamma = fit_gamma(s, cfg.model, cfg.theta0).gamma;
  auto fun = conditional_moments(s, cfg.model, gamma, cfg.theta0, Direction::efficient());
  const std::size_t m = fun.size();
  std::vector<double> h(m), H(m);
  double prev = 0;
  for (std::size_t k = 0; k < m; ++k) {
    h[k] = std::cos(s.event_times()[k]) + 0.5;
    double x = fun.s_lp[k] * fun.dC[k];
    prev = (std::exp(-x) * prev + h[k] * gamma.jump(k)) / (1 - x);
    H[k] = prev;
  }
  auto f = Direction::custom(1, [&](const DirectionArgs& a, double* out) {
    if (a.k == CensoredSample::npos) {
      out[0] = 0;
      return;
    }
    out[0] = a.ell_prime * H[a.k] + h[a.k];
  });
  ScoreOptions so;
  so.direction = f;
  auto res = score_at(s, cfg.model, cfg.theta0, gamma, so);
  CHECK(std::abs(res.output.u(0)) <= 1e-12);
  CHECK(res.context.phi.rho_tilde.cwiseAbs().maxCoeff() <= 1e-12);
  for (std::size_t k = 0; k < m; ++k)
    CHECK(res.context.phi.phi(k, 0) == doctest::Approx(H[k]).epsilon(1e-10));
}

TEST_CASE("no covariate variation") {
  std::vector<CensoredRecord> recs;
  for (int i = 0; i < 60; ++i) recs.push_back({0.05 * (i + 1), i % 5 != 4, {0.3}});
  auto s = CensoredSample::from_records(recs);
  auto m = CoreModel::odds_ratio(1.0, 1);
  std::vector<double> th{0.2};
  auto res = score(s, m, th);
  CHECK(res.output.sigma0.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK_THROWS_AS(v_matrix(res.context), Error);
}

TEST_CASE("step directions") {
  auto cfg = oracle::or_config(600, 3);
  auto s = CensoredSample::from_records(simulate_sample(cfg));
  StepComponent c;
  c.covariate = 0;
  c.breaks = {0.5};
  c.values = {1.0, 2.0};
  ScoreOptions so;
  so.direction = Direction::step({c});
  auto res = score(s, cfg.model, cfg.theta0, so);
  CHECK(res.context.phi.residual <= 1e-8);
  CHECK(std::isfinite(res.output.u(0)));
  CHECK(res.output.v_condition >= 1.0);
}

TEST_CASE("condition number") {
  Eigen::MatrixXd a(2, 2);
  a << 4, 0, 0, 2;
  CHECK(condition_number(a) == doctest::Approx(2.0));
  a << 1, 1, 1, 1;
  CHECK(condition_number(a) > kMaxCondition);
}

TEST_CASE("nuisance orthogonality on a moderate sample") {
  auto cfg = oracle::or_config(20000, 77);
  cfg.covariates = CovariateLaw::discrete({{-1}, {-0.5}, {0}, {0.5}, {1}});
  auto s = CensoredSample::from_records(simulate_sample(cfg, 4));
  auto rep = nuisance_orthogonality_check(s, cfg.model, cfg.theta0, cfg.gamma0,
                                          {NuisanceDirection::constant(), NuisanceDirection::indicator_upto(0.8)});
  REQUIRE(rep.entries.size() == 2);
  CHECK(rep.count == 20000);
  for (const auto& e : rep.entries) CHECK(std::abs(e.z()) <= 4.0);
  OrthogonalityReport twice = rep;
  twice.merge(rep);
  CHECK(twice.count == 40000);
  CHECK(twice.entries[0].mean() == doctest::Approx(rep.entries[0].mean()));
}

}
