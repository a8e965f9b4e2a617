#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "semitrans/empirical.hpp"
#include "semitrans/error.hpp"

using namespace semitrans;

namespace {

CensoredSample three() {
  return CensoredSample::from_records({{1, 1, {0.3}}, {2, 1, {-0.2}}, {3, 1, {0.9}}});
}

Functionals random_functionals(std::mt19937_64& g, std::size_t m, std::size_t p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Functionals f;
  Grid grid;
  for (std::size_t k = 0; k < m; ++k) grid.push_back(double(k + 1));
  f.grid = std::make_shared<const Grid>(grid);
  f.p = p;
  f.d = p;
  f.dC.resize(m);
  f.s_lp.resize(m);
  f.log_p0.resize(m);
  f.s_f = GridMatrix(m, p);
  double acc = 0;
  for (std::size_t k = 0; k < m; ++k) {
    f.dC[k] = 0.2 * u(g);
    f.s_lp[k] = -2.0 * u(g);
    acc -= f.s_lp[k] * f.dC[k];
    f.log_p0[k] = acc;
    for (std::size_t c = 0; c < p; ++c) f.s_f(k, c) = 2 * u(g) - 1;
  }
  f.dN.assign(m, 1.0 / m);
  return f;
}

}  // namespace

TEST_SUITE("empirical") {

TEST_CASE("proportional hazards moments at zero") {
  auto s = three();
  auto ph = CoreModel::odds_ratio(0.0, 1);
  std::vector<double> th{0.0};
  StepFunction g = s.step({1, 2, 3}, 0, true);
  auto one = s_hat(s, ph, g, th, SHatTag::One);
  for (std::size_t k = 0; k < 3; ++k) CHECK(one(k, 0) == doctest::Approx(s.at_risk()[k]));
  auto lp = s_hat(s, ph, g, th, SHatTag::EllPrime);
  for (std::size_t k = 0; k < 3; ++k) CHECK(lp(k, 0) == 0.0);
  auto fun = conditional_moments(s, ph, g, th, Direction::efficient());
  CHECK(fun.dC[0] == doctest::Approx(1.0 / 3));
  CHECK(fun.dC[1] == doctest::Approx(3.0 / 4));
  CHECK(fun.dC[2] == doctest::Approx(3.0));
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(fun.dB[k] == 0.0);
    CHECK(fun.var_lp[k] == 0.0);
  }
}

TEST_CASE("moments match a direct sum") {
  auto cfg = oracle::or_config(150, 8, 0.7, 2.0);
  auto recs = simulate_sample(cfg);
  auto s = CensoredSample::from_records(recs);
  std::vector<double> th{0.7};
  auto gf = fit_gamma(s, cfg.model, th);
  auto fun = conditional_moments(s, cfg.model, gf.gamma, th, Direction::efficient());
  const double n = 150;
  for (std::size_t k = 0; k < s.num_events(); k += 7) {
    double x = gf.gamma.at(k), t = s.event_times()[k];
    double s1 = 0, slp = 0, slp2 = 0, sf = 0;
    for (const auto& r : recs)
      if (r.x >= t) {
        auto d = log_hazard_derivs(cfg.model, x, th, r.z);
        double a = hazard(cfg.model, x, th, r.z);
        s1 += a / n;
        slp += a * d.ell_prime / n;
        slp2 += a * d.ell_prime * d.ell_prime / n;
        sf += a * d.ell_dot[0] / n;
      }
    CHECK(fun.s1[k] == doctest::Approx(s1).epsilon(1e-12));
    CHECK(fun.s_lp[k] == doctest::Approx(slp).epsilon(1e-12));
    CHECK(fun.e_lp[k] == doctest::Approx(slp / s1).epsilon(1e-12));
    CHECK(fun.var_lp[k] == doctest::Approx(std::max(0.0, slp2 / s1 - slp * slp / s1 / s1)).epsilon(1e-9));
    CHECK(fun.s_f(k, 0) == doctest::Approx(sf).epsilon(1e-12));
    CHECK(fun.dC[k] == doctest::Approx(s.event_counts()[k] / s1 / s1).epsilon(1e-12));
  }
}

TEST_CASE("all covariates equal gives zero covariance") {
  std::vector<CensoredRecord> recs;
  for (int i = 0; i < 40; ++i) recs.push_back({0.1 * (i + 1), i % 4 != 3, {0.5}});
  auto s = CensoredSample::from_records(recs);
  auto m = CoreModel::odds_ratio(1.0, 1);
  std::vector<double> th{0.4};
  auto g = fit_gamma(s, m, th).gamma;
  auto fun = conditional_moments(s, m, g, th, Direction::efficient());
  for (std::size_t k = 0; k < fun.size(); ++k) CHECK(std::abs(fun.cov_f_ldot(k, 0)) < 1e-14);
}

TEST_CASE("Nelson-Aalen under proportional hazards at zero") {
  auto s = three();
  auto g = fit_gamma(s, CoreModel::odds_ratio(0.0, 1), std::vector<double>{0.0});
  CHECK(g.gamma.at(0) == doctest::Approx(1.0 / 3));
  CHECK(g.gamma.at(1) == doctest::Approx(5.0 / 6));
  CHECK(g.gamma.at(2) == doctest::Approx(11.0 / 6));
  auto recs = oracle::ph_sample(400, 2, 0.0);
  auto s2 = CensoredSample::from_records(recs);
  auto na = oracle::nelson_aalen(recs);
  auto g2 = fit_gamma(s2, CoreModel::odds_ratio(0.0, 1), std::vector<double>{0.0});
  REQUIRE(na.size() == g2.gamma.size());
  for (std::size_t k = 0; k < na.size(); ++k) CHECK(g2.gamma.at(k) == doctest::Approx(na[k]).epsilon(1e-12));
}

TEST_CASE("fitted transformation is a fixed point") {
  for (auto model : {CoreModel::odds_ratio(1.0, 1), CoreModel::odds_ratio(2.0, 1), CoreModel::linear_hazard(2)}) {
    auto cfg = oracle::or_config(500, 4);
    cfg.model = model;
    cfg.theta0.assign(model.dim_theta(), 0.5);
    auto s = CensoredSample::from_records(simulate_sample(cfg));
    auto g = fit_gamma(s, model, cfg.theta0);
    CHECK(g.residual < 1e-10);
    auto chk = gamma_check(s, model, g.gamma, cfg.theta0);
    for (std::size_t k = 0; k < chk.size(); ++k)
      CHECK(chk.at(k) == doctest::Approx(g.gamma.at(k)).epsilon(1e-9));
    auto again = gamma_check(s, model, chk, cfg.theta0);
    for (std::size_t k = 0; k < chk.size(); ++k)
      CHECK(again.at(k) == doctest::Approx(chk.at(k)).epsilon(1e-9));
  }
}

TEST_CASE("fitted transformation is close to the truth") {
  const int reps = 20;
  int covered = 0;
  std::vector<double> err(reps);
  for (int r = 0; r < reps; ++r) {
    auto cfg = oracle::or_config(2000, 31 + r);
    auto s = CensoredSample::from_records(simulate_sample(cfg));
    auto g = fit_gamma(s, cfg.model, cfg.theta0);
    double sup = 0;
    for (std::size_t k = 0; k < g.gamma.size() && s.event_times()[k] <= 1.0; ++k)
      sup = std::max(sup, std::abs(g.gamma.at(k) - s.event_times()[k]));
    covered += sup <= 5 / std::sqrt(2000.0);
    err[r] = g.gamma(2.0) - 2.0;
  }
  CHECK(covered >= 18);
  double m = 0, v = 0;
  for (double e : err) m += e / reps;
  for (double e : err) v += (e - m) * (e - m) / (reps - 1);
  CHECK(std::abs(m) <= 3 * std::sqrt(v / reps));
}

TEST_CASE("infinite jump is reported") {
  std::vector<CensoredRecord> recs{{1, 1, {0.0}}, {2, 1, {0.0}}};
  auto m = CoreModel::odds_ratio(1.0, 1);
  try {
    fit_gamma(CensoredSample::from_records(recs), m, std::vector<double>{0.0});
    FAIL("expected non-convergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonConvergence);
  }
}

TEST_CASE("Volterra recursion") {
  std::mt19937_64 g(1);
  auto zero = random_functionals(g, 10, 2);
  zero.s_f.setZero();
  auto d0 = d_volterra(zero, zero.s_f);
  CHECK(d0.cwiseAbs().maxCoeff() == 0.0);
  Functionals two = random_functionals(g, 2, 1);
  two.dC = {0.5, 0.25};
  two.s_lp = {-1.0, -2.0};
  two.log_p0 = {0.5, 1.0};
  two.s_f(0, 0) = 1.0;
  two.s_f(1, 0) = 2.0;
  auto d = d_volterra(two, two.s_f);
  CHECK(d(0, 0) == doctest::Approx(-0.5));
  CHECK(d(1, 0) == doctest::Approx(-0.5 * std::exp(0.5) - 0.5));
}

TEST_CASE("Volterra recursive and explicit forms agree") {
  std::mt19937_64 g(42);
  for (int rep = 0; rep < 50; ++rep) {
    auto f = random_functionals(g, 20 + rep * 4, 1 + rep % 3);
    auto a = d_volterra(f, f.s_f), b = d_volterra_explicit(f, f.s_f);
    double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10 * scale);
  }
}

}
