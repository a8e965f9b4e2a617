#include <doctest.h>

#include <cmath>
#include <vector>

#include "semitrans/core_model.hpp"
#include "semitrans/error.hpp"

using namespace semitrans;

namespace {

std::vector<double> v(std::initializer_list<double> x) { return x; }

}  // namespace

TEST_SUITE("core_model") {

TEST_CASE("hazard values") {
  auto ph = CoreModel::odds_ratio(0.0, 1);
  auto por = CoreModel::odds_ratio(1.0, 1);
  auto lin = CoreModel::linear_hazard(2);
  CHECK(hazard(ph, 5.0, v({0.7}), v({1.0})) == doctest::Approx(std::exp(0.7)).epsilon(1e-15));
  double r = std::exp(0.5);
  CHECK(hazard(por, 2.0, v({0.5}), v({1.0})) == doctest::Approx(r / (1 + 2 * r)).epsilon(1e-14));
  CHECK(hazard(por, 2.0, v({0.5}), v({1.0})) == doctest::Approx(0.38365).epsilon(1e-4));
  CHECK(hazard(lin, 3.0, v({0.0, std::log(2.0)}), v({1.0})) == doctest::Approx(7.0).epsilon(1e-14));
}

TEST_CASE("log hazard derivatives") {
  auto ph = CoreModel::odds_ratio(0.0, 2);
  auto d0 = log_hazard_derivs(ph, 1.3, v({0.2, -0.4}), v({0.5, 2.0}));
  CHECK(d0.ell_prime == 0.0);
  CHECK(d0.ell_dot[0] == 0.5);
  CHECK(d0.ell_dot[1] == 2.0);

  auto por = CoreModel::odds_ratio(1.0, 1);
  auto d1 = log_hazard_derivs(por, 2.0, v({0.5}), v({1.0}));
  double r = std::exp(0.5);
  CHECK(d1.ell_prime == doctest::Approx(-r / (1 + 2 * r)).epsilon(1e-14));
  CHECK(d1.ell_dot[0] == doctest::Approx(1 / (1 + 2 * r)).epsilon(1e-14));
  CHECK(d1.ell_dot[0] == doctest::Approx(0.23272).epsilon(1e-4));

  auto lin = CoreModel::linear_hazard(2);
  auto d2 = log_hazard_derivs(lin, 3.0, v({0.0, std::log(2.0)}), v({1.0}));
  CHECK(d2.ell_prime == doctest::Approx(2.0 / 7.0).epsilon(1e-14));
}

TEST_CASE("derivatives match finite differences") {
  for (auto model : {CoreModel::odds_ratio(0.7, 2), CoreModel::linear_hazard(4)}) {
    std::vector<double> th = model.dim_theta() == 2 ? v({0.3, -0.6}) : v({0.2, -0.1, 0.4, 0.3});
    std::vector<double> z = v({0.8, -0.5});
    for (double x : {0.1, 1.0, 4.0}) {
      auto d = log_hazard_derivs(model, x, th, z);
      double h = 1e-6;
      double lp = (std::log(hazard(model, x + h, th, z)) - std::log(hazard(model, x - h, th, z))) / (2 * h);
      CHECK(d.ell_prime == doctest::Approx(lp).epsilon(1e-7));
      double lpp = (log_hazard_derivs(model, x + h, th, z).ell_prime -
                    log_hazard_derivs(model, x - h, th, z).ell_prime) / (2 * h);
      CHECK(d.ell_dprime == doctest::Approx(lpp).epsilon(1e-6));
      auto grad = cum_hazard_theta_grad(model, x, th, z);
      for (std::size_t j = 0; j < th.size(); ++j) {
        auto tp = th, tm = th;
        tp[j] += h;
        tm[j] -= h;
        double ld = (std::log(hazard(model, x, tp, z)) - std::log(hazard(model, x, tm, z))) / (2 * h);
        CHECK(d.ell_dot[j] == doctest::Approx(ld).epsilon(1e-7));
        double ag = (cum_hazard(model, x, tp, z) - cum_hazard(model, x, tm, z)) / (2 * h);
        CHECK(grad[j] == doctest::Approx(ag).epsilon(1e-7));
      }
    }
  }
}

TEST_CASE("cumulative hazard closed forms") {
  auto por = CoreModel::odds_ratio(1.0, 1);
  CHECK(cum_hazard(por, 1.0, v({0.0}), v({1.0})) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(cum_hazard(CoreModel::odds_ratio(0.0, 1), 2.5, v({0.4}), v({1.0})) ==
        doctest::Approx(std::exp(0.4) * 2.5).epsilon(1e-15));
  CHECK(cum_hazard(CoreModel::linear_hazard(2), 3.0, v({0.0, std::log(2.0)}), v({1.0})) ==
        doctest::Approx(12.0).epsilon(1e-14));
  CHECK(cum_hazard(por, 0.0, v({0.3}), v({1.0})) == 0.0);
}

TEST_CASE("cumulative hazard is the integral of the hazard") {
  for (auto model : {CoreModel::odds_ratio(2.0, 1), CoreModel::linear_hazard(2)}) {
    std::vector<double> th = model.dim_theta() == 1 ? v({0.4}) : v({0.4, -0.3});
    std::vector<double> z = v({0.7});
    double x = 3.0, sum = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      double a = x * i / n, b = x * (i + 1) / n;
      sum += (b - a) / 6 * (hazard(model, a, th, z) + 4 * hazard(model, (a + b) / 2, th, z) +
                            hazard(model, b, th, z));
    }
    CHECK(cum_hazard(model, x, th, z) == doctest::Approx(sum).epsilon(1e-12));
  }
}

TEST_CASE("inverse cumulative hazard") {
  auto por = CoreModel::odds_ratio(1.0, 1);
  CHECK(inverse_cum_hazard(por, std::log(2.0), v({0.0}), v({1.0})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(inverse_cum_hazard(por, 0.0, v({0.3}), v({1.0})) == 0.0);
  CHECK(inverse_cum_hazard(CoreModel::odds_ratio(0.0, 1), 3.5, v({0.0}), v({1.0})) == 3.5);
  for (auto model : {CoreModel::odds_ratio(0.5, 1), CoreModel::linear_hazard(2)}) {
    std::vector<double> th = model.dim_theta() == 1 ? v({-0.4}) : v({0.2, 0.5});
    for (double x : {1e-6, 0.3, 2.0, 50.0}) {
      double a = cum_hazard(model, x, th, v({0.9}));
      CHECK(inverse_cum_hazard(model, a, th, v({0.9})) == doctest::Approx(x).epsilon(1e-12));
    }
  }
}

TEST_CASE("small eta is continuous with the proportional hazards branch") {
  auto ph = CoreModel::odds_ratio(0.0, 1);
  auto near = CoreModel::odds_ratio(1e-10, 1);
  for (double x : {0.5, 2.0, 10.0}) {
    CHECK(hazard(near, x, v({0.6}), v({-0.7})) == doctest::Approx(hazard(ph, x, v({0.6}), v({-0.7}))).epsilon(1e-6));
    CHECK(cum_hazard(near, x, v({0.6}), v({-0.7})) == doctest::Approx(cum_hazard(ph, x, v({0.6}), v({-0.7}))).epsilon(1e-6));
    auto a = log_hazard_derivs(near, x, v({0.6}), v({-0.7}));
    CHECK(std::abs(a.ell_prime) < 1e-6);
    CHECK(a.ell_dot[0] == doctest::Approx(-0.7).epsilon(1e-6));
    double y = cum_hazard(ph, x, v({0.6}), v({-0.7}));
    CHECK(inverse_cum_hazard(near, y, v({0.6}), v({-0.7})) == doctest::Approx(x).epsilon(1e-6));
  }
}

TEST_CASE("invalid inputs") {
  auto por = CoreModel::odds_ratio(1.0, 1, 1.0);
  CHECK_THROWS_AS(hazard(por, -1.0, v({0.0}), v({0.0})), Error);
  CHECK_THROWS_AS(hazard(por, 1.0, v({0.0, 1.0}), v({0.0})), Error);
  CHECK_THROWS_AS(hazard(por, 1.0, v({0.0}), v({2.0})), Error);
  CHECK_THROWS_AS(CoreModel::odds_ratio(-1.0, 1), Error);
  CHECK_THROWS_AS(CoreModel::linear_hazard(3), Error);
}

TEST_CASE("regularity check") {
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(0.25 * i);
  auto rep = check_regularity(CoreModel::odds_ratio(1.0, 1), Box::cube(1, 1.0), Box::cube(1, 1.0), grid);
  CHECK(rep.pass);
  CHECK(rep.alpha0_min > 0);
  auto lin = check_regularity(CoreModel::linear_hazard(2), Box::cube(2, 1.0), Box::cube(1, 1.0), grid);
  CHECK(lin.pass);
  Box unbounded{{-INFINITY}, {INFINITY}};
  auto bad = check_regularity(CoreModel::odds_ratio(1.0, 1), Box::cube(1, 1.0), unbounded, grid);
  CHECK_FALSE(bad.pass);
}

}
