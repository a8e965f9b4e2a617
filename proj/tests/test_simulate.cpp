#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "semitrans/error.hpp"
#include "semitrans/rng.hpp"
#include "semitrans/simulate.hpp"

using namespace semitrans;

namespace {

double delta_fraction(const std::vector<CensoredRecord>& r) {
  double s = 0;
  for (const auto& x : r) s += x.delta;
  return s / static_cast<double>(r.size());
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("failure time inversion") {
  auto por = CoreModel::odds_ratio(1.0, 1);
  std::vector<double> th{0.0}, z{1.0};
  CHECK(failure_time_from_exponential(por, th, TransformSpec::identity(), z, 2 * std::log(2.0) / 2) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(failure_time_from_exponential(por, th, TransformSpec::identity(), z, 0.0) == 0.0);
  auto ph = CoreModel::odds_ratio(0.0, 1);
  CHECK(failure_time_from_exponential(ph, th, TransformSpec::identity(), z, std::exp(1.0)) ==
        doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  auto pw = TransformSpec::power(2.0);
  CHECK(failure_time_from_exponential(ph, th, pw, z, 4.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(TransformSpec::log1p().inverse(TransformSpec::log1p().value(3.0)) == doctest::Approx(3.0));
}

TEST_CASE("degenerate censoring laws") {
  auto c = oracle::or_config(500, 3);
  c.censoring = CensoringSpec::none();
  CHECK(delta_fraction(simulate_sample(c)) == 1.0);
  c.censoring = CensoringSpec::koziol_green(0.0);
  CHECK(delta_fraction(simulate_sample(c)) == 1.0);
  c.censoring = CensoringSpec::with_atom(5.0, 1.0);
  for (const auto& r : simulate_sample(c)) CHECK(r.x <= 5.0);
  CounterRng rng(1, 2);
  std::vector<double> z{0.0};
  for (int i = 0; i < 50; ++i) CHECK(draw_censoring(c, z, rng) == 5.0);
}

TEST_CASE("Koziol-Green failure fraction") {
  auto c = oracle::or_config(100000, 17);
  c.censoring = CensoringSpec::koziol_green(1.0);
  double f = delta_fraction(simulate_sample(c, 4));
  CHECK(std::abs(f - 0.5) <= 3 * std::sqrt(0.25 / 1e5));
  c.censoring = CensoringSpec::koziol_green(3.0);
  f = delta_fraction(simulate_sample(c, 4));
  CHECK(std::abs(f - 0.25) <= 3 * std::sqrt(0.25 * 0.75 / 1e5));
}

TEST_CASE("Koziol-Green failure fraction does not depend on X") {
  auto c = oracle::or_config(100000, 23);
  c.censoring = CensoringSpec::koziol_green(1.0);
  auto r = simulate_sample(c, 4);
  std::vector<double> xs;
  for (const auto& x : r) xs.push_back(x.x);
  std::sort(xs.begin(), xs.end());
  for (double q : {0.25, 0.5, 0.75}) {
    double t = xs[static_cast<std::size_t>(q * xs.size())];
    double a = 0, b = 0;
    for (const auto& x : r)
      if (x.x > t) {
        ++a;
        b += x.delta;
      }
    CHECK(std::abs(b / a - 0.5) <= 3 * std::sqrt(0.25 / a));
  }
}

TEST_CASE("failure times follow the model distribution") {
  auto c = oracle::or_config(20000, 5);
  c.censoring = CensoringSpec::none();
  c.covariates = CovariateLaw::discrete({{0.5}});
  c.gamma0 = TransformSpec::power(1.5);
  auto r = simulate_sample(c);
  std::vector<double> u;
  for (const auto& x : r)
    u.push_back(1 - std::exp(-cum_hazard(c.model, c.gamma0.value(x.x), c.theta0, std::vector<double>{0.5})));
  std::sort(u.begin(), u.end());
  double d = 0;
  const double n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    d = std::max({d, std::abs((i + 1) / n - u[i]), std::abs(u[i] - i / n)});
  double lambda = std::sqrt(n) * d, pval = 0;
  for (int k = 1; k <= 100; ++k) pval += 2 * (k % 2 ? 1 : -1) * std::exp(-2.0 * k * k * lambda * lambda);
  CHECK(pval > 1e-3);
}

TEST_CASE("atom censoring mass") {
  auto c = oracle::or_config(50000, 9);
  CounterRng rng(4, 0);
  std::vector<double> z{0.0};
  int at = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) at += draw_censoring(c, z, rng) == 4.0;
  CHECK(std::abs(at / double(n) - 0.5) <= 3 * std::sqrt(0.25 / n));
}

TEST_CASE("determinism and job independence") {
  auto c = oracle::or_config(3000, 99);
  auto a = simulate_sample(c, 1), b = simulate_sample(c, 7);
  std::ostringstream sa, sb;
  write_csv(sa, a);
  write_csv(sb, b);
  CHECK(sa.str() == sb.str());
  c.seed = 100;
  std::ostringstream sc;
  write_csv(sc, simulate_sample(c));
  CHECK(sa.str() != sc.str());
}

TEST_CASE("counter rng") {
  CounterRng a(1, 2), b(1, 2), c(1, 3);
  CHECK(a() == b());
  CHECK(a.at(5) == b.at(5));
  CHECK(a.at(0) != c.at(0));
  double lo = 1, hi = 0;
  for (int i = 0; i < 10000; ++i) {
    double u = a.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo > 0);
  CHECK(hi < 1);
}

TEST_CASE("configuration validation") {
  auto c = oracle::or_config(10, 1);
  c.theta0 = {1.0, 2.0};
  CHECK_THROWS_AS(validate(c), Error);
  c = oracle::or_config(0, 1);
  CHECK_THROWS_AS(validate(c), Error);
  c = oracle::or_config(10, 1);
  c.censoring = CensoringSpec::with_atom(1.0, 1.5);
  CHECK_THROWS_AS(validate(c), Error);
  c.censoring = CensoringSpec::koziol_green(-1.0);
  CHECK_THROWS_AS(validate(c), Error);
}

}
