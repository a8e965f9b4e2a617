#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "semitrans/dataset.hpp"
#include "semitrans/error.hpp"

using namespace semitrans;

namespace {

ErrorCode code_of(std::vector<CensoredRecord> r) {
  try {
    CensoredSample::from_records(std::move(r));
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("hand counted risk sets") {
  auto s = CensoredSample::from_records({{1, 1, {}}, {2, 1, {}}, {3, 1, {}}});
  REQUIRE(s.num_events() == 3);
  CHECK(s.event_times()[0] == 1);
  CHECK(s.event_times()[2] == 3);
  CHECK(s.at_risk()[0] == doctest::Approx(1.0));
  CHECK(s.at_risk()[1] == doctest::Approx(2.0 / 3));
  CHECK(s.at_risk()[2] == doctest::Approx(1.0 / 3));
  CHECK(s.event_counts()[1] == doctest::Approx(1.0 / 3));
}

TEST_CASE("ties aggregate") {
  auto s = CensoredSample::from_records({{1, 1, {}}, {1, 1, {}}});
  CHECK(s.num_events() == 1);
  CHECK(s.event_counts()[0] == doctest::Approx(1.0));
  CHECK(s.failure_counts()[0] == 2);
}

TEST_CASE("censored at a failure time stays at risk") {
  auto s = CensoredSample::from_records({{1, 0, {0.0}}, {1, 1, {1.0}}, {2, 1, {0.0}}});
  CHECK(s.num_events() == 2);
  CHECK(s.at_risk()[0] == doctest::Approx(1.0));
  CHECK(s.at_risk()[1] == doctest::Approx(1.0 / 3));
}

TEST_CASE("input errors") {
  CHECK(code_of({}) == ErrorCode::EmptyInput);
  CHECK(code_of({{1, 0, {}}, {2, 0, {}}}) == ErrorCode::NoFailures);
  CHECK(code_of({{1, 1, {}}}) == ErrorCode::TooFewRecords);
  CHECK(code_of({{-1, 1, {}}, {2, 1, {}}}) == ErrorCode::InvalidTime);
  CHECK(code_of({{NAN, 1, {}}, {2, 1, {}}}) == ErrorCode::InvalidTime);
  CHECK(code_of({{1, 2, {}}, {2, 1, {}}}) == ErrorCode::InvalidIndicator);
  CHECK(code_of({{1, 1, {0.0}}, {2, 1, {}}}) == ErrorCode::DimensionMismatch);
}

TEST_CASE("integration windows") {
  auto grid = std::make_shared<const Grid>(Grid{1, 2, 3});
  auto measure = StepFunction::from_jumps(grid, std::vector<double>{1, 1, 1}, 0, true);
  StepFunction one(grid, {1, 1, 1});
  CHECK(integrate(measure, one, 0, 3) == doctest::Approx(3.0));
  CHECK(integrate(measure, one, 1, 3) == doctest::Approx(2.0));
  CHECK(integrate(measure, one, 1, 3, Window::ClosedOpen) == doctest::Approx(2.0));
  auto half = StepFunction::from_jumps(grid, std::vector<double>{0.5, 0.5, 0.5}, 0, true);
  StepFunction ramp(grid, {1, 2, 3});
  CHECK(integrate(half, ramp, 0, 3) == doctest::Approx(3.0));
  StepFunction other(std::make_shared<const Grid>(Grid{1, 2}), {1, 1});
  CHECK_THROWS_AS(integrate(measure, other, 0, 3), Error);
}

TEST_CASE("step function evaluation is right continuous") {
  auto grid = std::make_shared<const Grid>(Grid{1, 2});
  StepFunction f(grid, {5, 7}, 1.0);
  CHECK(f(0.5) == 1.0);
  CHECK(f(1.0) == 5.0);
  CHECK(f(1.5) == 5.0);
  CHECK(f(9.0) == 7.0);
  CHECK(f.jump(1) == 2.0);
  CHECK_THROWS_AS(StepFunction(grid, {1, 0}, 0, true), Error);
}

TEST_CASE("permutation invariance") {
  auto recs = oracle::ph_sample(300, 11, 0.5, 2);
  auto a = CensoredSample::from_records(recs);
  std::mt19937_64 g(5);
  std::shuffle(recs.begin(), recs.end(), g);
  auto b = CensoredSample::from_records(recs);
  REQUIRE(a.num_events() == b.num_events());
  for (std::size_t k = 0; k < a.num_events(); ++k) {
    CHECK(a.event_times()[k] == b.event_times()[k]);
    CHECK(a.at_risk()[k] == b.at_risk()[k]);
    CHECK(a.event_counts()[k] == b.event_counts()[k]);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.records()[i].x == b.records()[i].x);
    CHECK(a.records()[i].z == b.records()[i].z);
  }
}

TEST_CASE("at risk fractions match a direct count") {
  auto recs = oracle::ph_sample(200, 3, 0.0);
  auto s = CensoredSample::from_records(recs);
  for (std::size_t k = 0; k < s.num_events(); ++k) {
    double t = s.event_times()[k], y = 0, d = 0;
    for (const auto& r : recs) {
      y += r.x >= t;
      d += r.x == t && r.delta;
    }
    CHECK(s.at_risk()[k] == doctest::Approx(y / 200).epsilon(1e-15));
    CHECK(s.event_counts()[k] == doctest::Approx(d / 200).epsilon(1e-15));
  }
}

TEST_CASE("grouped and ungrouped risk sets agree") {
  std::vector<CensoredRecord> recs;
  for (int i = 0; i < 400; ++i) recs.push_back({0.01 * (i % 97) + 0.001 * i, i % 3 != 0, {double(i % 4)}});
  auto g = CensoredSample::from_records(recs, CensoredSample::Grouping::Always);
  auto u = CensoredSample::from_records(recs, CensoredSample::Grouping::Never);
  CHECK(g.grouped());
  CHECK_FALSE(u.grouped());
  for (std::size_t k = 0; k < g.num_events(); ++k) {
    double sg = 0, su = 0;
    g.for_each_at_risk(k, [&](std::size_t p, double mult) { sg += mult * g.unit_z(p)[0]; });
    u.for_each_at_risk(k, [&](std::size_t i, double mult) { su += mult * u.unit_z(i)[0]; });
    CHECK(sg == doctest::Approx(su));
  }
}

TEST_CASE("csv round trip and parse errors") {
  std::vector<CensoredRecord> recs{{0.1234567890123, 1, {1.5, -2}}, {2.0, 0, {0.0, 1e-300}}};
  std::ostringstream os;
  write_csv(os, recs);
  std::istringstream is(os.str());
  auto back = read_csv(is);
  REQUIRE(back.size() == 2);
  CHECK(back[0].x == recs[0].x);
  CHECK(back[1].z[1] == recs[1].z[1]);
  std::istringstream bad("x,delta,z1\n1.0,1,abc\n");
  try {
    read_csv(bad);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::istringstream bad_delta("x,delta\n1.0,3\n");
  CHECK_THROWS_AS(read_csv(bad_delta), Error);
}

}
