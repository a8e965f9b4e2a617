#include "semitrans/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "semitrans/error.hpp"

namespace semitrans {

TransformSpec TransformSpec::power(double p) {
  if (!(p > 0) || !std::isfinite(p)) fail(ErrorCode::InvalidConfig, "power transform needs p > 0");
  return {Form::Power, p};
}

double TransformSpec::value(double t) const {
  switch (form) {
    case Form::Identity: return t;
    case Form::Power: return std::pow(t, p);
    case Form::Log1p: return std::log1p(t);
  }
  return t;
}

double TransformSpec::inverse(double y) const {
  if (std::isinf(y)) return y;
  switch (form) {
    case Form::Identity: return y;
    case Form::Power: return std::pow(y, 1.0 / p);
    case Form::Log1p: return std::expm1(y);
  }
  return y;
}

std::string TransformSpec::name() const {
  switch (form) {
    case Form::Identity: return "identity";
    case Form::Power: return "power";
    case Form::Log1p: return "log1p";
  }
  return "identity";
}

CovariateLaw CovariateLaw::uniform(std::size_t dim, double lo, double hi) {
  CovariateLaw law;
  law.kind = Kind::Uniform;
  law.dim = dim;
  law.lo.assign(dim, lo);
  law.hi.assign(dim, hi);
  return law;
}

CovariateLaw CovariateLaw::discrete(std::vector<std::vector<double>> support,
                                    std::vector<double> probs) {
  CovariateLaw law;
  law.kind = Kind::Discrete;
  law.dim = support.empty() ? 0 : support.front().size();
  law.lo.clear();
  law.hi.clear();
  law.support = std::move(support);
  law.probs = std::move(probs);
  return law;
}

double CovariateLaw::bound() const {
  double b = 0;
  if (kind == Kind::Uniform) {
    for (std::size_t j = 0; j < dim; ++j) b = std::max({b, std::abs(lo[j]), std::abs(hi[j])});
  } else {
    for (const auto& v : support)
      for (double x : v) b = std::max(b, std::abs(x));
  }
  return b;
}

CensoringSpec CensoringSpec::koziol_green(double a) {
  CensoringSpec c;
  c.kind = Kind::KoziolGreen;
  c.a = a;
  return c;
}

CensoringSpec CensoringSpec::with_atom(double tau0, double atom, Continuous continuous,
                                       double rate) {
  CensoringSpec c;
  c.kind = Kind::IndependentWithAtom;
  c.tau0 = tau0;
  c.atom = atom;
  c.continuous = continuous;
  c.rate = rate;
  return c;
}

void validate(const SimConfig& config) {
  const auto& m = config.model;
  if (config.theta0.size() != m.dim_theta())
    fail(ErrorCode::InvalidConfig, "theta0 has dimension " + std::to_string(config.theta0.size()) +
                                       ", model expects " + std::to_string(m.dim_theta()));
  for (double v : config.theta0)
    if (!std::isfinite(v)) fail(ErrorCode::InvalidConfig, "theta0 must be finite");
  const auto& law = config.covariates;
  if (law.dim != m.dim_z())
    fail(ErrorCode::InvalidConfig, "covariate law dimension " + std::to_string(law.dim) +
                                       " does not match model covariate dimension " +
                                       std::to_string(m.dim_z()));
  if (law.kind == CovariateLaw::Kind::Uniform) {
    if (law.lo.size() != law.dim || law.hi.size() != law.dim)
      fail(ErrorCode::InvalidConfig, "uniform covariate bounds have wrong dimension");
    for (std::size_t j = 0; j < law.dim; ++j)
      if (!std::isfinite(law.lo[j]) || !std::isfinite(law.hi[j]) || !(law.lo[j] < law.hi[j]))
        fail(ErrorCode::InvalidConfig, "uniform covariate law needs finite lo < hi");
  } else {
    if (law.support.empty()) fail(ErrorCode::InvalidConfig, "discrete covariate law has no support");
    for (const auto& v : law.support) {
      if (v.size() != law.dim)
        fail(ErrorCode::InvalidConfig, "discrete support point has wrong dimension");
      for (double x : v)
        if (!std::isfinite(x)) fail(ErrorCode::InvalidConfig, "discrete support must be finite");
    }
    if (!law.probs.empty()) {
      if (law.probs.size() != law.support.size())
        fail(ErrorCode::InvalidConfig, "discrete probabilities do not match support size");
      double s = 0;
      for (double p : law.probs) {
        if (!(p >= 0)) fail(ErrorCode::InvalidConfig, "discrete probabilities must be >= 0");
        s += p;
      }
      if (!(s > 0)) fail(ErrorCode::InvalidConfig, "discrete probabilities sum to zero");
    }
  }
  if (law.bound() > m.covariate_bound())
    fail(ErrorCode::InvalidConfig, "covariate law exceeds the model's covariate bound");
  if (config.gamma0.form == TransformSpec::Form::Power && !(config.gamma0.p > 0))
    fail(ErrorCode::InvalidConfig, "power transform needs p > 0");
  const auto& c = config.censoring;
  switch (c.kind) {
    case CensoringSpec::Kind::None: break;
    case CensoringSpec::Kind::KoziolGreen:
      if (!(c.a >= 0) || !std::isfinite(c.a))
        fail(ErrorCode::InvalidConfig, "Koziol-Green exponent must be finite and >= 0");
      break;
    case CensoringSpec::Kind::IndependentWithAtom:
      if (!(c.tau0 > 0) || !std::isfinite(c.tau0))
        fail(ErrorCode::InvalidConfig, "censoring tau0 must be finite and > 0");
      if (!(c.atom > 0 && c.atom <= 1))
        fail(ErrorCode::InvalidConfig, "censoring atom mass must lie in (0,1]");
      if (c.continuous == CensoringSpec::Continuous::Exponential && !(c.rate > 0))
        fail(ErrorCode::InvalidConfig, "exponential censoring rate must be > 0");
      break;
  }
  if (config.n < 1) fail(ErrorCode::InvalidConfig, "n must be >= 1");
}

std::vector<double> draw_covariates(const CovariateLaw& law, CounterRng& rng) {
  std::vector<double> z(law.dim);
  if (law.kind == CovariateLaw::Kind::Uniform) {
    for (std::size_t j = 0; j < law.dim; ++j) z[j] = law.lo[j] + (law.hi[j] - law.lo[j]) * rng.uniform();
    return z;
  }
  double u = rng.uniform();
  std::size_t q = law.support.size();
  std::size_t idx = q - 1;
  if (law.probs.empty()) {
    idx = std::min(q - 1, static_cast<std::size_t>(u * static_cast<double>(q)));
  } else {
    double total = 0;
    for (double p : law.probs) total += p;
    double acc = 0;
    for (std::size_t i = 0; i < q; ++i) {
      acc += law.probs[i] / total;
      if (u < acc) {
        idx = i;
        break;
      }
    }
  }
  return law.support[idx];
}

double failure_time_from_exponential(const CoreModel& model, std::span<const double> theta0,
                                     const TransformSpec& gamma0, std::span<const double> z,
                                     double e) {
  return gamma0.inverse(inverse_cum_hazard(model, e, theta0, z));
}

double draw_failure(const CoreModel& model, std::span<const double> theta0,
                    const TransformSpec& gamma0, std::span<const double> z, CounterRng& rng) {
  return failure_time_from_exponential(model, theta0, gamma0, z, rng.exponential());
}

double draw_censoring(const SimConfig& config, std::span<const double> z, CounterRng& rng) {
  const auto& c = config.censoring;
  switch (c.kind) {
    case CensoringSpec::Kind::None: return std::numeric_limits<double>::infinity();
    case CensoringSpec::Kind::KoziolGreen: {
      double e = rng.exponential();
      if (c.a == 0) return std::numeric_limits<double>::infinity();
      return failure_time_from_exponential(config.model, config.theta0, config.gamma0, z, e / c.a);
    }
    case CensoringSpec::Kind::IndependentWithAtom: {
      double u = rng.uniform();
      double v = rng.uniform();
      if (u < c.atom) return c.tau0;
      double t = c.continuous == CensoringSpec::Continuous::Uniform ? c.tau0 * v
                                                                     : -std::log(v) / c.rate;
      return std::min(t, c.tau0);
    }
  }
  return std::numeric_limits<double>::infinity();
}

std::vector<CensoredRecord> simulate_sample(const SimConfig& config, unsigned jobs) {
  validate(config);
  std::vector<CensoredRecord> out(config.n);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      CounterRng rng(config.seed, i);
      auto z = draw_covariates(config.covariates, rng);
      double t = draw_failure(config.model, config.theta0, config.gamma0, z, rng);
      double tc = draw_censoring(config, z, rng);
      auto& r = out[i];
      r.delta = t <= tc ? 1 : 0;
      r.x = r.delta ? t : tc;
      r.z = std::move(z);
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, config.n / 1000))));
  if (jobs == 1) {
    work(0, config.n);
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (config.n + jobs - 1) / jobs;
    for (unsigned j = 0; j < jobs; ++j) {
      std::size_t b = j * chunk, e = std::min(config.n, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& t : pool) t.join();
  }
  return out;
}

}  // namespace semitrans
