#include "semitrans/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "semitrans/error.hpp"
#include "semitrans/format.hpp"

namespace semitrans {

Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    auto pos = what.find("syntax error");
    if (pos != std::string::npos) what = what.substr(pos);
    fail(ErrorCode::ParseError, source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                    ": malformed JSON (" + what + ")");
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

namespace {

void dump(const Json& j, std::string& out, int indent) {
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  std::string pad_in(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in + Json(it.key()).dump() + ": ";
        dump(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      bool flat = true;
      for (const auto& v : j)
        if (v.is_object() || v.is_array()) flat = false;
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          dump(j[i], out, indent + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad_in;
        dump(j[i], out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      double v = j.get<double>();
      if (std::isnan(v)) out += "\"nan\"";
      else if (std::isinf(v)) out += v > 0 ? "\"inf\"" : "\"-inf\"";
      else out += format_double(v);
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    fail(ErrorCode::InvalidConfig, where + ": missing required field '" + key + "'");
  return j.at(key);
}

double get_number(const Json& j, const std::string& what) {
  if (!j.is_number()) fail(ErrorCode::InvalidConfig, what + " must be a number");
  return j.get<double>();
}

std::string get_string(const Json& j, const std::string& what) {
  if (!j.is_string()) fail(ErrorCode::InvalidConfig, what + " must be a string");
  return j.get<std::string>();
}

std::size_t get_count(const Json& j, const std::string& what) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    fail(ErrorCode::InvalidConfig, what + " must be an integer");
  auto v = j.get<long long>();
  if (v < 0) fail(ErrorCode::InvalidConfig, what + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string dump_json(const Json& j) {
  std::string out;
  dump(j, out, 0);
  out += "\n";
  return out;
}

std::vector<double> parse_vector(const Json& j, const std::string& what) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) fail(ErrorCode::InvalidConfig, what + " must be an array of numbers");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(get_number(e, what + " entry"));
  return v;
}

CoreModel parse_model(const Json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, "model must be an object");
  std::string family = get_string(require(j, "family", "model"), "model.family");
  std::size_t dim = get_count(require(j, "dim_theta", "model"), "model.dim_theta");
  double bound = j.contains("covariate_bound")
                     ? get_number(j.at("covariate_bound"), "model.covariate_bound")
                     : std::numeric_limits<double>::infinity();
  if (family == "odds_ratio") {
    double eta = j.contains("eta") ? get_number(j.at("eta"), "model.eta") : 1.0;
    return CoreModel::odds_ratio(eta, dim, bound);
  }
  if (family == "proportional_hazards") return CoreModel::odds_ratio(0.0, dim, bound);
  if (family == "linear_hazard") return CoreModel::linear_hazard(dim, bound);
  fail(ErrorCode::InvalidConfig, "unknown model family '" + family + "'");
}

Json model_to_json(const CoreModel& m) {
  Json j;
  j["family"] = m.family_name();
  if (m.family() == Family::OddsRatio) j["eta"] = m.eta();
  j["dim_theta"] = m.dim_theta();
  if (std::isfinite(m.covariate_bound())) j["covariate_bound"] = m.covariate_bound();
  return j;
}

TransformSpec parse_transform(const Json& j) {
  if (j.is_string()) return parse_transform(Json{{"form", j}});
  std::string form = get_string(require(j, "form", "gamma0"), "gamma0.form");
  if (form == "identity") return TransformSpec::identity();
  if (form == "log1p") return TransformSpec::log1p();
  if (form == "power") return TransformSpec::power(get_number(require(j, "p", "gamma0"), "gamma0.p"));
  fail(ErrorCode::InvalidConfig, "unknown gamma0 form '" + form + "'");
}

Json transform_to_json(const TransformSpec& t) {
  Json j;
  j["form"] = t.name();
  if (t.form == TransformSpec::Form::Power) j["p"] = t.p;
  return j;
}

CovariateLaw parse_covariates(const Json& j, std::size_t default_dim) {
  if (j.is_null()) return CovariateLaw::uniform(default_dim);
  std::string law = get_string(require(j, "law", "covariates"), "covariates.law");
  if (law == "uniform") {
    std::size_t dim = j.contains("dim") ? get_count(j.at("dim"), "covariates.dim") : default_dim;
    CovariateLaw c = CovariateLaw::uniform(dim);
    if (j.contains("lo")) {
      auto lo = parse_vector(j.at("lo"), "covariates.lo");
      c.lo = lo.size() == 1 ? std::vector<double>(dim, lo[0]) : lo;
    }
    if (j.contains("hi")) {
      auto hi = parse_vector(j.at("hi"), "covariates.hi");
      c.hi = hi.size() == 1 ? std::vector<double>(dim, hi[0]) : hi;
    }
    return c;
  }
  if (law == "discrete") {
    const auto& sup = require(j, "support", "covariates");
    if (!sup.is_array()) fail(ErrorCode::InvalidConfig, "covariates.support must be an array");
    std::vector<std::vector<double>> s;
    for (const auto& e : sup) s.push_back(parse_vector(e, "covariates.support"));
    std::vector<double> probs;
    if (j.contains("probs")) probs = parse_vector(j.at("probs"), "covariates.probs");
    return CovariateLaw::discrete(std::move(s), std::move(probs));
  }
  fail(ErrorCode::InvalidConfig, "unknown covariate law '" + law + "'");
}

Json covariates_to_json(const CovariateLaw& law) {
  Json j;
  if (law.kind == CovariateLaw::Kind::Uniform) {
    j["law"] = "uniform";
    j["dim"] = law.dim;
    j["lo"] = law.lo;
    j["hi"] = law.hi;
  } else {
    j["law"] = "discrete";
    j["support"] = law.support;
    if (!law.probs.empty()) j["probs"] = law.probs;
  }
  return j;
}

CensoringSpec parse_censoring(const Json& j) {
  if (j.is_null()) return CensoringSpec::none();
  std::string kind = get_string(require(j, "kind", "censoring"), "censoring.kind");
  if (kind == "none") return CensoringSpec::none();
  if (kind == "koziol_green")
    return CensoringSpec::koziol_green(get_number(require(j, "a", "censoring"), "censoring.a"));
  if (kind == "independent_with_atom") {
    double tau0 = get_number(require(j, "tau0", "censoring"), "censoring.tau0");
    double atom = get_number(require(j, "atom", "censoring"), "censoring.atom");
    std::string cont = j.contains("continuous") ? get_string(j.at("continuous"), "censoring.continuous")
                                                : "uniform";
    if (cont == "uniform") return CensoringSpec::with_atom(tau0, atom);
    if (cont == "exponential") {
      double rate = j.contains("rate") ? get_number(j.at("rate"), "censoring.rate") : 1.0;
      return CensoringSpec::with_atom(tau0, atom, CensoringSpec::Continuous::Exponential, rate);
    }
    fail(ErrorCode::InvalidConfig, "unknown continuous censoring law '" + cont + "'");
  }
  fail(ErrorCode::InvalidConfig, "unknown censoring kind '" + kind + "'");
}

Json censoring_to_json(const CensoringSpec& c) {
  Json j;
  switch (c.kind) {
    case CensoringSpec::Kind::None: j["kind"] = "none"; break;
    case CensoringSpec::Kind::KoziolGreen:
      j["kind"] = "koziol_green";
      j["a"] = c.a;
      break;
    case CensoringSpec::Kind::IndependentWithAtom:
      j["kind"] = "independent_with_atom";
      j["tau0"] = c.tau0;
      j["atom"] = c.atom;
      j["continuous"] = c.continuous == CensoringSpec::Continuous::Uniform ? "uniform" : "exponential";
      if (c.continuous == CensoringSpec::Continuous::Exponential) j["rate"] = c.rate;
      break;
  }
  return j;
}

SimConfig parse_sim_config(const Json& sim, const CoreModel& model) {
  if (!sim.is_object()) fail(ErrorCode::InvalidConfig, "simulation must be an object");
  SimConfig c;
  c.model = model;
  c.theta0 = parse_vector(require(sim, "theta0", "simulation"), "simulation.theta0");
  c.gamma0 = sim.contains("gamma0") ? parse_transform(sim.at("gamma0")) : TransformSpec::identity();
  c.covariates = parse_covariates(sim.contains("covariates") ? sim.at("covariates") : Json(),
                                  model.dim_z());
  c.censoring = parse_censoring(sim.contains("censoring") ? sim.at("censoring") : Json());
  c.n = get_count(require(sim, "n", "simulation"), "simulation.n");
  if (sim.contains("seed")) {
    const auto& s = sim.at("seed");
    if (!s.is_number_unsigned() && !s.is_number_integer())
      fail(ErrorCode::InvalidConfig, "simulation.seed must be an integer");
    c.seed = s.get<std::uint64_t>();
  }
  validate(c);
  return c;
}

Json sim_config_to_json(const SimConfig& c) {
  Json j;
  j["model"] = model_to_json(c.model);
  j["theta0"] = c.theta0;
  j["gamma0"] = transform_to_json(c.gamma0);
  j["covariates"] = covariates_to_json(c.covariates);
  j["censoring"] = censoring_to_json(c.censoring);
  j["n"] = c.n;
  j["seed"] = c.seed;
  return j;
}

Direction parse_direction(const Json& j) {
  if (j.is_null()) return Direction::efficient();
  std::string type = get_string(require(j, "type", "direction"), "direction.type");
  if (type == "efficient") return Direction::efficient();
  if (type == "step") {
    const auto& comps = require(j, "components", "direction");
    if (!comps.is_array()) fail(ErrorCode::InvalidConfig, "direction.components must be an array");
    std::vector<StepComponent> out;
    for (const auto& c : comps) {
      StepComponent s;
      s.covariate = get_count(require(c, "covariate", "direction component"), "covariate");
      if (c.contains("breaks")) s.breaks = parse_vector(c.at("breaks"), "breaks");
      if (c.contains("values")) s.values = parse_vector(c.at("values"), "values");
      out.push_back(std::move(s));
    }
    return Direction::step(std::move(out));
  }
  fail(ErrorCode::InvalidConfig, "unknown direction type '" + type + "'");
}

Json direction_to_json(const Direction& d) {
  Json j;
  if (d.kind() == Direction::Kind::Step) {
    j["type"] = "step";
    Json comps = Json::array();
    for (const auto& c : d.components())
      comps.push_back({{"covariate", c.covariate}, {"breaks", c.breaks}, {"values", c.values}});
    j["components"] = comps;
  } else {
    j["type"] = d.kind() == Direction::Kind::Efficient ? "efficient" : d.label();
  }
  return j;
}

EstimateOptions parse_estimate_options(const Json& j, std::size_t dim_theta) {
  EstimateOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, "estimate must be an object");
  if (j.contains("tol")) o.tol = get_number(j.at("tol"), "estimate.tol");
  if (j.contains("max_iter")) o.max_iter = static_cast<int>(get_count(j.at("max_iter"), "estimate.max_iter"));
  if (j.contains("trust_radius")) o.trust_radius = get_number(j.at("trust_radius"), "estimate.trust_radius");
  if (j.contains("max_halvings"))
    o.max_halvings = static_cast<int>(get_count(j.at("max_halvings"), "estimate.max_halvings"));
  if (j.contains("box")) {
    const auto& b = j.at("box");
    auto lo = parse_vector(require(b, "lo", "estimate.box"), "estimate.box.lo");
    auto hi = parse_vector(require(b, "hi", "estimate.box"), "estimate.box.hi");
    if (lo.size() == 1) lo.assign(dim_theta, lo[0]);
    if (hi.size() == 1) hi.assign(dim_theta, hi[0]);
    o.box = Box{lo, hi};
    if (o.box.dim() != dim_theta || !o.box.bounded())
      fail(ErrorCode::InvalidConfig, "estimate.box must be a bounded box of dimension dim_theta");
  }
  if (!(o.tol > 0) || !(o.trust_radius > 0))
    fail(ErrorCode::InvalidConfig, "estimate.tol and estimate.trust_radius must be positive");
  return o;
}

NuisanceDirection parse_nuisance(const Json& j, double median_time) {
  std::string type = get_string(require(j, "type", "nuisance direction"), "g.type");
  if (type == "constant")
    return NuisanceDirection::constant(j.contains("value") ? get_number(j.at("value"), "g.value") : 1.0);
  if (type == "indicator_upto") {
    const auto& c = require(j, "cut", "nuisance direction");
    double cut = c.is_string() && c.get<std::string>() == "median" ? median_time
                                                                   : get_number(c, "g.cut");
    return NuisanceDirection::indicator_upto(cut);
  }
  if (type == "step") {
    NuisanceDirection g;
    g.label = "step";
    g.breaks = parse_vector(require(j, "breaks", "nuisance direction"), "g.breaks");
    g.values = parse_vector(require(j, "values", "nuisance direction"), "g.values");
    return g;
  }
  fail(ErrorCode::InvalidConfig, "unknown nuisance direction type '" + type + "'");
}

}  // namespace semitrans
