#include "semitrans/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "semitrans/config.hpp"
#include "semitrans/error.hpp"
#include "semitrans/estimate.hpp"
#include "semitrans/format.hpp"
#include "semitrans/parallel.hpp"
#include "semitrans/rng.hpp"

namespace semitrans::cli {

namespace {

struct RunConfig {
  std::string command;
  std::string config_path;
  std::string data_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::optional<double> tol;
  std::optional<int> max_iter;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::Io, "cannot write '" + path + "'");
  f << content;
  if (!f) fail(ErrorCode::Io, "failed writing '" + path + "'");
}

// path with its extension swapped (or appended when it differs)
std::string sibling(const std::string& path, const std::string& from, const std::string& to) {
  if (path.size() >= from.size() && path.compare(path.size() - from.size(), from.size(), from) == 0)
    return path.substr(0, path.size() - from.size()) + to;
  return path + to;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    j.push_back(row);
  }
  return j;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

struct Inputs {
  Json config;
  CoreModel model = CoreModel::odds_ratio(0.0, 1);
  std::optional<SimConfig> sim;
  std::optional<CensoredSample> sample;
  EstimateOptions estimate;
  Direction direction;
};

Inputs load(const RunConfig& rc, bool need_sample, std::size_t default_n = 0) {
  if (rc.config_path.empty()) fail(ErrorCode::InvalidConfig, "--config is required");
  Inputs in;
  in.config = read_json_file(rc.config_path);
  if (!in.config.is_object()) fail(ErrorCode::InvalidConfig, "config must be a JSON object");
  if (!in.config.contains("model")) fail(ErrorCode::InvalidConfig, "config: missing 'model'");
  in.model = parse_model(in.config.at("model"));
  if (in.config.contains("simulation")) {
    Json sim = in.config.at("simulation");
    if (sim.is_object() && !sim.contains("n") && default_n > 0) sim["n"] = default_n;
    if (rc.seed) sim["seed"] = *rc.seed;
    in.sim = parse_sim_config(sim, in.model);
  }
  in.estimate = parse_estimate_options(in.config.contains("estimate") ? in.config.at("estimate") : Json(),
                                       in.model.dim_theta());
  if (rc.tol) {
    if (!(*rc.tol > 0)) fail(ErrorCode::InvalidConfig, "--tol must be positive");
    in.estimate.tol = *rc.tol;
  }
  if (rc.max_iter) {
    if (*rc.max_iter < 0) fail(ErrorCode::InvalidConfig, "--max-iter must be nonnegative");
    in.estimate.max_iter = *rc.max_iter;
  }
  in.direction = parse_direction(in.config.contains("direction") ? in.config.at("direction") : Json());
  in.direction.validate(in.model);
  if (need_sample) {
    std::vector<CensoredRecord> records;
    if (!rc.data_path.empty()) {
      records = read_csv_file(rc.data_path);
    } else if (in.sim) {
      records = simulate_sample(*in.sim, rc.jobs);
    } else {
      fail(ErrorCode::InvalidConfig, "no data: pass --data or a 'simulation' block");
    }
    in.sample = CensoredSample::from_records(std::move(records));
    if (in.sample->dim_z() != in.model.dim_z())
      fail(ErrorCode::DimensionMismatch, "data has " + std::to_string(in.sample->dim_z()) +
                                             " covariates, model expects " +
                                             std::to_string(in.model.dim_z()));
  }
  return in;
}

Json source_json(const RunConfig& rc, const Inputs& in) {
  Json j;
  j["kind"] = rc.data_path.empty() ? "simulated" : "file";
  j["n"] = in.sample->size();
  j["failures"] = in.sample->num_failures();
  j["event_times"] = in.sample->num_events();
  j["seed"] = rc.data_path.empty() && in.sim ? Json(in.sim->seed) : Json();
  return j;
}

std::vector<double> theta_from(const Inputs& in, const char* key, bool allow_truth) {
  if (in.config.contains(key)) {
    auto v = parse_vector(in.config.at(key), key);
    if (v.size() != in.model.dim_theta())
      fail(ErrorCode::InvalidConfig, std::string(key) + " has wrong dimension");
    return v;
  }
  if (allow_truth && in.sim) return in.sim->theta0;
  return {};
}

Json fit_json(const FitResult& fit, double level) {
  Json j;
  j["method"] = method_name(fit.method);
  j["theta_hat"] = fit.theta_hat;
  j["se"] = fit.se;
  j["cov"] = matrix_json(fit.cov_theta);
  j["iterations"] = fit.iterations;
  j["score"] = fit.score;
  j["score_norm"] = fit.score_norm_at_solution;
  Json d = Json::object();
  for (const auto& [k, v] : fit.diagnostics) d[k] = v;
  j["diagnostics"] = d;
  if (fit.se.size() == fit.theta_hat.size() && !fit.se.empty()) {
    auto ci = confidence_intervals(fit, level);
    Json lo = Json::array(), hi = Json::array();
    for (const auto& c : ci) {
      lo.push_back(c.lo);
      hi.push_back(c.hi);
    }
    j["confidence_interval"] = {{"level", level}, {"lower", lo}, {"upper", hi}};
  }
  return j;
}

int cmd_simulate(const RunConfig& rc, std::ostream& out) {
  auto in = load(rc, false);
  if (!in.sim) fail(ErrorCode::InvalidConfig, "config: missing 'simulation'");
  if (rc.out_path.empty()) fail(ErrorCode::InvalidConfig, "--out is required");
  auto records = simulate_sample(*in.sim, rc.jobs);
  std::ostringstream csv;
  write_csv(csv, records);
  std::size_t failures = 0;
  double tau = 0;
  for (const auto& r : records) {
    failures += static_cast<std::size_t>(r.delta);
    tau = std::max(tau, r.x);
  }
  Json meta;
  meta["rng"] = CounterRng::name;
  meta["seed"] = in.sim->seed;
  meta["n"] = records.size();
  meta["failures"] = failures;
  meta["tau0"] = tau;
  if (in.sim->censoring.kind == CensoringSpec::Kind::IndependentWithAtom)
    meta["censoring_tau0"] = in.sim->censoring.tau0;
  meta["theta0"] = in.sim->theta0;
  meta["gamma0"] = transform_to_json(in.sim->gamma0);
  meta["config"] = sim_config_to_json(*in.sim);
  write_file(rc.out_path, csv.str());
  write_file(sibling(rc.out_path, ".csv", ".json"), dump_json(meta));
  out << "wrote " << records.size() << " records to " << rc.out_path << "\n";
  return kExitOk;
}

int cmd_estimate(const RunConfig& rc, std::ostream& out, bool onestep) {
  auto in = load(rc, true);
  if (rc.out_path.empty()) fail(ErrorCode::InvalidConfig, "--out is required");
  double level = in.config.contains("level") ? in.config.at("level").get<double>() : 0.95;
  Json doc;
  doc["config_echo"] = in.config;
  doc["data"] = source_json(rc, in);
  doc["seed"] = in.sim ? Json(in.sim->seed) : Json();
  int code = kExitOk;
  try {
    FitResult fit;
    if (onestep) {
      auto th = theta_from(in, "theta0_hat", false);
      if (th.empty()) fail(ErrorCode::InvalidConfig, "config: missing 'theta0_hat'");
      fit = one_step(*in.sample, in.model, in.direction, th, in.estimate);
    } else {
      auto th = theta_from(in, "theta_init", false);
      if (th.empty()) th.assign(in.model.dim_theta(), 0.0);
      fit = z_estimate(*in.sample, in.model, in.direction, th, in.estimate);
    }
    Json f = fit_json(fit, level);
    for (auto it = f.begin(); it != f.end(); ++it) doc[it.key()] = it.value();
    doc["status"] = "ok";
  } catch (const EstimationError& e) {
    if (!is_numerical(e.code())) throw;
    Json f = fit_json(e.last(), level);
    for (auto it = f.begin(); it != f.end(); ++it) doc[it.key()] = it.value();
    doc["status"] = error_code_name(e.code());
    doc["error"] = e.what();
    code = kExitNumerical;
  } catch (const Error& e) {
    if (!is_numerical(e.code())) throw;
    doc["status"] = error_code_name(e.code());
    doc["error"] = e.what();
    code = kExitNumerical;
  }
  write_file(rc.out_path, dump_json(doc));
  out << "wrote " << rc.out_path << " (status " << doc["status"].get<std::string>() << ")\n";
  return code;
}

StepFunction evaluation_gamma(const Inputs& in, std::span<const double> theta,
                              const std::string& choice, double& residual) {
  const auto& s = *in.sample;
  if (choice == "true") {
    if (!in.sim) fail(ErrorCode::InvalidConfig, "gamma 'true' needs a simulation block");
    std::vector<double> v(s.num_events());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = in.sim->gamma0.value(s.event_times()[k]);
    residual = 0;
    return StepFunction(s.grid(), std::move(v), 0.0, true);
  }
  if (choice != "fitted") fail(ErrorCode::InvalidConfig, "gamma must be 'fitted' or 'true'");
  auto fit = fit_gamma(s, in.model, theta, in.estimate.gamma);
  residual = fit.residual;
  return fit.gamma;
}

Json kappa_tail_json(const CensoredSample& s, const FredholmSystem& sys, double q) {
  std::vector<double> xs;
  xs.reserve(s.size());
  for (const auto& r : s.records()) xs.push_back(r.x);
  std::size_t idx = std::min(xs.size() - 1, static_cast<std::size_t>(std::ceil(q * xs.size())) - 1);
  double tq = xs[idx];
  double kq = sys.kappa_fn()(tq);
  Json j;
  j["quantile"] = q;
  j["t_quantile"] = tq;
  j["kappa_at_quantile"] = kq;
  j["kappa_max"] = sys.kappa;
  j["tail_fraction"] = sys.kappa > 0 ? (sys.kappa - kq) / sys.kappa : 0.0;
  return j;
}

int cmd_bound(const RunConfig& rc, std::ostream& out) {
  auto in = load(rc, true, 100000);
  if (rc.out_path.empty()) fail(ErrorCode::InvalidConfig, "--out is required");
  auto theta = theta_from(in, "theta", true);
  if (theta.empty()) fail(ErrorCode::InvalidConfig, "config: missing 'theta'");
  std::string choice = in.config.contains("gamma") ? in.config.at("gamma").get<std::string>() : "fitted";
  const auto& s = *in.sample;
  double gres = 0;
  Json doc;
  doc["config_echo"] = in.config;
  doc["data"] = source_json(rc, in);
  int code = kExitOk;
  try {
    auto gamma = evaluation_gamma(in, theta, choice, gres);
    ScoreOptions so;
    so.direction = Direction::efficient();
    so.phi_tol = in.estimate.phi_tol;
    auto res = score_at(s, in.model, theta, gamma, so);
    const auto& ctx = res.context;
    const auto& o = res.output;
    double cond = condition_number(o.sigma0);
    bool finite = cond <= kMaxCondition;
    const auto P = o.sigma0.rows();
    Eigen::MatrixXd bound = finite ? Eigen::MatrixXd(o.sigma0.inverse())
                                   : Eigen::MatrixXd::Constant(P, P, std::numeric_limits<double>::infinity());
    doc["theta"] = theta;
    doc["gamma"] = choice;
    doc["gamma_residual"] = gres;
    doc["sigma0"] = matrix_json(o.sigma0);
    doc["sigma1"] = matrix_json(o.sigma1);
    doc["sigma2"] = matrix_json(o.sigma2);
    doc["sigma0_condition"] = cond;
    doc["information_bound"] = matrix_json(bound);
    doc["bound_finite"] = finite;
    doc["kappa"] = ctx.system.kappa;
    doc["kappa_tail"] = kappa_tail_json(s, ctx.system, 0.95);
    doc["psi0_total"] = ctx.system.psi0_total;
    doc["kernel_l2_surrogate"] = kernel_l2_surrogate(ctx.system);
    doc["fredholm_residual"] = ctx.phi.residual;
    doc["status"] = "ok";
    std::ostringstream csv;
    csv << "t,gamma,C,B,logP0,c,b,kappa,psi1_from0,psi0_to_end\n";
    const auto& F = ctx.functionals;
    double C = 0, B = 0;
    for (std::size_t k = 0; k < F.size(); ++k) {
      C += F.dC[k];
      B += F.dB[k];
      csv << format_double(s.event_times()[k]) << ',' << format_double(ctx.gamma.at(k)) << ','
          << format_double(C) << ',' << format_double(B) << ',' << format_double(F.log_p0[k]) << ','
          << format_double(ctx.system.c[k]) << ',' << format_double(ctx.system.b[k]) << ','
          << format_double(ctx.system.kappa_curve[k]) << ','
          << format_double(ctx.system.psi1_from0[k]) << ','
          << format_double(ctx.system.psi0_to_end[k]) << '\n';
    }
    write_file(sibling(rc.out_path, ".json", ".csv"), csv.str());
  } catch (const Error& e) {
    if (!is_numerical(e.code())) throw;
    doc["status"] = error_code_name(e.code());
    doc["error"] = e.what();
    code = kExitNumerical;
  }
  write_file(rc.out_path, dump_json(doc));
  out << "wrote " << rc.out_path << "\n";
  return code;
}

Json orthogonality_json(const RunConfig& rc, const Inputs& in, const Json& spec) {
  if (!in.sim) fail(ErrorCode::InvalidConfig, "orthogonality needs a simulation block (true parameters)");
  std::size_t reps = spec.contains("replicates") ? spec.at("replicates").get<std::size_t>() : 1;
  if (reps == 0) fail(ErrorCode::InvalidConfig, "orthogonality.replicates must be >= 1");
  if (!spec.contains("g") || !spec.at("g").is_array())
    fail(ErrorCode::InvalidConfig, "orthogonality.g must be an array");
  std::vector<double> xs;
  for (const auto& r : in.sample->records()) xs.push_back(r.x);
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2), xs.end());
  double median = xs[xs.size() / 2];
  std::vector<NuisanceDirection> gs;
  for (const auto& g : spec.at("g")) gs.push_back(parse_nuisance(g, median));
  std::vector<OrthogonalityReport> parts(reps);
  parallel_for(reps, rc.jobs, [&](std::size_t r) {
    SimConfig c = *in.sim;
    c.seed = in.sim->seed + r;
    auto sample = r == 0 && rc.data_path.empty() ? *in.sample
                                                 : CensoredSample::from_records(simulate_sample(c));
    parts[r] = nuisance_orthogonality_check(sample, in.model, in.sim->theta0, in.sim->gamma0, gs);
  });
  OrthogonalityReport total;
  for (const auto& p : parts) total.merge(p);
  Json j;
  j["replicates"] = reps;
  j["subjects"] = total.count;
  j["median_cut"] = median;
  Json es = Json::array();
  for (const auto& e : total.entries)
    es.push_back({{"g", e.label}, {"component", e.component}, {"covariance", e.mean()},
                  {"se", e.se()}, {"z", e.z()}});
  j["entries"] = es;
  Json um = Json::array();
  for (std::size_t c = 0; c < total.u_sum.size(); ++c)
    um.push_back(total.u_sum[c] / static_cast<double>(total.count));
  j["score_mean"] = um;
  j["pass_3se"] = total.pass(3.0);
  return j;
}

int cmd_diagnose(const RunConfig& rc, std::ostream& out) {
  auto in = load(rc, true);
  if (rc.out_path.empty()) fail(ErrorCode::InvalidConfig, "--out is required");
  auto theta = theta_from(in, "theta", true);
  if (theta.empty()) fail(ErrorCode::InvalidConfig, "config: missing 'theta'");
  std::string choice = in.config.contains("gamma") ? in.config.at("gamma").get<std::string>() : "fitted";
  const auto& s = *in.sample;
  Json doc;
  doc["config_echo"] = in.config;
  doc["data"] = source_json(rc, in);
  int code = kExitOk;
  try {
    double gres = 0;
    auto gamma = evaluation_gamma(in, theta, choice, gres);
    ScoreOptions so;
    so.direction = in.direction;
    so.phi_tol = in.estimate.phi_tol;
    auto res = score_at(s, in.model, theta, gamma, so);
    const auto& ctx = res.context;
    const auto& o = res.output;
    const auto& sys = ctx.system;
    doc["theta"] = theta;
    doc["gamma"] = choice;
    doc["u"] = vector_json(o.u);
    doc["sigma1"] = matrix_json(o.sigma1);
    doc["sigma2"] = matrix_json(o.sigma2);
    doc["sigma0"] = matrix_json(o.sigma0);
    doc["v"] = matrix_json(o.v);
    doc["v_condition"] = o.v_condition;
    doc["sigma0_condition"] = condition_number(o.sigma0);
    doc["kappa"] = sys.kappa;
    doc["psi0_total"] = sys.psi0_total;
    double ident = 1.0;
    for (std::size_t k = 0; k < sys.size(); ++k) ident += sys.psi1_from0[k] * sys.db[k];
    doc["psi_identity_error"] = std::abs(ident - sys.psi0_total);
    doc["fredholm_residual"] = ctx.phi.residual;
    doc["fredholm_route"] = ctx.phi.route;
    doc["gamma_residual"] = ctx.gamma_residual;
    doc["kernel_l2_surrogate"] = kernel_l2_surrogate(sys);
    if (sys.size() <= 2000) doc["min_operator_eigenvalue"] = operator_eigenvalues(sys).minCoeff();
    Box zb{std::vector<double>(s.dim_z()), std::vector<double>(s.dim_z())};
    for (std::size_t j = 0; j < s.dim_z(); ++j) {
      zb.lo[j] = zb.hi[j] = s.z(0)[j];
      for (std::size_t i = 0; i < s.size(); ++i) {
        zb.lo[j] = std::min(zb.lo[j], s.z(i)[j]);
        zb.hi[j] = std::max(zb.hi[j], s.z(i)[j]);
      }
    }
    Box tb = in.estimate.box.dim() ? in.estimate.box : Box::cube(in.model.dim_theta(), 1.0);
    std::vector<double> xg;
    std::size_t stride = std::max<std::size_t>(1, s.num_events() / 200);
    for (std::size_t k = 0; k < s.num_events(); k += stride) xg.push_back(ctx.gamma.at(k));
    auto reg = check_regularity(in.model, tb, zb, xg);
    doc["regularity"] = {{"pass", reg.pass}, {"message", reg.message},
                         {"worst_quantity", reg.worst_quantity}, {"worst_value", reg.worst_value},
                         {"worst_x", reg.worst_x}, {"worst_theta", reg.worst_theta},
                         {"worst_z", reg.worst_z}, {"alpha0_min", reg.alpha0_min},
                         {"alpha0_max", reg.alpha0_max}};
    if (in.config.contains("orthogonality"))
      doc["orthogonality"] = orthogonality_json(rc, in, in.config.at("orthogonality"));
    doc["status"] = "ok";
    std::ostringstream csv;
    csv << "t,gamma,gamma_check,C,B,P0\n";
    const auto& F = ctx.functionals;
    double C = 0, B = 0;
    for (std::size_t k = 0; k < F.size(); ++k) {
      C += F.dC[k];
      B += F.dB[k];
      csv << format_double(s.event_times()[k]) << ',' << format_double(ctx.gamma.at(k)) << ','
          << format_double(ctx.gamma_check.at(k)) << ',' << format_double(C) << ','
          << format_double(B) << ',' << format_double(std::exp(F.log_p0[k])) << '\n';
    }
    write_file(sibling(rc.out_path, ".json", ".csv"), csv.str());
  } catch (const Error& e) {
    if (!is_numerical(e.code())) throw;
    doc["status"] = error_code_name(e.code());
    doc["error"] = e.what();
    code = kExitNumerical;
  }
  write_file(rc.out_path, dump_json(doc));
  out << "wrote " << rc.out_path << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semiparametric transformation model estimation for right-censored data"};
  app.require_subcommand(1);
  RunConfig rc;
  auto add = [&](CLI::App* sub) {
    sub->add_option("--config", rc.config_path, "JSON configuration");
    sub->add_option("--data", rc.data_path, "CSV data x,delta,z1..zd");
    sub->add_option("--out", rc.out_path, "output path");
    sub->add_option("--seed", rc.seed, "simulation seed override");
    sub->add_option("--jobs", rc.jobs, "threads for replicate-level work")->check(CLI::Range(1u, 1024u));
    sub->add_option("--tol", rc.tol, "score root tolerance");
    sub->add_option("--max-iter", rc.max_iter, "maximum Newton iterations");
  };
  add(app.add_subcommand("simulate", "simulate a censored sample"));
  add(app.add_subcommand("fit", "Z-estimation from the efficient score"));
  add(app.add_subcommand("onestep", "one-step correction of a preliminary estimate"));
  add(app.add_subcommand("bound", "information bound and kappa report"));
  add(app.add_subcommand("diagnose", "score, Fredholm and orthogonality diagnostics"));
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  rc.command = app.get_subcommands().front()->get_name();
  try {
    if (rc.command == "simulate") return cmd_simulate(rc, out);
    if (rc.command == "fit") return cmd_estimate(rc, out, false);
    if (rc.command == "onestep") return cmd_estimate(rc, out, true);
    if (rc.command == "bound") return cmd_bound(rc, out);
    if (rc.command == "diagnose") return cmd_diagnose(rc, out);
  } catch (const Error& e) {
    err << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return is_numerical(e.code()) ? kExitNumerical : kExitConfig;
  } catch (const Json::exception& e) {
    err << "error [invalid_config]: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace semitrans::cli
