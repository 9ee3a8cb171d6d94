#include "carnot/cli/commands.hpp"

#include "carnot/simd/batch_support.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

namespace carnot::cli {

namespace {

Report to_array(const Vec& v) {
  Report a = Report::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Report basis_array(const CasimirBasis& basis) {
  Report a = Report::array();
  for (const Vec& v : basis.vectors) a.push_back(to_array(v));
  return a;
}

Report skew_object(const SkewMatrix& m) {
  const AlgebraSpec spec(m.k());
  const Vec upper = m.upper();
  Report o = Report::object();
  for (int f = 0; f < spec.pair_count(); ++f) {
    const auto [i, j] = spec.pair_at(f);
    o[std::to_string(i + 1) + "," + std::to_string(j + 1)] = upper[f];
  }
  return o;
}

Report string_array(const std::vector<std::string>& items) {
  Report a = Report::array();
  for (const auto& s : items) a.push_back(s);
  return a;
}

const ControlBody& require_body(const RunConfig& cfg) {
  if (!cfg.body) throw ConfigError("body", "required by this command");
  const ValidationReport report = validate(*cfg.body);
  if (!report.ok()) {
    std::string msg;
    for (const auto& v : report.violations) msg += (msg.empty() ? "" : "; ") + v;
    throw ConfigError("body", msg);
  }
  return *cfg.body;
}

std::vector<Vec> initial_covectors(const RunConfig& cfg) {
  if (!cfg.sweep.empty()) return cfg.sweep;
  if (!cfg.h0) throw ConfigError("h0", "required by this command (or give \"sweep\")");
  return {*cfg.h0};
}

// Runs f(i) for i in [0, n) on a worker pool; results are stored by index.
template <class Result, class F>
std::vector<Result> parallel_map(std::size_t n, int threads, F f) {
  std::vector<Result> results(n);
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) results[i] = f(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            results[i] = f(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

FlowOptions flow_options(const RunConfig& cfg) {
  FlowOptions opts;
  opts.rtol = cfg.tolerances.rtol;
  opts.atol = cfg.tolerances.atol;
  opts.max_drift = cfg.tolerances.max_drift;
  opts.samples = cfg.samples;
  opts.project_to_level = cfg.project_to_level;
  opts.kernel.tau = cfg.tolerances.kernel_tau;
  return opts;
}

ClassifyOptions classify_options(const RunConfig& cfg) {
  ClassifyOptions opts;
  opts.parallel_tol = cfg.tolerances.parallel_tol;
  opts.max_return_residual = cfg.tolerances.max_return_residual;
  opts.max_drift = cfg.tolerances.max_drift;
  opts.kernel.tau = cfg.tolerances.kernel_tau;
  opts.period.capture_radius = cfg.tolerances.capture_radius;
  opts.period.event_tol = cfg.tolerances.event_tol;
  opts.period.t_max = cfg.tolerances.t_max;
  opts.period.rtol = cfg.tolerances.rtol;
  opts.period.atol = cfg.tolerances.atol;
  return opts;
}

Vec checked_normalize(const ControlBody& body, const Vec& h0, const std::string& field) {
  try {
    return normalize_to_level(body, h0);
  } catch (const AbnormalCovectorError&) {
    throw ConfigError(field, "h0 = 0 is the abnormal case and is excluded");
  }
}

std::filesystem::path output_dir(const CommandContext& ctx) {
  std::filesystem::path dir = ctx.out_dir.value_or(std::filesystem::path("."));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int k) {
  const AlgebraSpec spec(k);
  out << "t";
  for (int i = 1; i <= k; ++i) out << ",h_" << i;
  for (int i = 1; i <= k; ++i) out << ",u_" << i;
  for (int i = 1; i <= k; ++i) out << ",x_" << i;
  for (int f = 0; f < spec.pair_count(); ++f) {
    const auto [i, j] = spec.pair_at(f);
    out << ",x_" << i + 1 << j + 1;
  }
  out << ",H_drift";
  for (int a = 1; a <= traj.casimirs.dimension(); ++a) out << ",I_" << a << "_drift";
  out << '\n';

  const bool lifted = traj.lift.size() == traj.times.size();
  const Vec zeros = Vec::Zero(k + spec.pair_count());
  for (std::size_t r = 0; r < traj.times.size(); ++r) {
    out << format_double(traj.times[r]);
    for (int i = 0; i < k; ++i) out << ',' << format_double(traj.states[r][i]);
    for (int i = 0; i < k; ++i) out << ',' << format_double(traj.controls[r][i]);
    const Vec& q = lifted ? traj.lift[r] : zeros;
    for (Eigen::Index i = 0; i < q.size(); ++i) out << ',' << format_double(q[i]);
    out << ',' << format_double(traj.hamiltonian_drift[r]);
    const Vec& cd = traj.casimir_drift[r];
    for (Eigen::Index a = 0; a < cd.size(); ++a) out << ',' << format_double(cd[a]);
    out << '\n';
  }
}

CommandResult cmd_analyze(const RunConfig& cfg, const CommandContext&) {
  const AlgebraSpec spec(cfg.k);
  KernelOptions kopts;
  kopts.tau = cfg.tolerances.kernel_tau;
  const CasimirBasis basis = kernel_basis(cfg.m, kopts);
  const BracketTable table = bracket_table(spec);

  Report r;
  r["command"] = "analyze";
  r["k"] = cfg.k;
  r["dim_L"] = spec.dimension();
  r["nonzero_brackets"] = table.nonzero_count();
  r["M"] = skew_object(cfg.m);
  r["singular_values"] = to_array(basis.singular_values);
  r["kernel_threshold"] = basis.threshold;
  r["kernel_dim"] = basis.dimension();
  r["casimir_basis"] = basis_array(basis);
  if (cfg.h0) {
    Report levels = Report::array();
    for (const Vec& a : basis.vectors) levels.push_back(casimir_value(a, *cfg.h0));
    r["casimir_levels"] = levels;
  }

  if (cfg.k == 3) {
    const Vec h = cfg.h0.value_or(Vec::Zero(3));
    const LeafClass leaf = leaf_classify(cfg.m, h, kopts);
    if (const auto* two = std::get_if<TwoDimLeaf>(&leaf)) {
      r["leaf"] = "two_dim";
      r["casimir"] = to_array(two->casimir);
      r["casimir_level"] = two->level;
      r["pair_levels"] = to_array(two->pair_levels);
    } else {
      r["leaf"] = "zero_dim";
      r["point"] = to_array(std::get<ZeroDimLeaf>(leaf).point);
    }
  } else {
    r["leaf"] = "unclassified";
  }
  if (cfg.body) {
    const ValidationReport v = validate(*cfg.body);
    r["body_validation"] = {{"ok", v.ok()}, {"violations", string_array(v.violations)}};
  }
  r["warnings"] = string_array(basis.warnings);
  for (const auto& w : basis.warnings) spdlog::warn("{}", w);
  return {kSuccess, r};
}

CommandResult cmd_integrate(const RunConfig& cfg, const CommandContext& ctx) {
  const auto started = std::chrono::steady_clock::now();
  const ControlBody& body = require_body(cfg);
  if (!cfg.horizon) throw ConfigError("horizon", "required by integrate");
  const std::vector<Vec> starts = initial_covectors(cfg);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    checked_normalize(body, starts[i], cfg.sweep.empty() ? "h0" : "sweep[" + std::to_string(i) + "]");
  }
  const FlowOptions opts = flow_options(cfg);
  const std::filesystem::path dir = output_dir(ctx);
  const bool sweep = !cfg.sweep.empty();

  struct RunOutcome {
    Report summary;
    bool failed = false;
  };
  auto run_one = [&](std::size_t idx) {
    const Vec& h0 = starts[idx];
    char name[64];
    if (sweep) {
      std::snprintf(name, sizeof name, "trajectory_%03zu.csv", idx);
    } else {
      std::snprintf(name, sizeof name, "trajectory.csv");
    }
    Report s;
    s["h0"] = to_array(h0);
    s["h0_normalized"] = to_array(normalize_to_level(body, h0));
    s["csv"] = name;
    Trajectory traj;
    bool failed = false;
    try {
      LiftResult lift = integrate_horizontal(h0, cfg.m, body, *cfg.horizon, opts);
      traj = std::move(lift.vertical);
      s["status"] = "ok";
      s["endpoint"] = {{"x", to_array(lift.endpoint.x)}, {"y", to_array(lift.endpoint.y)}};
    } catch (const DriftExceeded& e) {
      traj = e.partial();
      failed = true;
      s["status"] = "drift_exceeded";
      s["failure_time"] = e.time();
      s["message"] = e.what();
      spdlog::error("{}", e.what());
    }
    s["rows"] = traj.times.size();
    s["max_H_drift"] = traj.max_hamiltonian_drift;
    s["max_casimir_drift"] = traj.max_casimir_drift;
    s["casimir_basis"] = basis_array(traj.casimirs);
    s["accepted_steps"] = traj.accepted_steps;
    s["rejected_steps"] = traj.rejected_steps;
    std::ofstream csv(dir / name);
    if (!csv) throw Error("cannot write " + (dir / name).string());
    write_trajectory_csv(csv, traj, cfg.k);
    spdlog::info("integrate: wrote {} rows to {}", traj.times.size(), (dir / name).string());
    return RunOutcome{s, failed};
  };
  const auto outcomes = parallel_map<RunOutcome>(starts.size(), cfg.threads, run_one);

  Report r;
  r["command"] = "integrate";
  r["k"] = cfg.k;
  r["body"] = body.type_name();
  r["M"] = skew_object(cfg.m);
  r["horizon"] = *cfg.horizon;
  r["samples"] = cfg.samples;
  r["project_to_level"] = cfg.project_to_level;
  bool any_failed = false;
  if (sweep) {
    Report runs = Report::array();
    for (const auto& o : outcomes) {
      runs.push_back(o.summary);
      any_failed = any_failed || o.failed;
    }
    r["runs"] = runs;
  } else {
    for (const auto& [key, value] : outcomes.front().summary.items()) r[key] = value;
    any_failed = outcomes.front().failed;
  }
  r["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {any_failed ? kNumericalFailure : kSuccess, r};
}

CommandResult cmd_classify(const RunConfig& cfg, const CommandContext&) {
  if (cfg.k != 3) {
    throw ConfigError("k", "classification is available only for k = 3 (constant/periodic "
                           "dichotomy); got k = " + std::to_string(cfg.k));
  }
  const ControlBody& body = require_body(cfg);
  const std::vector<Vec> starts = initial_covectors(cfg);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    checked_normalize(body, starts[i], cfg.sweep.empty() ? "h0" : "sweep[" + std::to_string(i) + "]");
  }
  const ClassifyOptions opts = classify_options(cfg);

  auto run_one = [&](std::size_t idx) {
    const Classification c = classify_k3(starts[idx], cfg.m, body, opts);
    Report s;
    std::visit(
        [&](const auto& cls) {
          using T = std::decay_t<decltype(cls)>;
          if constexpr (std::is_same_v<T, Constant>) {
            s["class"] = "constant";
          } else if constexpr (std::is_same_v<T, Periodic>) {
            s["class"] = "periodic";
            s["period"] = cls.period;
            s["return_residual"] = cls.return_residual;
          } else {
            s["class"] = "unclassified";
            s["reason"] = cls.reason;
          }
        },
        c.extremal_class);
    s["parallel_test_residual"] = c.parallel_residual;
    s["casimir"] = to_array(c.casimir);
    s["h0_normalized"] = to_array(c.h0);
    if (c.t_max > 0.0) s["t_max"] = c.t_max;
    s["warnings"] = string_array(c.warnings);
    for (const auto& w : c.warnings) spdlog::warn("{}", w);
    return s;
  };
  const auto results = parallel_map<Report>(starts.size(), cfg.threads, run_one);

  Report r;
  r["command"] = "classify";
  r["body"] = body.type_name();
  r["M"] = skew_object(cfg.m);
  bool unclassified = false;
  for (const auto& s : results) unclassified = unclassified || s["class"] == "unclassified";
  if (cfg.sweep.empty()) {
    for (const auto& [key, value] : results.front().items()) r[key] = value;
  } else {
    Report runs = Report::array();
    for (const auto& s : results) runs.push_back(s);
    r["runs"] = runs;
  }
  return {unclassified ? kNumericalFailure : kSuccess, r};
}

CommandResult cmd_gradcheck(const RunConfig& cfg, const CommandContext&) {
  Report r;
  r["command"] = "gradcheck";
  if (!cfg.body) throw ConfigError("body", "required by gradcheck");
  const ControlBody& body = *cfg.body;
  r["body"] = body.type_name();
  r["seed"] = cfg.seed;
  const ValidationReport v = validate(body);
  r["validation"] = {{"ok", v.ok()}, {"violations", string_array(v.violations)}};
  if (!v.ok()) {
    for (const auto& msg : v.violations) spdlog::error("body validation: {}", msg);
    return {kConfigError, r};
  }

  // Random directions with norms log-uniform in [0.1, 10].
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> exponent(-1.0, 1.0);
  const int n = cfg.gradcheck_points;
  Mat points(n, cfg.k);
  for (int p = 0; p < n; ++p) {
    Vec dir(cfg.k);
    do {
      for (int i = 0; i < cfg.k; ++i) dir[i] = normal(rng);
    } while (dir.norm() < 1e-6);
    points.row(p) = (std::pow(10.0, exponent(rng)) / dir.norm()) * dir.transpose();
  }

  Vec values;
  Mat analytic;
  simd::support_batch(body, points, values, &analytic);
  const Mat numeric = simd::finite_difference_gradients(body, points, cfg.tolerances.fd_step);

  double worst = 0.0;
  double total = 0.0;
  int worst_index = 0;
  for (int p = 0; p < n; ++p) {
    const double err = (numeric.row(p) - analytic.row(p)).norm() / analytic.row(p).norm();
    total += err;
    if (err > worst) {
      worst = err;
      worst_index = p;
    }
  }
  const bool pass = worst <= cfg.tolerances.gradcheck_tol;
  r["points"] = n;
  r["isa"] = std::string(simd::isa_name(simd::active_isa()));
  r["max_relative_error"] = worst;
  r["mean_relative_error"] = total / n;
  r["worst_point"] = to_array(points.row(worst_index).transpose());
  r["tolerance"] = cfg.tolerances.gradcheck_tol;
  r["pass"] = pass;
  return {pass ? kSuccess : kNumericalFailure, r};
}

int run_command(const std::string& command, const std::filesystem::path& config_path,
                const CommandContext& ctx) {
  std::ostream& err = ctx.err ? *ctx.err : std::cerr;
  CommandResult result;
  try {
    const RunConfig cfg = load_config(config_path);
    if (command == "analyze") {
      result = cmd_analyze(cfg, ctx);
    } else if (command == "integrate") {
      result = cmd_integrate(cfg, ctx);
    } else if (command == "classify") {
      result = cmd_classify(cfg, ctx);
    } else if (command == "gradcheck") {
      result = cmd_gradcheck(cfg, ctx);
    } else {
      err << "unknown command '" << command << "'\n";
      return kConfigError;
    }
  } catch (const InputError& e) {
    err << e.what() << '\n';
    return kConfigError;
  } catch (const UnsupportedRankError& e) {
    err << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalFailure& e) {
    err << "numerical failure at t = " << e.time() << ": " << e.what() << '\n';
    return kNumericalFailure;
  }

  if (ctx.out) write_json(*ctx.out, result.report);
  if (ctx.out_dir) {
    std::filesystem::create_directories(*ctx.out_dir);
    std::ofstream file(*ctx.out_dir / (command + ".json"));
    write_json(file, result.report);
  }
  return result.exit_code;
}

void configure_logging() {
  auto logger = spdlog::stderr_logger_mt("carnot");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("CARNOT_LOG");
  const std::string level = env ? env : "off";
  if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else {
    spdlog::set_level(spdlog::level::off);
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Extremal flows, Casimirs and horizontal lifts on step-2 Carnot groups"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"analyze", "Casimir basis, kernel of M and (k = 3) symplectic leaf"},
      {"integrate", "Integrate the extremal and its horizontal lift; write CSV"},
      {"classify", "Constant/periodic classification for k = 3"},
      {"gradcheck", "Compare analytic and finite-difference support gradients"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--out", out, "Output directory for reports and CSV files");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kConfigError;
  }

  configure_logging();
  spdlog::debug("simd kernels: {}", simd::isa_name(simd::active_isa()));
  CommandContext ctx;
  if (!out.empty()) ctx.out_dir = out;
  ctx.out = &std::cout;
  ctx.err = &std::cerr;
  return run_command(app.get_subcommands().front()->get_name(), config, ctx);
}

}  // namespace carnot::cli
