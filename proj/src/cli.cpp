#include "scalekit/cli.hpp"

#include <unistd.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scalekit/alloc.hpp"
#include "scalekit/artifact.hpp"
#include "scalekit/errors.hpp"
#include "scalekit/lawfit.hpp"
#include "scalekit/linkage.hpp"
#include "scalekit/presets.hpp"
#include "scalekit/rng.hpp"
#include "scalekit/runstore.hpp"
#include "scalekit/scalecurves.hpp"
#include "scalekit/synthgen.hpp"

namespace scalekit::cli {
namespace {

using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";

struct UsageError {
  std::string message;
};

std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    double v = 0.0;
    const char* begin = item.data();
    if (*begin == '+') ++begin;
    const auto res = std::from_chars(begin, item.data() + item.size(), v);
    if (res.ec != std::errc{} || res.ptr != item.data() + item.size()) {
      throw UsageError{std::string(flag) + ": '" + item + "' is not a number"};
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError{std::string(flag) + ": empty list"};
  return out;
}

// --- optional JSON config file -------------------------------------------
//
// A config file mirrors the active subcommand's long flags:
//   {"huber-delta": 0.02, "threads": 4, "sizes": [2e7, 8.5e7]}
// Its entries are expanded into tokens inserted right after the subcommand
// name, so flags given on the command line win (options take the last
// occurrence). Unknown keys surface as ordinary unknown-flag errors.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  size_t cfg_at = 0;
  std::string path;
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError{"--config needs a file path"};
      cfg_at = i;
      path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      cfg_at = i;
      path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (path.empty()) return args;
  if (cfg_at < 2) throw UsageError{"--config must follow a subcommand"};

  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::parse_error& e) {
    throw ValidationError("parse error in " + path + ": " + e.what());
  }
  if (!cfg.is_object()) {
    throw ValidationError("config file must hold a JSON object: " + path);
  }

  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back("--" + key);
      continue;
    }
    tokens.push_back("--" + key);
    if (value.is_string()) {
      tokens.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      tokens.push_back(fmt(value.get<double>()));
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) {
        if (!item.is_number()) {
          throw ValidationError("config key '" + key +
                                "': arrays must hold numbers");
        }
        joined += (joined.empty() ? "" : ",") + fmt(item.get<double>());
      }
      tokens.push_back(joined);
    } else {
      throw ValidationError("config key '" + key + "' has unsupported type");
    }
  }
  args.insert(args.begin() + 2, tokens.begin(), tokens.end());
  return args;
}

// --- shared pieces ---------------------------------------------------------

ChinchillaParams base_of(const LawArtifact& art, const std::string& path) {
  if (const auto* single = std::get_if<ChinchillaParams>(&art.payload)) {
    return *single;
  }
  if (const auto* multi = std::get_if<MultiEpochParams>(&art.payload)) {
    return multi->base;
  }
  throw ValidationError(path + ": expected a single_epoch or multi_epoch law, "
                                "got " +
                        art.type());
}

PowerLawFit power_law_of(const LawArtifact& art, const std::string& path) {
  if (const auto* fit = std::get_if<PowerLawFit>(&art.payload)) return *fit;
  throw ValidationError(path + ": expected a power_law artifact, got " +
                        art.type());
}

// Checkpoints joined to their runs become extra observations: a checkpoint
// at compute C of run r is a run of d = C/(6N) tokens with the same corpus.
RunSet augment_with_checkpoints(RunSet runs, const CurveSet& curves) {
  std::unordered_map<std::string, const RunRecord*> by_id;
  for (const auto& r : runs.records) by_id[r.run_id] = &r;
  std::vector<RunRecord> extra;
  std::unordered_map<std::string, int> counter;
  for (const auto& p : curves.points) {
    const auto it = by_id.find(p.run_id);
    if (it == by_id.end()) {
      throw ValidationError("curve point references unknown run_id '" +
                            p.run_id + "'");
    }
    const RunRecord& src = *it->second;
    RunRecord r;
    r.run_id = p.run_id + "#" + std::to_string(counter[p.run_id]++);
    r.modality = src.modality;
    r.n_params = src.n_params;
    r.d_tokens = p.compute / (6.0 * src.n_params);
    r.u_tokens = std::min(r.d_tokens, src.u_tokens);
    r.test_loss = p.loss;
    r.metrics = p.metrics;
    extra.push_back(std::move(r));
  }
  runs.records.insert(runs.records.end(), extra.begin(), extra.end());
  validate_runs(runs);
  return runs;
}

json opt_meta(const FitConfig& cfg) {
  return json{{"memory_pairs", cfg.opt.memory_pairs},
              {"grad_tol", cfg.opt.grad_tol},
              {"max_iters", cfg.opt.max_iters},
              {"wolfe_c1", cfg.opt.line_search.c1},
              {"wolfe_c2", cfg.opt.line_search.c2}};
}

// --- subcommand argument bags ----------------------------------------------

struct FitArgs {
  std::string runs_path, curves_path, stage, base_path, out_path;
  double huber_delta = 0.03;
  int threads = 1;
  std::string grid_alpha, grid_beta, grid_log_a, grid_log_b, grid_log_e,
      grid_rho;
  double grad_tol = 1e-8;
  int max_iters = 1000;
  int memory_pairs = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
};

struct PredictArgs {
  std::string law_path;
  double n = 0.0, d = 0.0;
  std::optional<double> u_d;
};

struct AllocateArgs {
  std::string law_path;
  double compute = 0.0;
};

struct InvertArgs {
  std::string law_path;
  double target_loss = 0.0;
};

struct EnvelopeArgs {
  std::string curves_path, runs_path, y = "loss", out_path, plot_path;
  double burn_in = 0.0;
};

struct CorrelateArgs {
  std::string runs_path, metric, out_path;
  std::optional<double> metric_cap, loss_min;
};

struct CompareArgs {
  std::string law_ref, law_other, metric;
  std::optional<double> gamma_ref, gamma_other;
};

struct ProjectArgs {
  std::string law_ref, law_other;
  double c_ref = 0.0;
};

struct SynthArgs {
  std::string law_path, out_path, curves_out;
  std::string sizes, ratios, epochs;
  double noise = 0.0;
  std::uint64_t seed = 0;
  int checkpoints = 0;
};

// --- handlers ----------------------------------------------------------------

int do_fit(const FitArgs& a) {
  RunSet runs = load_runs(a.runs_path, format_from_path(a.runs_path));
  json meta;
  meta["tool_version"] = kToolVersion;
  meta["input_path"] = a.runs_path;
  meta["input_fingerprint"] = file_fingerprint(a.runs_path);
  if (!a.curves_path.empty()) {
    const CurveSet curves =
        load_curves(a.curves_path, format_from_path(a.curves_path));
    runs = augment_with_checkpoints(std::move(runs), curves);
    meta["curves_path"] = a.curves_path;
    meta["curves_fingerprint"] = file_fingerprint(a.curves_path);
  }

  FitConfig cfg;
  cfg.huber_delta = a.huber_delta;
  cfg.threads = a.threads;
  cfg.opt.grad_tol = a.grad_tol;
  cfg.opt.max_iters = a.max_iters;
  cfg.opt.memory_pairs = a.memory_pairs;
  cfg.opt.line_search.c1 = a.wolfe_c1;
  cfg.opt.line_search.c2 = a.wolfe_c2;
  if (!a.grid_alpha.empty()) cfg.grid.alpha = parse_list(a.grid_alpha, "--grid-alpha");
  if (!a.grid_beta.empty()) cfg.grid.beta = parse_list(a.grid_beta, "--grid-beta");
  if (!a.grid_log_a.empty()) cfg.grid.log_a = parse_list(a.grid_log_a, "--grid-log-a");
  if (!a.grid_log_b.empty()) cfg.grid.log_b = parse_list(a.grid_log_b, "--grid-log-b");
  if (!a.grid_log_e.empty()) cfg.grid.log_e = parse_list(a.grid_log_e, "--grid-log-e");
  if (!a.grid_rho.empty()) cfg.rho_grid = parse_list(a.grid_rho, "--grid-rho");
  meta["huber_delta"] = cfg.huber_delta;
  meta["opt"] = opt_meta(cfg);

  LawArtifact artifact;
  FitReport report;
  if (a.stage == "single") {
    meta["grid"] = json{{"alpha", cfg.grid.alpha},
                        {"beta", cfg.grid.beta},
                        {"log_a", cfg.grid.log_a},
                        {"log_b", cfg.grid.log_b},
                        {"log_e", cfg.grid.log_e}};
    report = fit_single_epoch(runs, cfg);
    artifact.payload = std::get<ChinchillaParams>(report.params);
  } else {
    if (a.base_path.empty()) {
      throw UsageError{"--stage multi requires --base <law.json>"};
    }
    const LawArtifact base_art = load_artifact(a.base_path);
    const ChinchillaParams base = base_of(base_art, a.base_path);
    meta["base_path"] = a.base_path;
    meta["base_fingerprint"] = file_fingerprint(a.base_path);
    meta["rho_grid"] = cfg.rho_grid;
    report = fit_multi_epoch(runs, base, cfg);
    artifact.payload = std::get<MultiEpochParams>(report.params);
  }
  meta["objective"] = report.objective;
  meta["n_runs_used"] = report.n_runs_used;
  meta["winning_init"] = report.winning_init;
  artifact.fit_meta = meta;
  save_artifact(artifact, a.out_path);

  std::cout << "fitted " << artifact.type() << " law from "
            << report.n_runs_used << " runs\n";
  if (const auto* p = std::get_if<ChinchillaParams>(&artifact.payload)) {
    std::cout << "E        = " << fmt(p->E) << "\nA        = " << fmt(p->A)
              << "\nB        = " << fmt(p->B) << "\nalpha    = " << fmt(p->alpha)
              << "\nbeta     = " << fmt(p->beta) << "\n";
  } else {
    const auto& mp = std::get<MultiEpochParams>(artifact.payload);
    std::cout << "r_star_n = " << fmt(mp.r_star_n)
              << "\nr_star_d = " << fmt(mp.r_star_d) << "\n";
  }
  std::cout << "objective    = " << fmt(report.objective)
            << "\nwinning_init = " << report.winning_init << "\nwrote "
            << a.out_path << "\n";
  return 0;
}

int do_predict(const PredictArgs& a) {
  const LawArtifact art = load_artifact(a.law_path);
  if (const auto* multi = std::get_if<MultiEpochParams>(&art.payload)) {
    const double u_d = a.u_d.value_or(a.d);
    const double u_n = optimal_params_for_tokens(multi->base, u_d);
    const EffectiveBudget eb = effective_budget(*multi, a.n, a.d, u_d, u_n);
    std::cout << "u_n            = " << fmt(u_n) << "\nn_eff          = "
              << fmt(eb.n_eff) << "\nd_eff          = " << fmt(eb.d_eff)
              << "\npredicted_loss = "
              << fmt(predict_loss(multi->base, eb.n_eff, eb.d_eff)) << "\n";
    return 0;
  }
  if (a.u_d) {
    throw ValidationError("--u-d applies to multi_epoch laws; " + a.law_path +
                          " holds " + art.type());
  }
  const ChinchillaParams params = base_of(art, a.law_path);
  std::cout << "predicted_loss = " << fmt(predict_loss(params, a.n, a.d))
            << "\n";
  return 0;
}

int do_allocate(const AllocateArgs& a) {
  const LawArtifact art = load_artifact(a.law_path);
  const ChinchillaParams params = base_of(art, a.law_path);
  const AllocationResult res = optimal_allocation(params, a.compute);
  const double rel =
      std::abs(6.0 * res.n_opt * res.d_opt - res.compute) / res.compute;
  std::cout << "compute        = " << fmt(res.compute)
            << "\nn_opt          = " << fmt(res.n_opt)
            << "\nd_opt          = " << fmt(res.d_opt)
            << "\npredicted_loss = " << fmt(res.predicted_loss) << "\n"
            << "constraint 6*n_opt*d_opt = compute: "
            << (rel <= 1e-12 ? "OK" : "VIOLATED") << " (relative error "
            << fmt3(rel) << ")\n";
  if (rel > 1e-12) {
    throw NumericalError("allocation constraint violated beyond 1e-12");
  }
  return 0;
}

int do_invert(const InvertArgs& a) {
  const LawArtifact art = load_artifact(a.law_path);
  const ChinchillaParams params = base_of(art, a.law_path);
  const double compute = compute_for_loss(params, a.target_loss);
  const AllocationResult res = optimal_allocation(params, compute);
  std::cout << "compute        = " << fmt(compute)
            << "\nn_opt          = " << fmt(res.n_opt)
            << "\nd_opt          = " << fmt(res.d_opt)
            << "\npredicted_loss = " << fmt(res.predicted_loss) << "\n";
  return 0;
}

int do_envelope(const EnvelopeArgs& a) {
  if (a.curves_path.empty() == a.runs_path.empty()) {
    throw UsageError{"envelope needs exactly one of --curves or --runs"};
  }
  const std::string input =
      a.curves_path.empty() ? a.runs_path : a.curves_path;
  const CurveSet curves =
      a.curves_path.empty()
          ? to_curves(load_runs(input, format_from_path(input)))
          : load_curves(input, format_from_path(input));

  const bool is_loss = a.y == "loss";
  const std::string metric = is_loss ? "" : a.y.substr(7);

  std::vector<EnvelopePoint> pts;
  for (const auto& p : curves.points) {
    if (a.burn_in > 0.0 && p.compute < a.burn_in) continue;
    if (is_loss) {
      pts.push_back({p.compute, p.loss});
    } else if (const auto it = p.metrics.find(metric); it != p.metrics.end()) {
      pts.push_back({p.compute, it->second});
    }
  }
  if (pts.empty()) {
    throw ValidationError(a.burn_in > 0.0
                              ? "no points survive the burn-in filter"
                              : "no points carry metric '" + metric + "'");
  }
  const auto env = pareto_envelope(
      pts, is_loss ? Orientation::min : Orientation::max);
  if (env.size() < 2) {
    throw ValidationError("envelope has fewer than 2 points; cannot fit");
  }
  const PowerLawFit fit = fit_power_law(env);

  LawArtifact artifact;
  artifact.payload = fit;
  artifact.fit_meta = json{{"tool_version", kToolVersion},
                           {"input_path", input},
                           {"input_fingerprint", file_fingerprint(input)},
                           {"y", a.y},
                           {"burn_in", a.burn_in},
                           {"envelope_points", static_cast<int>(env.size())}};
  save_artifact(artifact, a.out_path);

  std::cout << "envelope points = " << env.size() << " (of " << pts.size()
            << ")\ncoefficient = " << fmt(fit.coefficient)
            << "\nexponent    = " << fmt(fit.exponent)
            << "\nr_squared   = " << fmt(fit.r_squared) << "\ndomain      = ["
            << fmt(fit.c_min) << ", " << fmt(fit.c_max) << "]\nwrote "
            << a.out_path << "\n";

  if (!a.plot_path.empty()) {
    std::ofstream plot(a.plot_path, std::ios::trunc);
    if (!plot) {
      throw ValidationError("cannot open file for writing: " + a.plot_path);
    }
    plot << "# x=compute y=" << (is_loss ? "loss" : metric)
         << " scale=log-log\ncompute,value\n";
    for (const auto& p : env) {
      plot << fmt(p.compute) << "," << fmt(p.value) << "\n";
    }
    std::cout << "wrote " << a.plot_path << "\n";
  }
  return 0;
}

int do_correlate(const CorrelateArgs& a) {
  const RunSet runs = load_runs(a.runs_path, format_from_path(a.runs_path));
  SaturationFilter filter;
  filter.metric_cap = a.metric_cap;
  filter.loss_min = a.loss_min;
  const LinearFit fit = loss_metric_correlation(runs, a.metric, filter);
  std::cout << "metric     = " << a.metric << "\nslope      = " << fmt(fit.slope)
            << "\nintercept  = " << fmt(fit.intercept)
            << "\npearson_r  = " << fmt(fit.pearson_r)
            << "\nn_points   = " << fit.n_points << "\nfilter     = "
            << fit.filter_applied << "\n";
  if (!a.out_path.empty()) {
    LawArtifact artifact;
    artifact.payload = fit;
    artifact.fit_meta =
        json{{"tool_version", kToolVersion},
             {"input_path", a.runs_path},
             {"input_fingerprint", file_fingerprint(a.runs_path)},
             {"metric", a.metric}};
    save_artifact(artifact, a.out_path);
    std::cout << "wrote " << a.out_path << "\n";
  }
  return 0;
}

int do_compare(const CompareArgs& a) {
  const bool law_mode = !a.law_ref.empty() || !a.law_other.empty();
  const bool gamma_mode = a.gamma_ref.has_value() || a.gamma_other.has_value();
  if (law_mode == gamma_mode) {
    throw UsageError{
        "compare needs either --law-ref/--law-other or --gamma-ref/--gamma-other"};
  }
  EfficiencyReport rep;
  if (law_mode) {
    if (a.law_ref.empty() || a.law_other.empty()) {
      throw UsageError{"compare needs both --law-ref and --law-other"};
    }
    rep = efficiency_ratio(
        power_law_of(load_artifact(a.law_ref), a.law_ref),
        power_law_of(load_artifact(a.law_other), a.law_other), a.metric);
  } else {
    if (!a.gamma_ref || !a.gamma_other) {
      throw UsageError{"compare needs both --gamma-ref and --gamma-other"};
    }
    rep = efficiency_ratio(*a.gamma_ref, *a.gamma_other, a.metric);
  }
  char header[96], row[96];
  std::snprintf(header, sizeof header, "%-12s %11s %11s %8s %10s", "metric",
                "gamma_ref", "gamma_other", "ratio", "10^ratio");
  std::snprintf(row, sizeof row, "%-12s %11g %11g %8s %10s",
                rep.metric.c_str(), rep.gamma_ref, rep.gamma_other,
                fmt3(rep.ratio).c_str(), fmt3(rep.compute_multiplier).c_str());
  std::cout << header << "\n" << row << "\n";
  return 0;
}

int do_project(const ProjectArgs& a) {
  const PowerLawFit ref = power_law_of(load_artifact(a.law_ref), a.law_ref);
  const PowerLawFit other =
      power_law_of(load_artifact(a.law_other), a.law_other);
  const ParityProjection out = project_parity(ref, other, a.c_ref);
  std::cout << "c_ref        = " << fmt(a.c_ref)
            << "\ntarget_value = " << fmt(out.target_value)
            << "\nc_other      = " << fmt(out.c_other) << "\n";
  if (out.extrapolated_ref) {
    std::cout << "note: c_ref lies outside the reference fit's domain ["
              << fmt(ref.c_min) << ", " << fmt(ref.c_max) << "]\n";
  }
  if (out.extrapolated_other) {
    std::cout << "note: c_other lies outside the other fit's domain ["
              << fmt(other.c_min) << ", " << fmt(other.c_max) << "]\n";
  }
  if (out.target_above_100) {
    std::cout << "note: target value exceeds 100; not meaningful for "
                 "accuracy metrics\n";
  }
  return 0;
}

int do_synth(const SynthArgs& a) {
  const LawArtifact art = load_artifact(a.law_path);
  SynthSpec spec;
  if (const auto* multi = std::get_if<MultiEpochParams>(&art.payload)) {
    if (!a.epochs.empty()) {
      spec.law = *multi;
      spec.epoch_grid = parse_list(a.epochs, "--epochs");
    } else {
      spec.law = multi->base;  // no epoch grid: single-epoch records
    }
  } else {
    if (!a.epochs.empty()) {
      throw ValidationError("--epochs requires a multi_epoch law; " +
                            a.law_path + " holds " + art.type());
    }
    spec.law = base_of(art, a.law_path);
  }
  if (!a.sizes.empty()) spec.sizes = parse_list(a.sizes, "--sizes");
  if (!a.ratios.empty()) spec.ratios = parse_list(a.ratios, "--ratios");
  spec.noise_sigma = a.noise;
  spec.seed = a.seed;

  const RunSet runs = generate_runs(spec);
  save_runs(runs, a.out_path, format_from_path(a.out_path));
  std::cout << "wrote " << runs.records.size() << " runs to " << a.out_path
            << "\n";

  if (!a.curves_out.empty()) {
    if (a.checkpoints < 2) {
      throw UsageError{"--curves-out requires --checkpoints >= 2"};
    }
    const CurveSet curves = generate_curves(spec, a.checkpoints);
    save_curves(curves, a.curves_out, format_from_path(a.curves_out));
    std::cout << "wrote " << curves.points.size() << " curve points to "
              << a.curves_out << "\n";
  } else if (a.checkpoints != 0) {
    throw UsageError{"--checkpoints requires --curves-out"};
  }
  return 0;
}

// --- check: built-in self-test ---------------------------------------------

bool color_enabled() {
  return isatty(STDOUT_FILENO) != 0 && std::getenv("NO_COLOR") == nullptr;
}

void report_check(const std::string& name, bool pass, const std::string& detail,
                  bool verbose, bool* all_ok) {
  const bool color = color_enabled();
  const char* tag = pass ? (color ? "\033[32mPASS\033[0m" : "PASS")
                         : (color ? "\033[31mFAIL\033[0m" : "FAIL");
  std::cout << tag << "  " << name;
  if (verbose && !detail.empty()) std::cout << "  (" << detail << ")";
  std::cout << "\n";
  if (!pass) *all_ok = false;
}

int do_check(bool verbose) {
  bool ok = true;

  // gradient check, stage-1 objective, at every default grid start
  {
    SynthSpec spec;
    spec.law = presets::speech().base;
    spec.seed = 1;
    const RunSet runs = generate_runs(spec);
    const auto pts = single_epoch_points(runs);
    const double delta = 0.03;
    const ObjectiveFn obj = [&](std::span<const double> th) {
      return huber_lse_objective(th, pts, delta);
    };
    const GradientFn grd = [&](std::span<const double> th,
                               std::span<double> g) {
      huber_lse_gradient(th, pts, delta, g);
    };
    const GridSpec grid;
    double worst = 0.0;
    for (double alpha : grid.alpha)
      for (double beta : grid.beta)
        for (double la : grid.log_a)
          for (double lb : grid.log_b)
            for (double le : grid.log_e) {
              const std::vector<double> theta = {le, la, lb, alpha, beta};
              worst = std::max(worst, grad_check(obj, grd, theta, 1e-6));
            }
    report_check("single-epoch objective gradient (1600 grid starts)",
                 worst < 1e-6, "max relative error " + fmt3(worst), verbose,
                 &ok);
  }

  // gradient check, stage-2 objective, at every default rho start
  {
    SynthSpec spec;
    spec.law = presets::speech();
    spec.seed = 2;
    const RunSet runs = generate_runs(spec);
    const ChinchillaParams base = presets::speech().base;
    const auto pts = multi_epoch_points(runs, base);
    const double delta = 0.03;
    const ObjectiveFn obj = [&](std::span<const double> rho) {
      return multi_epoch_objective(rho, base, pts, delta);
    };
    const GradientFn grd = [&](std::span<const double> rho,
                               std::span<double> g) {
      multi_epoch_gradient(rho, base, pts, delta, g);
    };
    double worst = 0.0;
    for (double rn : {0.0, 1.0, 2.0, 3.0, 4.0})
      for (double rd : {0.0, 1.0, 2.0, 3.0, 4.0}) {
        const std::vector<double> rho = {rn, rd};
        worst = std::max(worst, grad_check(obj, grd, rho, 1e-6));
      }
    report_check("multi-epoch objective gradient (25 grid starts)",
                 worst < 1e-6, "max relative error " + fmt3(worst), verbose,
                 &ok);
  }

  // closed-form allocation vs golden-section search
  {
    bool pass = true;
    double worst = 0.0;
    std::string where;
    const std::vector<std::pair<std::string, ChinchillaParams>> laws = {
        {"text", presets::text().base},
        {"speech", presets::speech().base},
        {"speech-unigram", presets::speech_unigram()}};
    for (const auto& [name, params] : laws) {
      for (double c : {1e18, 1e20, 1e22}) {
        try {
          const AllocationCheck chk = verify_allocation(params, c, 1e-3);
          if (chk.rel_err > worst) {
            worst = chk.rel_err;
            where = name + " @ C=" + fmt3(c);
          }
        } catch (const NumericalError&) {
          pass = false;
        }
      }
    }
    report_check("allocation closed form vs numeric minimizer", pass,
                 "worst relative gap " + fmt3(worst) + " at " + where, verbose,
                 &ok);
  }

  // effective-budget bounds on random inputs
  {
    SplitMix64 rng(2024);
    bool pass = true;
    for (int i = 0; i < 2000 && pass; ++i) {
      MultiEpochParams p = presets::speech();
      p.r_star_d = std::exp(rng.next_uniform() * 8.0 - 4.0);
      p.r_star_n = std::exp(rng.next_uniform() * 8.0 - 4.0);
      const double u_d = std::exp(rng.next_uniform() * 20.0 + 3.0);
      const double r_d = rng.next_uniform() * 100.0;
      const double d = u_d * (1.0 + r_d);
      const double u_n = optimal_params_for_tokens(p.base, u_d);
      const EffectiveBudget eb = effective_budget(p, u_n, d, u_d, u_n);
      if (eb.d_eff < u_d * (1.0 - 1e-12) ||
          eb.d_eff > u_d * (1.0 + p.r_star_d) * (1.0 + 1e-12) ||
          eb.d_eff > d * (1.0 + 1e-12)) {
        pass = false;
      }
    }
    report_check("effective-budget saturation bounds (2000 samples)", pass, "",
                 verbose, &ok);
  }

  // artifact round-trip
  {
    bool pass = true;
    const std::vector<LawArtifact> artifacts = {
        {presets::speech().base, json{{"k", 1.0}}},
        {presets::speech(), json::object()},
        {PowerLawFit{10.0, -0.05, 1.0, 1e15, 1e21, 12}, json::object()},
        {LinearFit{-20.0, 120.0, -1.0, 3, "none"}, json::object()}};
    for (const auto& art : artifacts) {
      if (artifact_from_json(artifact_to_json(art)) != art) pass = false;
    }
    report_check("law artifact JSON round-trip", pass, "", verbose, &ok);
  }

  std::cout << (ok ? "all checks passed\n" : "some checks FAILED\n");
  if (!ok) throw NumericalError("self-test failed");
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(std::move(args));

    CLI::App app{"scaling-law toolkit: fit loss surfaces to training-run "
                 "logs, solve compute-optimal allocation, and project "
                 "downstream performance across modalities"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    const auto add_config_stub = [](CLI::App* sub) {
      sub->add_option("--config",
                      "JSON file mirroring this subcommand's flags; explicit "
                      "flags win")
          ->type_name("FILE");
    };

    FitArgs fit_args;
    CLI::App* fit = app.add_subcommand(
        "fit", "fit a loss law to run records (stage: single | multi)");
    fit->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    fit->add_option("--runs", fit_args.runs_path, "run records (.csv/.json)")
        ->required();
    fit->add_option("--curves", fit_args.curves_path,
                    "optional learning curves joined to runs as extra "
                    "observations");
    fit->add_option("--stage", fit_args.stage, "single | multi")
        ->required()
        ->check(CLI::IsMember({"single", "multi"}));
    fit->add_option("--base", fit_args.base_path,
                    "stage-1 law artifact (required for --stage multi)");
    fit->add_option("--huber-delta", fit_args.huber_delta,
                    "Huber error scale (default 0.03)");
    fit->add_option("--threads", fit_args.threads,
                    "grid starts run concurrently; result is identical");
    fit->add_option("--out", fit_args.out_path, "law artifact to write")
        ->required();
    fit->add_option("--grid-alpha", fit_args.grid_alpha, "comma list");
    fit->add_option("--grid-beta", fit_args.grid_beta, "comma list");
    fit->add_option("--grid-log-a", fit_args.grid_log_a, "comma list");
    fit->add_option("--grid-log-b", fit_args.grid_log_b, "comma list");
    fit->add_option("--grid-log-e", fit_args.grid_log_e, "comma list");
    fit->add_option("--grid-rho", fit_args.grid_rho,
                    "comma list (stage-2 starts per axis)");
    fit->add_option("--grad-tol", fit_args.grad_tol, "L-BFGS gradient norm stop");
    fit->add_option("--max-iters", fit_args.max_iters, "L-BFGS iteration cap");
    fit->add_option("--memory-pairs", fit_args.memory_pairs, "L-BFGS history");
    fit->add_option("--wolfe-c1", fit_args.wolfe_c1, "line search c1");
    fit->add_option("--wolfe-c2", fit_args.wolfe_c2, "line search c2");
    add_config_stub(fit);

    PredictArgs predict_args;
    CLI::App* predict =
        app.add_subcommand("predict", "evaluate a fitted law at (N, D)");
    predict->option_defaults()->multi_option_policy(
        CLI::MultiOptionPolicy::TakeLast);
    predict->add_option("--law", predict_args.law_path, "law artifact")
        ->required();
    predict->add_option("--n", predict_args.n, "parameters")->required();
    predict->add_option("--d", predict_args.d, "training tokens")->required();
    double u_d_val = 0.0;
    CLI::Option* u_d_opt =
        predict->add_option("--u-d", u_d_val, "unique tokens (multi_epoch)");
    add_config_stub(predict);

    AllocateArgs alloc_args;
    CLI::App* allocate = app.add_subcommand(
        "allocate", "compute-optimal (N, D) split of a FLOP budget");
    allocate->option_defaults()->multi_option_policy(
        CLI::MultiOptionPolicy::TakeLast);
    allocate->add_option("--law", alloc_args.law_path, "law artifact")
        ->required();
    allocate->add_option("--compute", alloc_args.compute, "budget in FLOPs")
        ->required();
    add_config_stub(allocate);

    InvertArgs invert_args;
    CLI::App* invert = app.add_subcommand(
        "invert", "minimal compute whose optimal allocation reaches a loss");
    invert->option_defaults()->multi_option_policy(
        CLI::MultiOptionPolicy::TakeLast);
    invert->add_option("--law", invert_args.law_path, "law artifact")
        ->required();
    invert->add_option("--target-loss", invert_args.target_loss, "nats")
        ->required();
    add_config_stub(invert);

    EnvelopeArgs env_args;
    CLI::App* envelope = app.add_subcommand(
        "envelope", "Pareto envelope of curves and its power-law fit");
    envelope->option_defaults()->multi_option_policy(
        CLI::MultiOptionPolicy::TakeLast);
    envelope->add_option("--curves", env_args.curves_path,
                         "curve checkpoints (.csv/.json)");
    envelope->add_option("--runs", env_args.runs_path,
                         "run records viewed as final checkpoints");
    envelope
        ->add_option("--y", env_args.y, "loss | metric:<name> (default loss)")
        ->check(CLI::Validator(
            [](std::string& s) -> std::string {
              if (s == "loss" || (s.rfind("metric:", 0) == 0 && s.size() > 7))
                return {};
              return "must be 'loss' or 'metric:<name>'";
            },
            "Y"));
    envelope->add_option("--out", env_args.out_path, "power-law artifact")
        ->required();
    envelope->add_option("--emit-plot", env_args.plot_path,
                         "write envelope points as CSV");
    envelope->add_option("--burn-in", env_args.burn_in,
                         "drop points below this compute (FLOPs)");
    add_config_stub(envelope);

    CorrelateArgs corr_args;
    CLI::App* correlate = app.add_subcommand(
        "correlate", "linear fit of a downstream metric on test loss");
    correlate->option_defaults()->multi_option_policy(
        CLI::MultiOptionPolicy::TakeLast);
    correlate->add_option("--runs", corr_args.runs_path, "run records")
        ->required();
    correlate->add_option("--metric", corr_args.metric, "metric name")
        ->required();
    double cap_val = 0.0, loss_min_val = 0.0;
    CLI::Option* cap_opt = correlate->add_option(
        "--metric-cap", cap_val, "drop runs with metric above this");
    CLI::Option* loss_min_opt = correlate->add_option(
        "--loss-min", loss_min_val, "drop runs with loss below this");
    correlate->add_option("--out", corr_args.out_path,
                          "optional linear artifact to write");
    add_config_stub(correlate);

    CompareArgs cmp_args;
    CLI::App* compare = app.add_subcommand(
        "compare", "scaling-efficiency ratio between two modalities");
    compare->option_defaults()->multi_option_policy(
        CLI::MultiOptionPolicy::TakeLast);
    compare->add_option("--law-ref", cmp_args.law_ref, "power-law artifact");
    compare->add_option("--law-other", cmp_args.law_other,
                        "power-law artifact");
    double gr_val = 0.0, go_val = 0.0;
    CLI::Option* gr_opt =
        compare->add_option("--gamma-ref", gr_val, "reference exponent");
    CLI::Option* go_opt =
        compare->add_option("--gamma-other", go_val, "compared exponent");
    compare->add_option("--metric", cmp_args.metric, "metric label")
        ->required();
    add_config_stub(compare);

    ProjectArgs proj_args;
    CLI::App* project = app.add_subcommand(
        "project", "compute parity: where one law matches the other's value");
    project->option_defaults()->multi_option_policy(
        CLI::MultiOptionPolicy::TakeLast);
    project->add_option("--law-ref", proj_args.law_ref, "power-law artifact")
        ->required();
    project->add_option("--law-other", proj_args.law_other,
                        "power-law artifact")
        ->required();
    project->add_option("--c-ref", proj_args.c_ref, "reference compute FLOPs")
        ->required();
    add_config_stub(project);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand(
        "synth", "generate synthetic runs/curves from a law artifact");
    synth->option_defaults()->multi_option_policy(
        CLI::MultiOptionPolicy::TakeLast);
    synth->add_option("--law", synth_args.law_path, "law artifact")->required();
    synth->add_option("--sizes", synth_args.sizes, "comma list of N values");
    synth->add_option("--ratios", synth_args.ratios, "comma list of D/N");
    synth->add_option("--epochs", synth_args.epochs,
                      "comma list of epoch counts (multi_epoch laws)");
    synth->add_option("--noise", synth_args.noise, "log-loss noise sigma");
    synth->add_option("--seed", synth_args.seed, "generator seed")->required();
    synth->add_option("--out", synth_args.out_path, "runs file (.csv/.json)")
        ->required();
    synth->add_option("--curves-out", synth_args.curves_out,
                      "optional curves file");
    synth->add_option("--checkpoints", synth_args.checkpoints,
                      "checkpoints per run for --curves-out");
    add_config_stub(synth);

    bool check_verbose = false;
    CLI::App* check = app.add_subcommand("check", "run the built-in self-test");
    check->add_flag("--verbose", check_verbose, "print per-check details");

    try {
      std::vector<const char*> ptrs;
      ptrs.reserve(args.size());
      for (const auto& s : args) ptrs.push_back(s.c_str());
      app.parse(static_cast<int>(ptrs.size()), ptrs.data());
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }

    if (*u_d_opt) predict_args.u_d = u_d_val;
    if (*cap_opt) corr_args.metric_cap = cap_val;
    if (*loss_min_opt) corr_args.loss_min = loss_min_val;
    if (*gr_opt) cmp_args.gamma_ref = gr_val;
    if (*go_opt) cmp_args.gamma_other = go_val;

    if (fit->parsed()) return do_fit(fit_args);
    if (predict->parsed()) return do_predict(predict_args);
    if (allocate->parsed()) return do_allocate(alloc_args);
    if (invert->parsed()) return do_invert(invert_args);
    if (envelope->parsed()) return do_envelope(env_args);
    if (correlate->parsed()) return do_correlate(corr_args);
    if (compare->parsed()) return do_compare(cmp_args);
    if (project->parsed()) return do_project(proj_args);
    if (synth->parsed()) return do_synth(synth_args);
    if (check->parsed()) return do_check(check_verbose);
    std::cerr << "error: no subcommand given\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.message << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace scalekit::cli
