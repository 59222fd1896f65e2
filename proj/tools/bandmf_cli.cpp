// Copyright 2026 The bandmf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// bandmf command line: optimize strategies, evaluate their error, sweep band
// counts under a privacy budget, and generate the correlated noise stream.
//
// Exit codes: 0 success, 2 usage error, 3 infeasible configuration,
// 4 numerical failure.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bandmf/accountant.hpp"
#include "bandmf/errors.hpp"
#include "bandmf/loss.hpp"
#include "bandmf/noisegen.hpp"
#include "bandmf/optimizer.hpp"
#include "bandmf/parallel.hpp"
#include "bandmf/slo.hpp"
#include "bandmf/strategy.hpp"
#include "bandmf/version.hpp"

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class PhaseTimer {
 public:
  void start(const std::string& phase) {
    current_ = phase;
    t0_ = Clock::now();
  }
  void stop() {
    if (current_.empty()) return;
    phases_[current_] +=
        std::chrono::duration<double>(Clock::now() - t0_).count();
    current_.clear();
  }
  json to_json() const {
    json j = json::object();
    for (const auto& [name, secs] : phases_) j[name] = secs;
    return j;
  }

 private:
  std::map<std::string, double> phases_;
  std::string current_;
  Clock::time_point t0_;
};

// Every output file is accompanied by a <file>.manifest.json recording the
// command, the fully resolved configuration, and per-phase timings. Reruns
// with identical manifests reproduce outputs bit-exactly (except timings).
void write_manifest(const std::string& out_path, const std::string& command,
                    const json& config, const PhaseTimer& timer) {
  json manifest;
  manifest["command"] = command;
  manifest["config"] = config;
  manifest["version"] = bandmf::kVersion;
  manifest["timings"] = timer.to_json();
  std::ofstream os(out_path + ".manifest.json");
  if (!os) throw bandmf::ShapeError("cannot write manifest for " + out_path);
  os << manifest.dump(2) << "\n";
}

// A JSON config file may supply any long flag (keys without the leading
// dashes); explicit command line flags take precedence.
std::vector<std::string> inject_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw bandmf::ShapeError("cannot read config file: " + config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw bandmf::ShapeError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw bandmf::ShapeError("config must be a JSON object");

  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string flag = "--" + it.key();
    bool present = false;
    for (const auto& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) {
        present = true;
        break;
      }
    }
    if (present) continue;
    if (it.value().is_boolean()) {
      if (it.value().get<bool>()) args.push_back(flag);
    } else if (it.value().is_string()) {
      args.push_back(flag);
      args.push_back(it.value().get<std::string>());
    } else {
      args.push_back(flag);
      args.push_back(it.value().dump());
    }
  }
  return args;
}

bandmf::OptimizerConfig make_opt_config(int max_iters, double rel_tol,
                                        const std::string& grad_mode) {
  bandmf::OptimizerConfig config;
  config.max_iters = max_iters;
  config.rel_tol = rel_tol;
  if (grad_mode == "analytic") {
    config.grad_mode = bandmf::GradMode::kAnalytic;
  } else if (grad_mode == "fd") {
    config.grad_mode = bandmf::GradMode::kFiniteDifference;
  } else {
    throw bandmf::ShapeError("unknown grad mode: " + grad_mode);
  }
  return config;
}

struct OptimizeArgs {
  std::size_t n = 0;
  std::size_t b = 0;
  std::string klass = "toeplitz";
  bool normalize = false;
  std::string out;
  std::string trace_path;
  int max_iters = 10000;
  double rel_tol = 1e-9;
  std::string grad_mode = "analytic";
};

int run_optimize(const OptimizeArgs& a) {
  PhaseTimer timer;
  json config{{"n", a.n},
              {"b", a.b},
              {"class", a.klass},
              {"normalize", a.normalize},
              {"out", a.out},
              {"trace", a.trace_path},
              {"max-iters", a.max_iters},
              {"rel-tol", a.rel_tol},
              {"grad-mode", a.grad_mode},
              {"threads", bandmf::parallel::max_threads()}};
  const bandmf::OptimizerConfig opt =
      make_opt_config(a.max_iters, a.rel_tol, a.grad_mode);

  std::vector<bandmf::TraceEntry> trace;
  std::vector<bandmf::TraceEntry>* trace_ptr =
      a.trace_path.empty() ? nullptr : &trace;

  timer.start("optimize");
  bandmf::OptimizeResult result;
  if (a.klass == "toeplitz") {
    result = bandmf::optimize_toeplitz_traced(a.n, a.b, opt, trace_ptr);
  } else if (a.klass == "banded") {
    result = bandmf::optimize_banded_traced(a.n, a.b, opt, std::nullopt,
                                            trace_ptr);
  } else {
    throw bandmf::ShapeError("unknown strategy class: " + a.klass);
  }
  timer.stop();

  bandmf::Strategy out_strategy = result.strategy;
  double out_loss = result.final_loss();
  if (a.normalize && a.klass == "toeplitz") {
    timer.start("normalize");
    bandmf::BandedParams normalized = bandmf::column_normalize(
        std::get<bandmf::ToeplitzCoeffs>(result.strategy));
    out_loss = bandmf::banded_loss(normalized);
    out_strategy = std::move(normalized);
    timer.stop();
  }

  timer.start("write");
  bandmf::save_strategy(out_strategy, a.out);
  if (trace_ptr) {
    std::ofstream os(a.trace_path);
    if (!os) throw bandmf::ShapeError("cannot write trace: " + a.trace_path);
    os << "iteration,loss,grad_norm\n";
    for (const auto& e : trace) {
      os << e.iteration << "," << fmt17(e.loss) << "," << fmt17(e.grad_norm)
         << "\n";
    }
  }
  timer.stop();

  const int iters = std::max(1, result.iterations);
  std::cout << "loss=" << fmt17(out_loss) << "\n"
            << "iterations=" << result.iterations << "\n"
            << "converged=" << (result.converged ? "true" : "false") << "\n";
  std::cout << "seconds_per_iteration="
            << fmt17(timer.to_json().value("optimize", 0.0) / iters) << "\n";

  write_manifest(a.out, "optimize", config, timer);
  if (trace_ptr) write_manifest(a.trace_path, "optimize", config, timer);
  return 0;
}

struct EvaluateArgs {
  std::string strategy_path;
  std::string workload = "prefix";
  std::vector<double> workload_coeffs;
  std::string metric = "total";
  double sigma = -1.0;  // < 0 means not given
  bool cross_check = false;
  std::string out;
};

int run_evaluate(const EvaluateArgs& a) {
  PhaseTimer timer;
  json config{{"strategy", a.strategy_path},
              {"workload", a.workload},
              {"workload-coeffs", a.workload_coeffs},
              {"metric", a.metric},
              {"sigma", a.sigma},
              {"cross-check", a.cross_check},
              {"out", a.out},
              {"threads", bandmf::parallel::max_threads()}};

  timer.start("load");
  const bandmf::Strategy strategy = bandmf::load_strategy(a.strategy_path);
  const std::size_t n = bandmf::strategy_n(strategy);
  bandmf::Workload workload = bandmf::Workload::Prefix(n);
  if (a.workload == "toeplitz") {
    workload = bandmf::Workload::Toeplitz(n, a.workload_coeffs);
  } else if (a.workload != "prefix") {
    throw bandmf::ShapeError("unknown workload: " + a.workload);
  }
  timer.stop();

  timer.start("evaluate");
  const bool want_per_query = a.metric == "per_query";
  bandmf::ErrorReport report =
      bandmf::make_error_report(strategy, workload, want_per_query);
  timer.stop();

  json out;
  out["n"] = n;
  out["kind"] = std::holds_alternative<bandmf::ToeplitzCoeffs>(strategy)
                    ? "toeplitz"
                    : "banded";
  out["workload"] = a.workload;
  out["sensitivity"] = bandmf::sensitivity(strategy);
  out["total_squared"] = report.total_squared;
  out["max_query"] = report.max_query;
  out["mean_query"] = report.total_squared / static_cast<double>(n);
  if (a.metric == "total") out["metric_value"] = report.total_squared;
  if (a.metric == "max") out["metric_value"] = report.max_query;
  if (a.metric == "mean") {
    out["metric_value"] = report.total_squared / static_cast<double>(n);
  }
  if (report.per_query.has_value()) out["per_query"] = *report.per_query;
  if (a.sigma >= 0.0) {
    out["sigma"] = a.sigma;
    out["rmse"] = report.rmse(a.sigma, n);
  }

  if (a.cross_check) {
    timer.start("cross_check");
    const auto fast = bandmf::per_query_error(strategy, workload);
    const auto generic = bandmf::per_query_error_generic(strategy, workload);
    double max_rel = 0.0;
    for (std::size_t i = 0; i < fast.size(); ++i) {
      const double denom = std::max(std::abs(generic[i]), 1e-300);
      max_rel = std::max(max_rel, std::abs(fast[i] - generic[i]) / denom);
    }
    out["cross_check_max_rel_diff"] = max_rel;
    timer.stop();
  }

  std::cout << out.dump(2) << "\n";
  if (!a.out.empty()) {
    std::ofstream os(a.out);
    if (!os) throw bandmf::ShapeError("cannot write report: " + a.out);
    os << out.dump(2) << "\n";
    write_manifest(a.out, "evaluate", config, timer);
  }
  return 0;
}

struct SweepArgs {
  double epsilon = 1.0;
  double delta = 1e-8;
  std::size_t n = 0;
  double k = 1.0;
  std::string klass = "toeplitz";
  std::vector<std::size_t> bs;
  std::string out;
  int max_iters = 10000;
  double rel_tol = 1e-9;
  std::string grad_mode = "analytic";
};

int run_sweep(const SweepArgs& a) {
  PhaseTimer timer;
  json config{{"epsilon", a.epsilon}, {"delta", a.delta},
              {"n", a.n},             {"k", a.k},
              {"class", a.klass},     {"bs", a.bs},
              {"out", a.out},         {"max-iters", a.max_iters},
              {"rel-tol", a.rel_tol}, {"grad-mode", a.grad_mode},
              {"threads", bandmf::parallel::max_threads()}};

  bandmf::PrivacyParams params{a.epsilon, a.delta, a.n, a.k};
  for (const auto& warning : params.validate()) {
    std::cerr << "warning: " << warning << "\n";
  }
  std::vector<std::size_t> bs =
      a.bs.empty() ? bandmf::default_band_candidates(params) : a.bs;

  timer.start("sweep");
  const bandmf::BandSweepResult result = bandmf::band_sweep(
      params, bs, bandmf::strategy_class_from_name(a.klass),
      make_opt_config(a.max_iters, a.rel_tol, a.grad_mode));
  timer.stop();

  timer.start("write");
  std::ofstream os(a.out);
  if (!os) throw bandmf::ShapeError("cannot write sweep: " + a.out);
  bandmf::write_sweep_csv(os, result);
  timer.stop();

  for (const auto& row : result.rows) {
    if (row.b == result.argmin_b) {
      std::cout << "argmin_b=" << row.b << " sigma=" << fmt17(row.sigma)
                << " loss=" << fmt17(row.loss) << " rmse=" << fmt17(row.rmse)
                << "\n";
    }
  }
  write_manifest(a.out, "sweep", config, timer);
  return 0;
}

struct GenNoiseArgs {
  std::string strategy_path;
  std::size_t d = 1;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::size_t shard_index = 0;
  std::size_t shard_count = 1;
  std::size_t steps = 0;  // 0 = all n
  std::string out;
  std::string format = "bin";
  bool verify = false;
};

void write_noise_bin(std::ostream& os, const bandmf::NoiseRow& row,
                     std::uint32_t shard_index) {
  const auto step = static_cast<std::uint32_t>(row.step);
  os.write(reinterpret_cast<const char*>(&step), sizeof(step));
  os.write(reinterpret_cast<const char*>(&shard_index), sizeof(shard_index));
  for (double v : row.values) {
    const float f = static_cast<float>(v);
    os.write(reinterpret_cast<const char*>(&f), sizeof(f));
  }
}

int run_gen_noise(const GenNoiseArgs& a) {
  PhaseTimer timer;
  json config{{"strategy", a.strategy_path},
              {"d", a.d},
              {"sigma", a.sigma},
              {"seed", a.seed},
              {"shard-index", a.shard_index},
              {"shard-count", a.shard_count},
              {"steps", a.steps},
              {"out", a.out},
              {"format", a.format},
              {"verify", a.verify},
              {"threads", bandmf::parallel::max_threads()}};
  if (a.format != "bin" && a.format != "csv") {
    throw bandmf::ShapeError("unknown format: " + a.format);
  }

  timer.start("load");
  bandmf::NoiseStreamConfig stream_config;
  stream_config.strategy = bandmf::load_strategy(a.strategy_path);
  stream_config.d = a.d;
  stream_config.sigma = a.sigma;
  stream_config.seed = a.seed;
  stream_config.shard = {a.shard_index, a.shard_count};
  bandmf::NoiseStream stream(stream_config);
  timer.stop();

  const std::size_t total = stream.steps_total();
  const std::size_t steps = a.steps == 0 ? total : a.steps;
  if (steps > total) {
    throw bandmf::InfeasibleError("requested " + std::to_string(steps) +
                                  " steps; stream has " +
                                  std::to_string(total));
  }

  timer.start("generate");
  const bool to_stdout = a.out == "-";
  std::ofstream file;
  if (!to_stdout) {
    file.open(a.out, a.format == "bin" ? std::ios::binary : std::ios::out);
    if (!file) throw bandmf::ShapeError("cannot write noise to: " + a.out);
  }
  std::ostream& os = to_stdout ? std::cout : file;
  if (a.format == "csv") {
    os << "step";
    for (std::size_t c = stream.coord_begin(); c < stream.coord_end(); ++c) {
      os << ",c" << c;
    }
    os << "\n";
  }
  for (std::size_t i = 0; i < steps; ++i) {
    auto row = stream.next_row();
    if (!row.has_value()) break;
    if (a.format == "bin") {
      write_noise_bin(os, *row, static_cast<std::uint32_t>(a.shard_index));
    } else {
      os << row->step;
      for (double v : row->values) os << "," << fmt17(v);
      os << "\n";
    }
  }
  os.flush();
  timer.stop();

  if (a.verify) {
    timer.start("verify");
    const double residual = bandmf::verify_roundtrip(stream_config, steps);
    timer.stop();
    std::cout << "roundtrip_residual=" << fmt17(residual) << "\n";
    if (!(residual < 1e-6 * std::max(stream_config.sigma, 1e-300))) {
      throw bandmf::NumericError("roundtrip residual " + fmt17(residual) +
                                 " exceeds 1e-6 * sigma");
    }
  }

  if (!to_stdout) write_manifest(a.out, "gen-noise", config, timer);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"banded matrix-factorization DP noise toolkit"};
  app.require_subcommand(1);

  int threads = 0;
  std::string config_path;

  OptimizeArgs opt_args;
  auto* opt = app.add_subcommand(
      "optimize", "Optimize a banded or banded-Toeplitz strategy");
  opt->add_option("--n", opt_args.n, "training iterations")->required();
  opt->add_option("--b", opt_args.b, "number of bands")->required();
  opt->add_option("--class", opt_args.klass, "toeplitz|banded");
  opt->add_flag("--normalize", opt_args.normalize,
                "column-normalize an optimized toeplitz strategy");
  opt->add_option("--out", opt_args.out, "strategy JSON path")->required();
  opt->add_option("--trace", opt_args.trace_path,
                  "per-iteration CSV (iteration,loss,grad_norm)");
  opt->add_option("--max-iters", opt_args.max_iters, "iteration budget");
  opt->add_option("--rel-tol", opt_args.rel_tol, "relative loss tolerance");
  opt->add_option("--grad-mode", opt_args.grad_mode, "analytic|fd");

  EvaluateArgs eval_args;
  auto* eval = app.add_subcommand("evaluate",
                                  "Evaluate the expected error of a strategy");
  eval->add_option("--strategy", eval_args.strategy_path, "strategy JSON")
      ->required();
  eval->add_option("--workload", eval_args.workload, "prefix|toeplitz");
  eval->add_option("--workload-coeffs", eval_args.workload_coeffs,
                   "toeplitz workload coefficients")
      ->delimiter(',');
  eval->add_option("--metric", eval_args.metric, "total|max|mean|per_query");
  eval->add_option("--sigma", eval_args.sigma, "noise multiplier for rmse");
  eval->add_flag("--cross-check", eval_args.cross_check,
                 "compare closed-form and generic per-query paths");
  eval->add_option("--out", eval_args.out, "write report JSON here");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand(
      "sweep", "Optimize and calibrate across band counts");
  sweep->add_option("--epsilon", sweep_args.epsilon, "privacy epsilon")
      ->required();
  sweep->add_option("--delta", sweep_args.delta, "privacy delta")->required();
  sweep->add_option("--n", sweep_args.n, "training iterations")->required();
  sweep->add_option("--k", sweep_args.k, "epochs (participations)")
      ->required();
  sweep->add_option("--class", sweep_args.klass, "toeplitz|banded");
  sweep->add_option("--bs", sweep_args.bs, "band candidates")->delimiter(',');
  sweep->add_option("--out", sweep_args.out, "sweep CSV path")->required();
  sweep->add_option("--max-iters", sweep_args.max_iters, "iteration budget");
  sweep->add_option("--rel-tol", sweep_args.rel_tol,
                    "relative loss tolerance");
  sweep->add_option("--grad-mode", sweep_args.grad_mode, "analytic|fd");

  GenNoiseArgs gen_args;
  auto* gen = app.add_subcommand("gen-noise",
                                 "Generate the correlated noise stream");
  gen->add_option("--strategy", gen_args.strategy_path, "strategy JSON")
      ->required();
  gen->add_option("--d", gen_args.d, "model dimension")->required();
  gen->add_option("--sigma", gen_args.sigma, "noise multiplier");
  gen->add_option("--seed", gen_args.seed, "64-bit master seed");
  gen->add_option("--shard-index", gen_args.shard_index, "shard index");
  gen->add_option("--shard-count", gen_args.shard_count, "shard count");
  gen->add_option("--steps", gen_args.steps, "rows to emit (default all)");
  gen->add_option("--out", gen_args.out, "output path or - for stdout")
      ->required();
  gen->add_option("--format", gen_args.format, "bin|csv");
  gen->add_flag("--verify", gen_args.verify, "run the round-trip check");

  for (auto* sub : {opt, eval, sweep, gen}) {
    sub->add_option("--threads", threads, "worker threads (0 = default)");
    sub->add_option("--config", config_path,
                    "JSON file supplying any of the flags above");
  }

  try {
    const std::vector<std::string> args = inject_config(argc, argv);
    std::vector<const char*> cargs;
    cargs.push_back(argv[0]);
    for (const auto& s : args) cargs.push_back(s.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());

    bandmf::parallel::set_threads(threads);
    if (opt->parsed()) return run_optimize(opt_args);
    if (eval->parsed()) return run_evaluate(eval_args);
    if (sweep->parsed()) return run_sweep(sweep_args);
    if (gen->parsed()) return run_gen_noise(gen_args);
    std::cerr << app.help() << "\n";
    return kExitUsage;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bandmf::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bandmf::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const bandmf::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}
