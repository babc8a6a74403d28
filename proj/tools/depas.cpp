// Command-line front end: parameter tuning (min-n / min-delta), sweep tables
// for plotting, workload-trace simulation, and empirical-vs-exact
// verification of the correctness probability.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "depas/depas.hpp"

namespace {

using nlohmann::json;

enum class OutputFormat { text, json, csv };

OutputFormat parse_format(const std::string& name) {
  if (name == "text") return OutputFormat::text;
  if (name == "json" || name == "json-like") return OutputFormat::json;
  if (name == "csv") return OutputFormat::csv;
  throw CLI::ValidationError("--format", "unknown format '" + name + "'");
}

std::string fmt(const char* spec, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, value);
  return buf;
}

std::string fmt_u64(std::uint64_t value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%" PRIu64, value);
  return buf;
}

double round3(double value) { return std::round(value * 1000.0) / 1000.0; }

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  std::random_device rd;
  return (std::uint64_t(rd()) << 32) ^ std::uint64_t(rd());
}

struct TuneOpts {
  double l0 = 0.8;
  double p0 = 0.99;
  double sn = 0.1;
  double seps = 1e-3;
  double sp = 1e-3;
  std::string method = "chernoff";
  std::string format = "text";
  int repeat = 1;
  double delta = 0.0;   // min-n
  long long nodes = 0;  // min-delta
};

void add_tuning_flags(CLI::App* cmd, TuneOpts& opt) {
  cmd->add_option("--l0", opt.l0, "Desired load, fraction of node capacity")
      ->capture_default_str();
  cmd->add_option("--p0", opt.p0, "Minimum correctness probability")->capture_default_str();
  cmd->add_option("--sn", opt.sn, "Node-count search tolerance")->capture_default_str();
  cmd->add_option("--seps", opt.seps, "Band-width search tolerance")->capture_default_str();
  cmd->add_option("--sp", opt.sp, "Rescaled-load sweep step")->capture_default_str();
  cmd->add_option("--method", opt.method, "Tuning method")
      ->check(CLI::IsMember({"chernoff", "binomial", "both"}))
      ->capture_default_str();
  cmd->add_option("--format", opt.format, "Output format")
      ->check(CLI::IsMember({"text", "json", "json-like", "csv"}))
      ->capture_default_str();
  cmd->add_option("--repeat", opt.repeat, "Average wall time over this many runs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

struct MethodRun {
  std::string method;
  depas::TuningResult result;
};

std::string diagnostics_blob(const depas::TuningDiagnostics& diag) {
  if (const auto* d = std::get_if<depas::ChernoffMinNodesDiagnostics>(&diag)) {
    std::string out;
    if (d->n1_star) out += "n1_star=" + fmt("%.6f", *d->n1_star) + ";";
    out += "n2_star=" + fmt("%.6f", d->n2_star);
    return out;
  }
  if (const auto* d = std::get_if<depas::ChernoffMinDeltaDiagnostics>(&diag)) {
    return "p1_star=" + fmt("%.6f", d->p1_star) + ";p2_star=" + fmt("%.6f", d->p2_star) +
           ";p3_star=" + fmt("%.6f", d->p3_star) + ";eps1_star=" + fmt("%.6f", d->eps1_star) +
           ";eps2_star=" + fmt("%.6f", d->eps2_star) + ";eps3_star=" + fmt("%.6f", d->eps3_star);
  }
  const auto& d = std::get<depas::BinomialDiagnostics>(diag);
  return "search_start=" + fmt("%.6f", d.search_start) +
         ";candidates=" + std::to_string(d.candidates_checked);
}

json diagnostics_json(const depas::TuningDiagnostics& diag) {
  json out;
  if (const auto* d = std::get_if<depas::ChernoffMinNodesDiagnostics>(&diag)) {
    if (d->n1_star) out["n1_star"] = *d->n1_star;
    out["n2_star"] = d->n2_star;
  } else if (const auto* d = std::get_if<depas::ChernoffMinDeltaDiagnostics>(&diag)) {
    out["p1_star"] = d->p1_star;
    out["p2_star"] = d->p2_star;
    out["p3_star"] = d->p3_star;
    out["eps1_star"] = d->eps1_star;
    out["eps2_star"] = d->eps2_star;
    out["eps3_star"] = d->eps3_star;
  } else {
    const auto& b = std::get<depas::BinomialDiagnostics>(diag);
    out["search_start"] = b.search_start;
    out["candidates"] = b.candidates_checked;
  }
  return out;
}

depas::TuningRequest build_request(const TuneOpts& opt, bool min_n,
                                   depas::TuningMethod method) {
  depas::TuningRequest req;
  req.desired_load = opt.l0;
  req.min_correctness = opt.p0;
  if (min_n) {
    req.fixed_delta = opt.delta;
  } else {
    req.fixed_nodes = opt.nodes;
  }
  req.node_precision = opt.sn;
  req.eps_precision = opt.seps;
  req.load_precision = opt.sp;
  req.method = method;
  return req;
}

depas::TuningResult run_repeated(const depas::TuningRequest& req, bool min_n, int repeat) {
  auto run_once = [&] {
    if (min_n) {
      return req.method == depas::TuningMethod::chernoff ? depas::chernoff_min_n(req)
                                                         : depas::binomial_min_n(req);
    }
    return req.method == depas::TuningMethod::chernoff ? depas::chernoff_min_delta(req)
                                                       : depas::binomial_min_delta(req);
  };
  depas::TuningResult result = run_once();
  std::chrono::duration<double> total = result.wall_time;
  for (int i = 1; i < repeat; ++i) {
    result = run_once();
    total += result.wall_time;
  }
  result.wall_time = total / double(repeat);
  return result;
}

std::string tuning_config_line(const TuneOpts& opt, bool min_n) {
  std::string line = std::string("command=") + (min_n ? "min-n" : "min-delta") +
                     " l0=" + fmt("%.6f", opt.l0) + " p0=" + fmt("%.6f", opt.p0);
  if (min_n) {
    line += " delta=" + fmt("%.6f", opt.delta);
  } else {
    line += " n=" + std::to_string(opt.nodes);
  }
  line += " sn=" + fmt("%g", opt.sn) + " seps=" + fmt("%g", opt.seps) +
          " sp=" + fmt("%g", opt.sp) + " method=" + opt.method + " format=" + opt.format +
          " repeat=" + std::to_string(opt.repeat);
  return line;
}

json tuning_config_json(const TuneOpts& opt, bool min_n) {
  json cfg{{"command", min_n ? "min-n" : "min-delta"},
           {"l0", opt.l0},
           {"p0", opt.p0},
           {"sn", opt.sn},
           {"seps", opt.seps},
           {"sp", opt.sp},
           {"method", opt.method},
           {"format", opt.format},
           {"repeat", opt.repeat}};
  if (min_n) {
    cfg["delta"] = opt.delta;
  } else {
    cfg["n"] = opt.nodes;
  }
  return cfg;
}

int emit_tuning(const TuneOpts& opt, bool min_n, const std::vector<MethodRun>& runs) {
  const OutputFormat format = parse_format(opt.format);
  auto value_text = [&](const depas::TuningResult& r) {
    return min_n ? std::to_string(static_cast<long long>(r.value)) : fmt("%.3f", r.value);
  };
  if (format == OutputFormat::text) {
    std::cout << "config: " << tuning_config_line(opt, min_n) << "\n";
    for (const MethodRun& run : runs) {
      std::cout << run.method << ": " << (min_n ? "n_star=" : "delta_star=")
                << value_text(run.result) << " " << diagnostics_blob(run.result.diagnostics)
                << " wall_s=" << fmt("%.3f", run.result.wall_time.count()) << "\n";
    }
  } else if (format == OutputFormat::csv) {
    std::cout << "# config: " << tuning_config_line(opt, min_n) << "\n";
    std::cout << "method," << (min_n ? "n_star" : "delta_star") << ",wall_s,diagnostics\n";
    for (const MethodRun& run : runs) {
      std::cout << run.method << "," << value_text(run.result) << ","
                << fmt("%.3f", run.result.wall_time.count()) << ","
                << diagnostics_blob(run.result.diagnostics) << "\n";
    }
  } else {
    json doc{{"config", tuning_config_json(opt, min_n)}, {"results", json::array()}};
    for (const MethodRun& run : runs) {
      json entry{{"method", run.method},
                 {"diagnostics", diagnostics_json(run.result.diagnostics)},
                 {"wall_s", run.result.wall_time.count()}};
      if (min_n) {
        entry["n_star"] = static_cast<long long>(run.result.value);
      } else {
        entry["delta_star"] = round3(run.result.value);
        entry["delta_star_full"] = run.result.value;
      }
      doc["results"].push_back(entry);
    }
    std::cout << doc.dump(2) << "\n";
  }
  return 0;
}

int cmd_tune(const TuneOpts& opt, bool min_n) {
  std::vector<MethodRun> runs;
  if (opt.method == "chernoff" || opt.method == "both") {
    runs.push_back({"chernoff",
                    run_repeated(build_request(opt, min_n, depas::TuningMethod::chernoff),
                                 min_n, opt.repeat)});
  }
  if (opt.method == "binomial" || opt.method == "both") {
    runs.push_back({"binomial",
                    run_repeated(build_request(opt, min_n, depas::TuningMethod::binomial),
                                 min_n, opt.repeat)});
  }
  return emit_tuning(opt, min_n, runs);
}

struct SweepOpts {
  std::string param;
  double from = 0.0;
  double to = 0.0;
  double step = 0.0;
  double l0 = 0.8;
  double p0 = 0.99;
  double sn = 0.1;
  double seps = 1e-3;
  double sp = 1e-3;
  std::string format = "csv";
};

int cmd_sweep(const SweepOpts& opt) {
  if (!(opt.step > 0.0)) throw std::invalid_argument("sweep: step must be positive");
  if (opt.from > opt.to + 1e-12) throw std::invalid_argument("sweep: empty range");

  std::vector<double> points;
  for (long long k = 0;; ++k) {
    const double v = opt.from + double(k) * opt.step;
    if (v > opt.to + 1e-9 * std::max(1.0, std::abs(opt.to))) break;
    points.push_back(v);
  }
  if (points.empty()) throw std::invalid_argument("sweep: empty range");

  const bool by_delta = opt.param == "delta";
  const std::string config =
      "command=sweep param=" + opt.param + " from=" + fmt("%g", opt.from) +
      " to=" + fmt("%g", opt.to) + " step=" + fmt("%g", opt.step) + " l0=" + fmt("%.6f", opt.l0) +
      " p0=" + fmt("%.6f", opt.p0) + " sn=" + fmt("%g", opt.sn) + " seps=" + fmt("%g", opt.seps) +
      " sp=" + fmt("%g", opt.sp) + " format=" + opt.format;
  const std::string header =
      by_delta ? "delta,chernoff_n,binomial_n" : "n,chernoff_delta,binomial_delta";

  struct Row {
    double point;
    depas::TuningResult chernoff;
    depas::TuningResult binomial;
  };
  std::vector<Row> rows;
  rows.reserve(points.size());
  for (double point : points) {
    TuneOpts base;
    base.l0 = opt.l0;
    base.p0 = opt.p0;
    base.sn = opt.sn;
    base.seps = opt.seps;
    base.sp = opt.sp;
    if (by_delta) {
      base.delta = point;
    } else {
      base.nodes = static_cast<long long>(std::llround(point));
      if (base.nodes < 1) throw std::invalid_argument("sweep: n must be positive");
    }
    const auto chern = run_repeated(build_request(base, by_delta, depas::TuningMethod::chernoff),
                                    by_delta, 1);
    const auto binom = run_repeated(build_request(base, by_delta, depas::TuningMethod::binomial),
                                    by_delta, 1);
    rows.push_back(Row{point, chern, binom});
  }

  const OutputFormat format = parse_format(opt.format);
  auto point_text = [&](double v) {
    return by_delta ? fmt("%.3f", v) : std::to_string(static_cast<long long>(std::llround(v)));
  };
  auto value_text = [&](const depas::TuningResult& r) {
    return by_delta ? std::to_string(static_cast<long long>(r.value)) : fmt("%.3f", r.value);
  };
  if (format == OutputFormat::json) {
    json doc{{"config", json{{"command", "sweep"},
                             {"param", opt.param},
                             {"from", opt.from},
                             {"to", opt.to},
                             {"step", opt.step},
                             {"l0", opt.l0},
                             {"p0", opt.p0},
                             {"sn", opt.sn},
                             {"seps", opt.seps},
                             {"sp", opt.sp},
                             {"format", opt.format}}},
             {"rows", json::array()}};
    for (const Row& row : rows) {
      json entry;
      if (by_delta) {
        entry["delta"] = row.point;
        entry["chernoff_n"] = static_cast<long long>(row.chernoff.value);
        entry["binomial_n"] = static_cast<long long>(row.binomial.value);
      } else {
        entry["n"] = static_cast<long long>(std::llround(row.point));
        entry["chernoff_delta"] = round3(row.chernoff.value);
        entry["binomial_delta"] = round3(row.binomial.value);
        entry["chernoff_delta_full"] = row.chernoff.value;
        entry["binomial_delta_full"] = row.binomial.value;
      }
      doc["rows"].push_back(entry);
    }
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << (format == OutputFormat::csv ? "# config: " : "config: ") << config << "\n";
    std::cout << header << "\n";
    for (const Row& row : rows) {
      std::cout << point_text(row.point) << "," << value_text(row.chernoff) << ","
                << value_text(row.binomial) << "\n";
    }
  }
  return 0;
}

struct SimulateOpts {
  std::string trace;
  long long n0 = 0;
  double l0 = 0.8;
  double delta = 0.0;
  long long cycles = 0;
  std::optional<std::uint64_t> seed;
  std::string out = "-";
};

int cmd_simulate(const SimulateOpts& opt) {
  const depas::WorkloadTrace trace = depas::load_workload_trace(opt.trace);
  const depas::ScalingPolicy policy(opt.l0, opt.delta);
  const std::uint64_t seed = resolve_seed(opt.seed);
  const depas::SimulationReport report =
      depas::run_workload(trace, depas::SystemState{opt.n0, trace.entries.front().workload},
                          policy, seed, opt.cycles);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (opt.out != "-") {
    file.open(opt.out);
    if (!file) throw std::runtime_error("simulate: cannot write '" + opt.out + "'");
    out = &file;
  }
  *out << "# config: command=simulate trace=" << opt.trace << " n0=" << opt.n0
       << " l0=" << fmt("%.6f", opt.l0) << " delta=" << fmt("%.6f", opt.delta)
       << " cycles=" << opt.cycles << " seed=" << fmt_u64(seed) << "\n";
  *out << "cycle,n_before,load_before,additions,removals,n_after,load_after,in_interval\n";
  for (const depas::CycleRecord& rec : report.cycles) {
    *out << rec.cycle << "," << rec.nodes_before << "," << fmt("%.6f", rec.load_before) << ","
         << rec.outcome.total_additions() << "," << rec.outcome.removals << ","
         << rec.nodes_after() << "," << fmt("%.6f", rec.load_after()) << ","
         << (rec.outcome.in_interval ? 1 : 0) << "\n";
  }
  *out << "# summary: cycles=" << report.cycles.size()
       << " in_interval_fraction=" << fmt("%.6f", report.summary.in_interval_fraction)
       << " total_additions=" << report.summary.total_additions
       << " total_removals=" << report.summary.total_removals
       << " oscillations=" << report.summary.oscillations << "\n";
  return 0;
}

struct VerifyOpts {
  long long n = 0;
  double load = 0.0;
  double l0 = 0.8;
  double delta = 0.0;
  long long trials = 100000;
  std::optional<std::uint64_t> seed;
  std::string format = "text";
};

int cmd_verify(const VerifyOpts& opt) {
  const depas::ScalingPolicy policy(opt.l0, opt.delta);
  const std::uint64_t seed = resolve_seed(opt.seed);
  const depas::CorrectnessEstimate estimate =
      depas::estimate_correctness(opt.n, opt.load, policy, opt.trials, seed);
  const depas::CorrectnessEvaluation eval = depas::evaluate_correctness(opt.load, policy, opt.n);
  const double exact = *eval.exact;

  const bool dominance =
      !eval.chernoff_lower.has_value() || exact >= *eval.chernoff_lower - 1e-12;
  const double sigma = std::sqrt(exact * (1.0 - exact) / double(opt.trials));
  const bool agreement = std::abs(estimate.probability - exact) <= 3.0 * sigma;

  std::string bound_kind = "none";
  if (eval.which_bound == depas::BoundKind::b1) bound_kind = "b1";
  if (eval.which_bound == depas::BoundKind::b2) bound_kind = "b2";

  const OutputFormat format = parse_format(opt.format);
  const std::string config = "command=verify n=" + std::to_string(opt.n) +
                             " load=" + fmt("%.6f", opt.load) + " l0=" + fmt("%.6f", opt.l0) +
                             " delta=" + fmt("%.6f", opt.delta) +
                             " trials=" + std::to_string(opt.trials) + " seed=" + fmt_u64(seed) +
                             " format=" + opt.format;
  if (format == OutputFormat::text) {
    std::cout << "config: " << config << "\n";
    std::cout << "empirical=" << fmt("%.6f", estimate.probability)
              << " std_error=" << fmt("%.6f", estimate.std_error) << "\n";
    std::cout << "exact=" << fmt("%.6f", exact) << "\n";
    if (eval.chernoff_lower) {
      std::cout << "bound=" << bound_kind << " value=" << fmt("%.6f", *eval.chernoff_lower)
                << "\n";
    } else {
      std::cout << "bound=none reason=point outside the domains of both bounds\n";
    }
    std::cout << "dominance=" << (dominance ? "PASS" : "FAIL")
              << " agreement=" << (agreement ? "PASS" : "FAIL") << "\n";
  } else if (format == OutputFormat::csv) {
    std::cout << "# config: " << config << "\n";
    std::cout << "empirical,std_error,exact,bound_kind,bound,dominance,agreement\n";
    std::cout << fmt("%.6f", estimate.probability) << "," << fmt("%.6f", estimate.std_error)
              << "," << fmt("%.6f", exact) << "," << bound_kind << ","
              << (eval.chernoff_lower ? fmt("%.6f", *eval.chernoff_lower) : std::string()) << ","
              << (dominance ? "PASS" : "FAIL") << "," << (agreement ? "PASS" : "FAIL") << "\n";
  } else {
    json doc{{"config", json{{"command", "verify"},
                             {"n", opt.n},
                             {"load", opt.load},
                             {"l0", opt.l0},
                             {"delta", opt.delta},
                             {"trials", opt.trials},
                             {"seed", seed},
                             {"format", opt.format}}},
             {"empirical", estimate.probability},
             {"std_error", estimate.std_error},
             {"exact", exact},
             {"bound_kind", bound_kind},
             {"dominance", dominance ? "PASS" : "FAIL"},
             {"agreement", agreement ? "PASS" : "FAIL"}};
    if (eval.chernoff_lower) doc["bound"] = *eval.chernoff_lower;
    std::cout << doc.dump(2) << "\n";
  }
  return dominance && agreement ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic auto-scaling tuning and simulation"};
  app.require_subcommand(1);

  TuneOpts min_n_opts;
  CLI::App* min_n = app.add_subcommand("min-n", "Minimum node count for a fixed band width");
  min_n->add_option("--delta", min_n_opts.delta, "Band half-width")->required();
  add_tuning_flags(min_n, min_n_opts);

  TuneOpts min_delta_opts;
  CLI::App* min_delta =
      app.add_subcommand("min-delta", "Minimum band width for a fixed node count");
  min_delta->add_option("--n", min_delta_opts.nodes, "Node count")->required();
  add_tuning_flags(min_delta, min_delta_opts);

  SweepOpts sweep_opts;
  CLI::App* sweep = app.add_subcommand("sweep", "Tabulate both methods across a parameter range");
  sweep->add_option("--param", sweep_opts.param, "Swept parameter")
      ->required()
      ->check(CLI::IsMember({"delta", "n"}));
  sweep->add_option("--from", sweep_opts.from, "Range start")->required();
  sweep->add_option("--to", sweep_opts.to, "Range end (inclusive)")->required();
  sweep->add_option("--step", sweep_opts.step, "Range step")->required();
  sweep->add_option("--l0", sweep_opts.l0, "Desired load")->capture_default_str();
  sweep->add_option("--p0", sweep_opts.p0, "Minimum correctness probability")
      ->capture_default_str();
  sweep->add_option("--sn", sweep_opts.sn, "Node-count search tolerance")->capture_default_str();
  sweep->add_option("--seps", sweep_opts.seps, "Band-width search tolerance")
      ->capture_default_str();
  sweep->add_option("--sp", sweep_opts.sp, "Rescaled-load sweep step")->capture_default_str();
  sweep->add_option("--format", sweep_opts.format, "Output format")
      ->check(CLI::IsMember({"text", "json", "json-like", "csv"}))
      ->capture_default_str();

  SimulateOpts sim_opts;
  CLI::App* simulate = app.add_subcommand("simulate", "Replay a workload trace");
  simulate->add_option("--trace", sim_opts.trace, "Workload trace file")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--n0", sim_opts.n0, "Initial node count")
      ->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--l0", sim_opts.l0, "Desired load")->capture_default_str();
  simulate->add_option("--delta", sim_opts.delta, "Band half-width")->required();
  simulate->add_option("--cycles", sim_opts.cycles, "Cycles to run (0 = trace length)")
      ->capture_default_str();
  simulate->add_option("--seed", sim_opts.seed, "Random seed (default: from entropy)");
  simulate->add_option("--out", sim_opts.out, "Output file ('-' = stdout)")
      ->capture_default_str();

  VerifyOpts verify_opts;
  CLI::App* verify =
      app.add_subcommand("verify", "Empirical vs exact vs bounded correctness probability");
  verify->add_option("--n", verify_opts.n, "Node count")->required()->check(CLI::PositiveNumber);
  verify->add_option("--load", verify_opts.load, "Average load to test")->required();
  verify->add_option("--l0", verify_opts.l0, "Desired load")->capture_default_str();
  verify->add_option("--delta", verify_opts.delta, "Band half-width")->required();
  verify->add_option("--trials", verify_opts.trials, "Monte Carlo trials")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  verify->add_option("--seed", verify_opts.seed, "Random seed (default: from entropy)");
  verify->add_option("--format", verify_opts.format, "Output format")
      ->check(CLI::IsMember({"text", "json", "json-like", "csv"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (min_n->parsed()) return cmd_tune(min_n_opts, true);
    if (min_delta->parsed()) return cmd_tune(min_delta_opts, false);
    if (sweep->parsed()) return cmd_sweep(sweep_opts);
    if (simulate->parsed()) return cmd_simulate(sim_opts);
    if (verify->parsed()) return cmd_verify(verify_opts);
  } catch (const depas::infeasible_request& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const depas::infeasible_sweep& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
