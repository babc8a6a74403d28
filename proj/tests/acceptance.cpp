// Release gate: runs every acceptance check at its pinned tolerance and
// prints one PASS/FAIL line per criterion. Exit code is the failure count.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "depas/depas.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

int failures = 0;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(int index, const std::string& name, bool ok, const std::string& detail,
            double elapsed) {
  std::printf("[%s] %2d %-28s %s (%.1fs)\n", ok ? "PASS" : "FAIL", index, name.c_str(),
              detail.c_str(), elapsed);
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <typename Fn>
void criterion(int index, const std::string& name, Fn&& body) {
  const auto start = Clock::now();
  try {
    std::string detail;
    const bool ok = body(detail);
    report(index, name, ok, detail, seconds_since(start));
  } catch (const std::exception& e) {
    report(index, name, false, std::string("exception: ") + e.what(), seconds_since(start));
  }
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

constexpr double kDesiredLoad = 0.8;
constexpr double kThreshold = 0.99;

depas::TuningRequest make_request(std::optional<double> delta, std::optional<long long> nodes,
                                  depas::TuningMethod method, double load_precision = 1e-3) {
  depas::TuningRequest req;
  req.desired_load = kDesiredLoad;
  req.min_correctness = kThreshold;
  req.fixed_delta = delta;
  req.fixed_nodes = nodes;
  req.method = method;
  req.load_precision = load_precision;
  return req;
}

// Golden results shared between criteria 1/2 and 4.
struct Golden {
  double value;
  double seconds;
};
std::optional<Golden> g_chern_n_005, g_binom_n_005, g_chern_n_015, g_binom_n_015;
std::optional<Golden> g_chern_d_100, g_binom_d_100, g_chern_d_1000, g_binom_d_1000;

Golden run_tuning(std::optional<double> delta, std::optional<long long> nodes,
                  depas::TuningMethod method) {
  const depas::TuningRequest req = make_request(delta, nodes, method);
  const depas::TuningResult result =
      delta ? (method == depas::TuningMethod::chernoff ? depas::chernoff_min_n(req)
                                                       : depas::binomial_min_n(req))
            : (method == depas::TuningMethod::chernoff ? depas::chernoff_min_delta(req)
                                                       : depas::binomial_min_delta(req));
  return Golden{result.value, result.wall_time.count()};
}

// Exact probability >= threshold across the whole verification load grid.
bool guarantee_holds(double delta, long long n, std::string& why) {
  const depas::ScalingPolicy policy(kDesiredLoad, delta);
  const double step = 1e-3 * kDesiredLoad;
  for (long long k = 0;; ++k) {
    const double load = kDesiredLoad + delta + double(k) * step;
    if (load >= 2.0 * kDesiredLoad - 1e-12) return true;
    if (depas::binomial_correctness(load, policy, n) < kThreshold) {
      why = "violation at load=" + fmt("%.6f", load) + " delta=" + fmt("%.4f", delta) +
            " n=" + std::to_string(n);
      return false;
    }
  }
}

struct CliRun {
  int exit_code;
  std::string output;
};

CliRun run_cli(const std::string& args, const fs::path& dir, int tag) {
  const fs::path capture = dir / ("cli" + std::to_string(tag) + ".txt");
  const std::string cmd =
      std::string(DEPAS_CLI_PATH) + " " + args + " >" + capture.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream file(capture, std::ios::binary);
  std::ostringstream body;
  body << file.rdbuf();
  return CliRun{WEXITSTATUS(status), body.str()};
}

}  // namespace

int main() {
  criterion(1, "golden min-n", [&](std::string& detail) {
    const Golden cn005 = run_tuning(0.05, std::nullopt, depas::TuningMethod::chernoff);
    const Golden bn005 = run_tuning(0.05, std::nullopt, depas::TuningMethod::binomial);
    const Golden cn015 = run_tuning(0.15, std::nullopt, depas::TuningMethod::chernoff);
    const Golden bn015 = run_tuning(0.15, std::nullopt, depas::TuningMethod::binomial);
    g_chern_n_005 = cn005;
    g_binom_n_005 = bn005;
    g_chern_n_015 = cn015;
    g_binom_n_015 = bn015;
    detail = "chernoff(0.05)=" + std::to_string((long long)cn005.value) +
             " binomial(0.05)=" + std::to_string((long long)bn005.value) +
             " chernoff(0.15)=" + std::to_string((long long)cn015.value) +
             " binomial(0.15)=" + std::to_string((long long)bn015.value) +
             " binomial_wall=" + fmt("%.2f", bn005.seconds) + "s";
    return std::abs(cn005.value - 342.0) <= 3.0 && std::abs(bn005.value - 224.0) <= 3.0 &&
           std::abs(cn015.value - 41.0) <= 1.0 && std::abs(bn015.value - 30.0) <= 1.0 &&
           cn005.seconds < 1.0 && cn015.seconds < 1.0 && bn005.seconds < 600.0;
  });

  criterion(2, "golden min-delta", [&](std::string& detail) {
    const Golden cd100 = run_tuning(std::nullopt, 100, depas::TuningMethod::chernoff);
    const Golden bd100 = run_tuning(std::nullopt, 100, depas::TuningMethod::binomial);
    const Golden cd1000 = run_tuning(std::nullopt, 1000, depas::TuningMethod::chernoff);
    const Golden bd1000 = run_tuning(std::nullopt, 1000, depas::TuningMethod::binomial);
    g_chern_d_100 = cd100;
    g_binom_d_100 = bd100;
    g_chern_d_1000 = cd1000;
    g_binom_d_1000 = bd1000;
    detail = "chernoff(100)=" + fmt("%.4f", cd100.value) +
             " binomial(100)=" + fmt("%.4f", bd100.value) +
             " chernoff(1000)=" + fmt("%.4f", cd1000.value) +
             " binomial(1000)=" + fmt("%.4f", bd1000.value) +
             " binomial_wall=" + fmt("%.2f", bd1000.seconds) + "s";
    return std::abs(cd100.value - 0.094) <= 0.002 && std::abs(bd100.value - 0.075) <= 0.002 &&
           std::abs(cd1000.value - 0.030) <= 0.002 && std::abs(bd1000.value - 0.023) <= 0.002 &&
           cd100.seconds < 1.0 && cd1000.seconds < 1.0 && bd1000.seconds < 900.0;
  });

  criterion(3, "dominance chain on sweeps", [&](std::string& detail) {
    int checked = 0;
    double prev_chern = 1e300, prev_binom = 1e300;
    for (int k = 0; k <= 20; ++k) {
      const double delta = 0.05 + 0.005 * k;
      const double chern = run_tuning(delta, std::nullopt, depas::TuningMethod::chernoff).value;
      const double binom = run_tuning(delta, std::nullopt, depas::TuningMethod::binomial).value;
      const double cheby = double(depas::chebyshev_min_n(delta / kDesiredLoad, kThreshold));
      if (!(binom <= chern && chern <= cheby)) {
        detail = "min-n dominance broken at delta=" + fmt("%.3f", delta);
        return false;
      }
      // Trend is a side invariant; 1e-9 absorbs rounding dust between grid
      // values assembled from different anchors.
      if (!(chern <= prev_chern + 1e-9 && binom <= prev_binom + 1e-9)) {
        detail = "min-n trend broken at delta=" + fmt("%.3f", delta);
        return false;
      }
      prev_chern = chern;
      prev_binom = binom;
      ++checked;
    }
    double prev_cd = 1e300, prev_bd = 1e300;
    for (long long n = 25; n <= 1000; n += 5) {
      const double cd = run_tuning(std::nullopt, n, depas::TuningMethod::chernoff).value;
      const double bd = run_tuning(std::nullopt, n, depas::TuningMethod::binomial).value;
      if (!(bd <= cd)) {
        detail = "min-delta dominance broken at n=" + std::to_string(n);
        return false;
      }
      if (!(cd <= prev_cd + 1e-9 && bd <= prev_bd + 1e-9)) {
        detail = "min-delta trend broken at n=" + std::to_string(n);
        return false;
      }
      prev_cd = cd;
      prev_bd = bd;
      ++checked;
    }
    detail = std::to_string(checked) + " sweep points, zero violations";
    return true;
  });

  criterion(4, "guarantee on verification grid", [&](std::string& detail) {
    if (!g_chern_n_005 || !g_binom_n_005 || !g_chern_n_015 || !g_binom_n_015 || !g_chern_d_100 ||
        !g_binom_d_100 || !g_chern_d_1000 || !g_binom_d_1000) {
      detail = "golden results unavailable";
      return false;
    }
    const std::vector<std::pair<double, long long>> cases = {
        {0.05, (long long)g_chern_n_005->value},    {0.05, (long long)g_binom_n_005->value},
        {0.15, (long long)g_chern_n_015->value},    {0.15, (long long)g_binom_n_015->value},
        {g_chern_d_100->value, 100},                {g_binom_d_100->value, 100},
        {g_chern_d_1000->value, 1000},              {g_binom_d_1000->value, 1000},
    };
    for (const auto& [delta, n] : cases) {
      if (!guarantee_holds(delta, n, detail)) return false;
    }
    detail = std::to_string(cases.size()) + " golden results, full load grid, zero violations";
    return true;
  });

  criterion(5, "bound soundness on random triples", [&](std::string& detail) {
    const auto start = Clock::now();
    depas::Xoshiro256 rng(987654321);
    int tested = 0;
    for (int rep = 0; rep < 250; ++rep) {
      const double eps = 0.02 + (1.0 / 3.0 - 0.03) * rng.uniform01();
      const double p = eps + (1.0 - 3.0 * eps) * rng.uniform01();
      const long long n = 1 + (long long)(rng.next() % 400);
      const depas::ScalingPolicy policy(kDesiredLoad, eps * kDesiredLoad);
      const double exact =
          depas::binomial_correctness(kDesiredLoad * (1.0 + p), policy, n);
      const double bound = depas::bound_b1({p, eps}, double(n));
      if (exact < bound - 1e-10) {
        detail = "two-sided bound above exact at p=" + fmt("%.6f", p) +
                 " eps=" + fmt("%.6f", eps) + " n=" + std::to_string(n);
        return false;
      }
      ++tested;
    }
    for (int rep = 0; rep < 250; ++rep) {
      const double eps = 0.02 + 0.93 * rng.uniform01();
      const double lo = std::max(eps, 1.0 - 2.0 * eps);
      const double p = lo + (0.999 - lo) * rng.uniform01();
      const long long n = 1 + (long long)(rng.next() % 400);
      const depas::ScalingPolicy policy(kDesiredLoad, eps * kDesiredLoad);
      const double exact =
          depas::binomial_correctness(kDesiredLoad * (1.0 + p), policy, n);
      const double bound = depas::bound_b2({p, eps}, double(n));
      if (exact < bound - 1e-10) {
        detail = "one-sided bound above exact at p=" + fmt("%.6f", p) +
                 " eps=" + fmt("%.6f", eps) + " n=" + std::to_string(n);
        return false;
      }
      ++tested;
    }
    detail = std::to_string(tested) + " triples, zero violations";
    return tested >= 500 && seconds_since(start) < 30.0;
  });

  criterion(6, "exhaustive enumeration oracle", [&](std::string& detail) {
    const auto start = Clock::now();
    depas::Xoshiro256 rng(13579);
    int pairs = 0;
    double worst = 0.0;
    for (int rep = 0; rep < 60; ++rep) {
      const double delta = 0.02 + 0.7 * rng.uniform01();
      const double lo = kDesiredLoad + delta;
      const double load = lo + (1.6 - lo - 1e-6) * rng.uniform01();
      for (int n = 1; n <= 12; ++n) {
        const double expect = oracles::enumerated_correctness(load, kDesiredLoad, delta, n);
        const double got =
            depas::binomial_correctness(load, depas::ScalingPolicy(kDesiredLoad, delta), n);
        worst = std::max(worst, std::abs(got - expect));
        if (std::abs(got - expect) >= 1e-12) {
          detail = "mismatch " + fmt("%.3e", std::abs(got - expect)) +
                   " at load=" + fmt("%.6f", load) + " delta=" + fmt("%.6f", delta) +
                   " n=" + std::to_string(n);
          return false;
        }
      }
      ++pairs;
    }
    detail = std::to_string(pairs) + " pairs x n<=12, worst |diff|=" + fmt("%.2e", worst);
    return pairs >= 50 && seconds_since(start) < 60.0;
  });

  criterion(7, "monte carlo agreement", [&](std::string& detail) {
    const auto start = Clock::now();
    const long long trials = 100000;
    int points = 0, outliers = 0;
    double worst_sigma = 0.0;
    for (long long n : {2, 5, 10, 50, 100}) {
      for (double p : {0.1, 0.3, 0.5, 0.7}) {
        for (double eps : {0.1, 0.2}) {
          if (p < eps) continue;  // outside the addition regime
          const depas::ScalingPolicy policy(kDesiredLoad, eps * kDesiredLoad);
          const double load = kDesiredLoad * (1.0 + p);
          const double exact = depas::binomial_correctness(load, policy, n);
          const depas::CorrectnessEstimate est =
              depas::estimate_correctness(n, load, policy, trials, 0xDEA5 + n);
          const double sigma = std::sqrt(exact * (1.0 - exact) / double(trials));
          const double gap = std::abs(est.probability - exact);
          if (sigma == 0.0 ? gap > 0.0 : gap > 3.0 * sigma) ++outliers;
          if (sigma > 0.0) worst_sigma = std::max(worst_sigma, gap / sigma);
          ++points;
        }
      }
    }
    const int allowed = int(std::ceil(0.01 * points));
    detail = std::to_string(points) + " points, " + std::to_string(outliers) +
             " beyond 3 sigma (allowed " + std::to_string(allowed) +
             "), worst=" + fmt("%.2f", worst_sigma) + " sigma";
    return outliers <= allowed && seconds_since(start) < 300.0;
  });

  criterion(8, "unbiased additions", [&](std::string& detail) {
    const long long cycles = 100000;
    const struct {
      long long n;
      double p;
    } cases[] = {{4, 0.5}, {100, 0.25}, {1000, 0.1}};
    detail.clear();
    for (const auto& c : cases) {
      const double delta = c.p * kDesiredLoad;  // band edge at the probed load
      const depas::ScalingPolicy policy(kDesiredLoad, delta);
      const depas::SystemState state{c.n, double(c.n) * kDesiredLoad * (1.0 + c.p)};
      depas::Xoshiro256 rng(0xABCD0000 + c.n);
      long long total = 0;
      for (long long i = 0; i < cycles; ++i) total += depas::run_cycle(state, policy, rng).additions;
      const double mean = double(total) / double(cycles);
      const double target = double(c.n) * c.p;
      const double sigma = std::sqrt(double(c.n) * c.p * (1.0 - c.p) / double(cycles));
      if (!detail.empty()) detail += " ";
      detail += "n=" + std::to_string(c.n) + ":" + fmt("%.4f", (mean - target) / sigma) + "sigma";
      if (std::abs(mean - target) > 4.0 * sigma) {
        detail += " EXCEEDS";
        return false;
      }
    }
    return true;
  });

  criterion(9, "load precision invariance", [&](std::string& detail) {
    const double precisions[] = {1e-3, 1e-4, 1e-5};
    long long n005[3], n015[3];
    long long d100[3], d1000[3];
    for (int i = 0; i < 3; ++i) {
      n005[i] = (long long)depas::chernoff_min_n(
                    make_request(0.05, std::nullopt, depas::TuningMethod::chernoff, precisions[i]))
                    .value;
      n015[i] = (long long)depas::chernoff_min_n(
                    make_request(0.15, std::nullopt, depas::TuningMethod::chernoff, precisions[i]))
                    .value;
      d100[i] = std::llround(
          depas::chernoff_min_delta(
              make_request(std::nullopt, 100, depas::TuningMethod::chernoff, precisions[i]))
              .value *
          1000.0);
      d1000[i] = std::llround(
          depas::chernoff_min_delta(
              make_request(std::nullopt, 1000, depas::TuningMethod::chernoff, precisions[i]))
              .value *
          1000.0);
    }
    detail = "n(0.05)=" + std::to_string(n005[0]) + " n(0.15)=" + std::to_string(n015[0]) +
             " delta(100)=0." + std::to_string(d100[0]) + " delta(1000)=0." +
             std::to_string(d1000[0]) + " across sp in {1e-3,1e-4,1e-5}";
    for (int i = 1; i < 3; ++i) {
      if (n005[i] != n005[0] || n015[i] != n015[0] || d100[i] != d100[0] ||
          d1000[i] != d1000[0]) {
        detail = "results drift with sp";
        return false;
      }
    }
    return true;
  });

  criterion(10, "cli determinism", [&](std::string& detail) {
    const fs::path dir = fs::temp_directory_path() / ("depas_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const fs::path trace = dir / "trace.csv";
    {
      std::ofstream out(trace);
      out << "cycle,workload\n0,8\n10,16\n30,6\n";
    }
    const std::string sim = "simulate --trace " + trace.string() +
                            " --n0 10 --l0 0.8 --delta 0.1 --cycles 40 --seed 4242";
    const CliRun sim1 = run_cli(sim, dir, 1);
    const CliRun sim2 = run_cli(sim, dir, 2);
    const std::string ver =
        "verify --n 100 --load 1.0 --l0 0.8 --delta 0.094 --trials 100000 --seed 4242";
    const CliRun ver1 = run_cli(ver, dir, 3);
    const CliRun ver2 = run_cli(ver, dir, 4);
    detail = "simulate " + std::string(sim1.output == sim2.output ? "identical" : "DIFFERS") +
             ", verify " + std::string(ver1.output == ver2.output ? "identical" : "DIFFERS");
    return sim1.exit_code == 0 && sim2.exit_code == 0 && ver1.exit_code == 0 &&
           ver2.exit_code == 0 && sim1.output == sim2.output && ver1.output == ver2.output;
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "OK" : "FAILED", failures);
  return failures;
}
