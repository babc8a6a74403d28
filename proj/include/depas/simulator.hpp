#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "depas/parallel.hpp"
#include "depas/policy.hpp"
#include "depas/probability.hpp"
#include "depas/random.hpp"

namespace depas {

// Node population plus aggregate demand, in units of one node's capacity.
// The population never drops below one node: an empty system could not run
// the decision rule at all.
struct SystemState {
  long long nodes;
  double workload;

  double average_load() const { return workload / double(nodes); }

  void validate() const {
    if (nodes < 1) throw std::domain_error("SystemState: node count must be positive");
    if (!(workload >= 0.0)) throw std::domain_error("SystemState: workload must be nonnegative");
  }
};

struct NodeAction {
  enum class Kind { none, add, remove };
  Kind kind = Kind::none;
  long long add_count = 0;
};

// One node's decision given the shared average load and its own uniform draw.
// Below the band the indicator is the removal probability; above it, the
// indicator's integer part is added unconditionally and its fractional part
// is the probability of one more.
inline NodeAction node_decision(double load, const ScalingPolicy& policy, double u) {
  if (!(load >= 0.0)) throw std::domain_error("node_decision: load must be nonnegative");
  if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("node_decision: draw outside [0,1)");
  if (load <= policy.lower()) {
    const double pi = probability_indicator(load, policy.desired_load);
    if (u < pi) return NodeAction{NodeAction::Kind::remove, 0};
    return NodeAction{};
  }
  if (load >= policy.upper()) {
    const double pi = probability_indicator(load, policy.desired_load);
    long long count = static_cast<long long>(std::floor(pi));
    if (u < pi - std::floor(pi)) ++count;
    if (count > 0) return NodeAction{NodeAction::Kind::add, count};
    return NodeAction{};
  }
  return NodeAction{};
}

// What one synchronized pass over the whole population did. `additions`
// counts only the coin-flip successes; the unconditional part is reported
// separately. A cycle is entirely scale-out, entirely scale-in, or idle.
struct CycleOutcome {
  long long additions = 0;
  long long deterministic_additions = 0;
  long long removals = 0;
  SystemState new_state{1, 0.0};
  bool in_interval = false;

  long long total_additions() const { return additions + deterministic_additions; }
};

// Every node evaluates the rule against the same exact average load with an
// independent draw; the resulting additions and removals land atomically at
// the cycle boundary and the workload carries over unchanged. The last node
// never removes itself.
inline CycleOutcome run_cycle(const SystemState& state, const ScalingPolicy& policy,
                              Xoshiro256& rng) {
  state.validate();
  const double load = state.average_load();
  long long added = 0;
  long long removed = 0;
  for (long long i = 0; i < state.nodes; ++i) {
    const NodeAction action = node_decision(load, policy, rng.uniform01());
    switch (action.kind) {
      case NodeAction::Kind::add:
        added += action.add_count;
        break;
      case NodeAction::Kind::remove:
        ++removed;
        break;
      case NodeAction::Kind::none:
        break;
    }
  }
  removed = std::min(removed, state.nodes - 1);

  CycleOutcome outcome;
  if (load >= policy.upper()) {
    outcome.deterministic_additions =
        state.nodes * static_cast<long long>(std::floor(probability_indicator(load, policy.desired_load)));
  }
  outcome.additions = added - outcome.deterministic_additions;
  outcome.removals = removed;
  outcome.new_state = SystemState{state.nodes + added - removed, state.workload};
  outcome.in_interval = policy.contains(outcome.new_state.average_load());
  return outcome;
}

struct CorrectnessEstimate {
  double probability;
  double std_error;
};

// Monte Carlo estimate of the correctness probability: independent single
// cycles from (n, workload = n*L), each on its own seed substream, counting
// how often the new average load lands strictly inside the band. Trials may
// run in parallel; the integer success count makes the reduction exact.
inline CorrectnessEstimate estimate_correctness(long long n, double load,
                                                const ScalingPolicy& policy, long long trials,
                                                std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("estimate_correctness: trials must be positive");
  if (n < 1) throw std::domain_error("estimate_correctness: n must be positive");
  if (!(load >= policy.upper() - detail::kDomainSlack && load < 2.0 * policy.desired_load)) {
    throw std::domain_error("estimate_correctness: load outside [L0+delta, 2*L0)");
  }
  std::atomic<long long> successes{0};
  detail::parallel_chunks(std::size_t(trials), [&](std::size_t begin, std::size_t end) {
    long long local = 0;
    for (std::size_t t = begin; t < end; ++t) {
      Xoshiro256 rng = Xoshiro256::substream(seed, t);
      const SystemState state{n, double(n) * load};
      if (run_cycle(state, policy, rng).in_interval) ++local;
    }
    successes.fetch_add(local, std::memory_order_relaxed);
  });
  const double q = double(successes.load()) / double(trials);
  return CorrectnessEstimate{q, std::sqrt(q * (1.0 - q) / double(trials))};
}

// Demand schedule: workload (in node-capacity units) taking effect at the
// given cycle and holding until the next entry.
struct WorkloadTrace {
  struct Entry {
    long long cycle;
    double workload;
  };
  std::vector<Entry> entries;
};

namespace detail {

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline double parse_double_field(const std::string& text, std::size_t lineno) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::runtime_error("workload trace: bad number '" + text + "' on line " +
                             std::to_string(lineno));
  }
  return value;
}

}  // namespace detail

// Plain-text trace: header `cycle,workload`, one row per cycle, strictly
// increasing cycle indices. Anything else is rejected.
inline WorkloadTrace parse_workload_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::strip_cr(line) != "cycle,workload") {
    throw std::runtime_error("workload trace: missing 'cycle,workload' header");
  }
  WorkloadTrace trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("workload trace: missing comma on line " + std::to_string(lineno));
    }
    const std::string cycle_text = line.substr(0, comma);
    long long cycle = 0;
    const auto res =
        std::from_chars(cycle_text.data(), cycle_text.data() + cycle_text.size(), cycle);
    if (res.ec != std::errc() || res.ptr != cycle_text.data() + cycle_text.size() || cycle < 0) {
      throw std::runtime_error("workload trace: bad cycle index on line " +
                               std::to_string(lineno));
    }
    const double workload = detail::parse_double_field(line.substr(comma + 1), lineno);
    if (!(workload >= 0.0)) {
      throw std::runtime_error("workload trace: negative workload on line " +
                               std::to_string(lineno));
    }
    if (!trace.entries.empty() && cycle <= trace.entries.back().cycle) {
      throw std::runtime_error("workload trace: cycle indices must increase (line " +
                               std::to_string(lineno) + ")");
    }
    trace.entries.push_back(WorkloadTrace::Entry{cycle, workload});
  }
  if (trace.entries.empty()) throw std::runtime_error("workload trace: no data rows");
  return trace;
}

inline WorkloadTrace load_workload_trace(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("workload trace: cannot open '" + path + "'");
  return parse_workload_trace(file);
}

struct CycleRecord {
  long long cycle;
  long long nodes_before;
  double load_before;
  CycleOutcome outcome;

  long long nodes_after() const { return outcome.new_state.nodes; }
  double load_after() const { return outcome.new_state.average_load(); }
};

struct SimulationSummary {
  double in_interval_fraction = 0.0;
  long long total_additions = 0;
  long long total_removals = 0;
  long long oscillations = 0;  // adjacent cycles with opposite-sign actions
};

inline SimulationSummary summarize(const std::vector<CycleRecord>& records) {
  SimulationSummary summary;
  long long inside = 0;
  int previous_sign = 0;
  for (const CycleRecord& rec : records) {
    inside += rec.outcome.in_interval ? 1 : 0;
    summary.total_additions += rec.outcome.total_additions();
    summary.total_removals += rec.outcome.removals;
    const int sign = rec.outcome.total_additions() > 0 ? 1 : rec.outcome.removals > 0 ? -1 : 0;
    if (sign != 0) {
      if (previous_sign != 0 && sign != previous_sign) ++summary.oscillations;
      previous_sign = sign;
    } else {
      previous_sign = 0;
    }
  }
  if (!records.empty()) {
    summary.in_interval_fraction = double(inside) / double(records.size());
  }
  return summary;
}

struct SimulationReport {
  std::vector<CycleRecord> cycles;
  SimulationSummary summary;
};

// Replays the trace cycle by cycle: the workload is a step function of the
// trace entries, each cycle runs the full population once, and the node
// count carries forward. Deterministic for a fixed seed. `total_cycles` of
// zero means "through the last trace entry".
inline SimulationReport run_workload(const WorkloadTrace& trace, const SystemState& initial,
                                     const ScalingPolicy& policy, std::uint64_t seed,
                                     long long total_cycles = 0) {
  if (trace.entries.empty()) throw std::runtime_error("run_workload: empty trace");
  initial.validate();
  const long long total = total_cycles > 0 ? total_cycles : trace.entries.back().cycle + 1;
  Xoshiro256 rng(seed);
  SimulationReport report;
  report.cycles.reserve(std::size_t(total));
  SystemState state = initial;
  std::size_t pos = 0;
  for (long long cycle = 0; cycle < total; ++cycle) {
    while (pos + 1 < trace.entries.size() && trace.entries[pos + 1].cycle <= cycle) ++pos;
    state.workload = trace.entries[pos].workload;
    const SystemState before = state;
    const CycleOutcome outcome = run_cycle(state, policy, rng);
    report.cycles.push_back(CycleRecord{cycle, before.nodes, before.average_load(), outcome});
    state = outcome.new_state;
  }
  report.summary = summarize(report.cycles);
  return report;
}

}  // namespace depas
