#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csmalab/controllers.hpp"
#include "csmalab/model.hpp"
#include "csmalab/strategy.hpp"
#include "csmalab/topology.hpp"

namespace csmalab::sim {

struct EventLogRow {
  std::int64_t t_ns = 0;
  int node = -1;  // -1 = AP
  std::string event;
};

struct AckTraceRow {
  std::int64_t t_ns = 0;  // ACK emission start
  double value = 0.0;     // decoded payload fraction
  int stage = 0;
};

struct SimOptions {
  std::int64_t window_ns = 1'000'000'000;         // throughput series bin
  std::int64_t update_period_ns = 250'000'000;    // controller segment length
  // Population schedule as (time_ns, active node count); nodes [0, count)
  // are active. Empty = everyone active for the whole run; otherwise the
  // first entry must start at t = 0. Activated nodes restart from protocol
  // defaults; deactivation silences the highest ids.
  std::vector<std::pair<std::int64_t, int>> schedule;
  std::vector<EventLogRow>* event_log = nullptr;  // optional debug sink
  bool force_event_engine = false;  // skip the fully-connected fast path
};

struct NodeCounters {
  std::int64_t attempts = 0;
  std::int64_t successes = 0;
  std::int64_t collisions = 0;
  std::int64_t payload_bits = 0;
  double throughput_bps = 0.0;
};

struct SimReport {
  std::int64_t duration_ns = 0;
  std::vector<NodeCounters> nodes;
  double total_throughput_bps = 0.0;

  // AP vantage: transmissions merged into busy periods (gaps shorter than
  // DIFS, e.g. the data-SIFS-ACK sandwich, belong to one period).
  double busy_fraction = 0.0;
  std::int64_t ap_busy_periods = 0;
  std::int64_t ap_idle_slots = 0;
  std::optional<double> idle_slots_per_tx;  // empty when nothing was sent

  std::int64_t window_ns = 0;
  std::vector<double> window_bps;

  std::vector<ctrl::ControlSample> control_trace;  // AP controller closures
  std::vector<AckTraceRow> ack_trace;              // payload actually sent
};

// Derived aggregates for tables: weights default to all-ones when empty.
struct Aggregates {
  double total_bps = 0.0;
  std::vector<double> per_node_bps;
  std::optional<double> idle_slots_per_tx;
  double jain_fairness = 0.0;  // of throughput normalized by weight
};

Aggregates report_metrics(const SimReport& report,
                          const std::vector<double>& weights = {});

// Event-driven CSMA/CA run. Fully connected topologies take a slot-cycle
// fast path; anything with hidden pairs runs on the general per-node event
// engine. Both implement the same protocol semantics. Deterministic for a
// given (topology, specs, cfg, seed, options).
SimReport run_sim(const Topology& topo, const model::PhyMacConfig& cfg,
                  const std::vector<StrategySpec>& specs,
                  std::int64_t duration_ns, std::uint64_t seed,
                  const SimOptions& options = {});

}  // namespace csmalab::sim
