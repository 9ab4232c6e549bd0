#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "csmalab/model.hpp"
#include "csmalab/sim.hpp"
#include "csmalab/strategy.hpp"

namespace csmalab::exp {

struct ScenarioConfig {
  enum class Placement { Ring, Disc };
  Placement placement = Placement::Ring;
  double radius_m = 8.0;
  double sense_radius_m = 24.0;
  double tx_radius_m = 16.0;
  std::uint64_t topology_seed = 1;  // disc placement only
};

// Fully resolved experiment description. load_config fills anything the
// JSON omits with the defaults below (54 Mb/s cell, ring of ten stations).
struct ExperimentConfig {
  model::PhyMacConfig phy;
  ScenarioConfig scenario;
  int n = 10;
  // One entry = every station runs it; otherwise exactly n entries.
  std::vector<sim::StrategySpec> strategies;
  std::vector<std::pair<double, int>> schedule_s;  // (time s, active count)
  double duration_s = 60.0;
  std::vector<std::uint64_t> seeds = {1};
  double update_period_ms = 250.0;
  double window_s = 1.0;
  double warmup_s = 0.0;  // discarded from windowed totals in cmd_compare

  // sweep command
  std::string sweep_variable = "p";  // "p" (persistence) or "p0" (reset stay)
  int sweep_stage = 0;               // reset stage swept when variable = p0
  std::vector<double> sweep_grid;
  double unimodal_tol = 0.02;

  // compare command
  std::vector<std::string> protocols = {"dcf", "idlesense", "wtop", "tora"};
  std::vector<int> n_list;  // empty = just n

  // analytic command
  int curve_points = 400;
  double p0_grid_step = 0.05;

  void validate() const;  // throws std::invalid_argument naming the field
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

sim::Topology make_topology(const ExperimentConfig& cfg, int n);

// Commands write CSV files plus a config-echo JSON sidecar into out_dir and
// return the paths written. Identical config + seeds give identical bytes.
std::vector<std::string> cmd_analytic(const ExperimentConfig& cfg,
                                      const std::string& out_dir);
std::vector<std::string> cmd_sweep(const ExperimentConfig& cfg,
                                   const std::string& out_dir);
std::vector<std::string> cmd_compare(const ExperimentConfig& cfg,
                                     const std::string& out_dir);
std::vector<std::string> cmd_dynamic(const ExperimentConfig& cfg,
                                     const std::string& out_dir);

}  // namespace csmalab::exp
