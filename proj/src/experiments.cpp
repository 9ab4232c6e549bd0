#include "csmalab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "csmalab/backoff.hpp"
#include "csmalab/unimodal.hpp"
#include "json.hpp"

namespace csmalab::exp {

namespace {

using nlohmann::json;
using sim::StrategySpec;

[[noreturn]] void bad_field(const std::string& msg) {
  throw std::invalid_argument(msg);
}

bool power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

std::string kind_name(StrategySpec::Kind k) {
  switch (k) {
    case StrategySpec::Kind::PPersistent: return "ppersistent";
    case StrategySpec::Kind::StdDcf: return "dcf";
    case StrategySpec::Kind::RandomReset: return "randomreset";
    case StrategySpec::Kind::IdleSense: return "idlesense";
    case StrategySpec::Kind::WTop: return "wtop";
    case StrategySpec::Kind::Tora: return "tora";
  }
  return "?";
}

StrategySpec::Kind kind_from(const std::string& s) {
  if (s == "ppersistent") return StrategySpec::Kind::PPersistent;
  if (s == "dcf") return StrategySpec::Kind::StdDcf;
  if (s == "randomreset") return StrategySpec::Kind::RandomReset;
  if (s == "idlesense") return StrategySpec::Kind::IdleSense;
  if (s == "wtop") return StrategySpec::Kind::WTop;
  if (s == "tora") return StrategySpec::Kind::Tora;
  bad_field("strategy.kind: unknown protocol '" + s + "'");
}

StrategySpec strategy_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    bad_field("strategy: object with a 'kind' field required");
  StrategySpec s;
  s.kind = kind_from(j.at("kind").get<std::string>());
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "kind") continue;
    if (key == "p") s.p = it.value().get<double>();
    else if (key == "stage") s.reset_stage = it.value().get<int>();
    else if (key == "p0") s.reset_p0 = it.value().get<double>();
    else if (key == "idle_target") s.idle_target = it.value().get<double>();
    else if (key == "idle_md") s.idle_md = it.value().get<double>();
    else if (key == "idle_ai") s.idle_ai = it.value().get<double>();
    else if (key == "idle_window") s.idle_window = it.value().get<int>();
    else if (key == "weight") s.weight = it.value().get<double>();
    else bad_field("strategy." + key + ": unknown field");
  }
  return s;
}

json strategy_to_json(const StrategySpec& s) {
  json j;
  j["kind"] = kind_name(s.kind);
  switch (s.kind) {
    case StrategySpec::Kind::PPersistent: j["p"] = s.p; break;
    case StrategySpec::Kind::RandomReset:
      j["stage"] = s.reset_stage;
      j["p0"] = s.reset_p0;
      break;
    case StrategySpec::Kind::IdleSense:
      j["idle_target"] = s.idle_target;
      j["idle_md"] = s.idle_md;
      j["idle_ai"] = s.idle_ai;
      j["idle_window"] = s.idle_window;
      break;
    case StrategySpec::Kind::WTop: j["weight"] = s.weight; break;
    default: break;
  }
  return j;
}

void parse_phy(const json& j, model::PhyMacConfig& phy) {
  int cw_max = phy.cw_max();
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "rate_mbps") phy.rate_bps = it.value().get<double>() * 1e6;
    else if (key == "payload_bits") phy.payload_bits = it.value().get<double>();
    else if (key == "header_bits") phy.header_bits = it.value().get<double>();
    else if (key == "ack_bits") phy.ack_bits = it.value().get<double>();
    else if (key == "cw_min") phy.cw_min = it.value().get<int>();
    else if (key == "cw_max") cw_max = it.value().get<int>();
    else if (key == "sigma_us") phy.sigma_ns = std::llround(it.value().get<double>() * 1000);
    else if (key == "sifs_us") phy.sifs_ns = std::llround(it.value().get<double>() * 1000);
    else if (key == "difs_us") phy.difs_ns = std::llround(it.value().get<double>() * 1000);
    else bad_field("phy." + key + ": unknown field");
  }
  if (!power_of_two(phy.cw_min) || phy.cw_min < 2)
    bad_field("phy.cw_min: must be a power of two >= 2");
  if (cw_max < phy.cw_min) bad_field("phy.cw_max: smaller than phy.cw_min");
  const int ratio = cw_max / phy.cw_min;
  if (ratio * phy.cw_min != cw_max || !power_of_two(ratio))
    bad_field("phy.cw_max: must be cw_min times a power of two");
  phy.max_stage = 0;
  while ((phy.cw_min << phy.max_stage) < cw_max) ++phy.max_stage;
}

void parse_scenario(const json& j, ScenarioConfig& sc) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "placement") {
      const auto v = it.value().get<std::string>();
      if (v == "ring") sc.placement = ScenarioConfig::Placement::Ring;
      else if (v == "disc") sc.placement = ScenarioConfig::Placement::Disc;
      else bad_field("scenario.placement: expected 'ring' or 'disc'");
    } else if (key == "radius_m") sc.radius_m = it.value().get<double>();
    else if (key == "sense_radius_m") sc.sense_radius_m = it.value().get<double>();
    else if (key == "tx_radius_m") sc.tx_radius_m = it.value().get<double>();
    else if (key == "seed") sc.topology_seed = it.value().get<std::uint64_t>();
    else bad_field("scenario." + key + ": unknown field");
  }
}

std::string fnum(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header)
      : path_(path.string()), out_(path) {
    if (!out_) throw std::runtime_error("cannot open output file " + path_);
    out_ << header << "\n";
  }
  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << "\n";
  }
  const std::string& path() const { return path_; }

 private:
  static std::string cell(double v) { return fnum(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::int64_t v) { return std::to_string(v); }
  static std::string cell(std::uint64_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  std::string path_;
  std::ofstream out_;
};

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["phy"] = {{"rate_mbps", cfg.phy.rate_bps / 1e6},
              {"payload_bits", cfg.phy.payload_bits},
              {"header_bits", cfg.phy.header_bits},
              {"ack_bits", cfg.phy.ack_bits},
              {"cw_min", cfg.phy.cw_min},
              {"cw_max", cfg.phy.cw_max()},
              {"sigma_us", cfg.phy.sigma_ns / 1000.0},
              {"sifs_us", cfg.phy.sifs_ns / 1000.0},
              {"difs_us", cfg.phy.difs_ns / 1000.0}};
  j["scenario"] = {
      {"placement",
       cfg.scenario.placement == ScenarioConfig::Placement::Ring ? "ring" : "disc"},
      {"radius_m", cfg.scenario.radius_m},
      {"sense_radius_m", cfg.scenario.sense_radius_m},
      {"tx_radius_m", cfg.scenario.tx_radius_m},
      {"seed", cfg.scenario.topology_seed}};
  j["n"] = cfg.n;
  j["strategies"] = json::array();
  for (const auto& s : cfg.strategies) j["strategies"].push_back(strategy_to_json(s));
  j["schedule"] = json::array();
  for (const auto& [t, c] : cfg.schedule_s) j["schedule"].push_back({t, c});
  j["duration_s"] = cfg.duration_s;
  j["seeds"] = cfg.seeds;
  j["update_period_ms"] = cfg.update_period_ms;
  j["window_s"] = cfg.window_s;
  j["warmup_s"] = cfg.warmup_s;
  j["sweep"] = {{"variable", cfg.sweep_variable},
                {"stage", cfg.sweep_stage},
                {"grid", cfg.sweep_grid},
                {"tolerance", cfg.unimodal_tol}};
  j["compare"] = {{"protocols", cfg.protocols}, {"n_list", cfg.n_list}};
  j["analytic"] = {{"curve_points", cfg.curve_points},
                   {"p0_step", cfg.p0_grid_step}};
  return j;
}

std::string write_sidecar(const ExperimentConfig& cfg, const std::string& out_dir,
                          json extra = {}) {
  json j = config_to_json(cfg);
  if (!extra.empty()) j["result"] = std::move(extra);
  const auto path = std::filesystem::path(out_dir) / "config.json";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path.string());
  out << j.dump(2) << "\n";
  return path.string();
}

model::WeightVector weights_of(const ExperimentConfig& cfg, int n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  for (int i = 0; i < n; ++i) {
    const auto& s = cfg.strategies.size() == 1
                        ? cfg.strategies.front()
                        : cfg.strategies[static_cast<std::size_t>(i)];
    if (s.kind == StrategySpec::Kind::WTop) w[static_cast<std::size_t>(i)] = s.weight;
  }
  return model::WeightVector(std::move(w));
}

std::vector<StrategySpec> node_specs(const ExperimentConfig& cfg, int n) {
  if (cfg.strategies.size() == 1)
    return std::vector<StrategySpec>(static_cast<std::size_t>(n),
                                     cfg.strategies.front());
  return cfg.strategies;
}

sim::SimOptions sim_options(const ExperimentConfig& cfg) {
  sim::SimOptions opt;
  opt.window_ns = std::llround(cfg.window_s * 1e9);
  opt.update_period_ns = std::llround(cfg.update_period_ms * 1e6);
  for (const auto& [t_s, count] : cfg.schedule_s)
    opt.schedule.emplace_back(std::llround(t_s * 1e9), count);
  return opt;
}

StrategySpec protocol_spec(const std::string& name) {
  StrategySpec s;
  s.kind = kind_from(name);
  return s;
}

double tail_mean_bps(const sim::SimReport& rep, double warmup_s, double window_s) {
  if (warmup_s <= 0.0) return rep.total_throughput_bps;
  const auto skip = static_cast<std::size_t>(std::llround(warmup_s / window_s));
  if (skip >= rep.window_bps.size())
    bad_field("warmup_s: longer than the run itself");
  double acc = 0.0;
  for (std::size_t i = skip; i < rep.window_bps.size(); ++i) acc += rep.window_bps[i];
  return acc / static_cast<double>(rep.window_bps.size() - skip);
}

}  // namespace

void ExperimentConfig::validate() const {
  phy.validate();
  if (n < 1) bad_field("n: at least one station required");
  if (strategies.empty()) bad_field("strategies: at least one entry required");
  if (strategies.size() != 1 && strategies.size() != static_cast<std::size_t>(n))
    bad_field("strategies: give one entry or exactly n entries");
  for (const auto& s : strategies) s.validate(phy);
  if (!(duration_s > 0)) bad_field("duration_s: must be positive");
  if (seeds.empty()) bad_field("seeds: must be nonempty");
  if (!(update_period_ms > 0)) bad_field("update_period_ms: must be positive");
  if (!(window_s > 0)) bad_field("window_s: must be positive");
  if (warmup_s < 0) bad_field("warmup_s: must be nonnegative");
  for (std::size_t i = 0; i + 1 < schedule_s.size(); ++i)
    if (!(schedule_s[i].first < schedule_s[i + 1].first))
      bad_field("schedule: times must be strictly increasing");
  for (const auto& [t, c] : schedule_s) {
    if (t < 0) bad_field("schedule: times must be nonnegative");
    if (c < 1 || c > n) bad_field("schedule: counts must be in [1, n]");
  }
  if (!schedule_s.empty() && schedule_s.front().first != 0.0)
    bad_field("schedule: first entry must start at t = 0");
  const double reach = scenario.tx_radius_m;
  if (scenario.radius_m > reach)
    bad_field("scenario.radius_m: exceeds tx_radius_m, stations cannot reach the AP");
  if (!(unimodal_tol > 0)) bad_field("sweep.tolerance: must be positive");
  if (sweep_variable != "p" && sweep_variable != "p0")
    bad_field("sweep.variable: expected 'p' or 'p0'");
  if (sweep_stage < 0 || sweep_stage > phy.max_stage)
    bad_field("sweep.stage: outside the backoff ladder");
  if (!std::is_sorted(sweep_grid.begin(), sweep_grid.end()))
    bad_field("sweep.grid: must be sorted ascending");
  for (const auto& p : protocols) (void)kind_from(p);
  for (int m : n_list)
    if (m < 1) bad_field("compare.n_list: counts must be positive");
  if (curve_points < 3) bad_field("analytic.curve_points: need at least 3");
  if (!(p0_grid_step > 0 && p0_grid_step <= 1))
    bad_field("analytic.p0_step: must be in (0, 1]");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad_field(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_field("config: top level must be a JSON object");

  ExperimentConfig cfg;
  cfg.strategies = {protocol_spec("dcf")};
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    if (key == "phy") parse_phy(v, cfg.phy);
    else if (key == "scenario") parse_scenario(v, cfg.scenario);
    else if (key == "n") cfg.n = v.get<int>();
    else if (key == "strategy") cfg.strategies = {strategy_from_json(v)};
    else if (key == "strategies") {
      cfg.strategies.clear();
      for (const auto& e : v) cfg.strategies.push_back(strategy_from_json(e));
    } else if (key == "weights") {
      // shorthand: a weighted persistence cell, one station per weight
      cfg.strategies.clear();
      for (const auto& e : v) {
        StrategySpec s;
        s.kind = StrategySpec::Kind::WTop;
        s.weight = e.get<double>();
        cfg.strategies.push_back(s);
      }
      cfg.n = static_cast<int>(cfg.strategies.size());
    } else if (key == "schedule") {
      for (const auto& e : v) {
        if (!e.is_array() || e.size() != 2)
          bad_field("schedule: entries must be [time_s, count] pairs");
        cfg.schedule_s.emplace_back(e[0].get<double>(), e[1].get<int>());
      }
    } else if (key == "duration_s") cfg.duration_s = v.get<double>();
    else if (key == "seeds") cfg.seeds = v.get<std::vector<std::uint64_t>>();
    else if (key == "update_period_ms") cfg.update_period_ms = v.get<double>();
    else if (key == "window_s") cfg.window_s = v.get<double>();
    else if (key == "warmup_s") cfg.warmup_s = v.get<double>();
    else if (key == "sweep") {
      for (auto s = v.begin(); s != v.end(); ++s) {
        if (s.key() == "variable") cfg.sweep_variable = s.value().get<std::string>();
        else if (s.key() == "stage") cfg.sweep_stage = s.value().get<int>();
        else if (s.key() == "grid") cfg.sweep_grid = s.value().get<std::vector<double>>();
        else if (s.key() == "tolerance") cfg.unimodal_tol = s.value().get<double>();
        else bad_field("sweep." + s.key() + ": unknown field");
      }
    } else if (key == "compare") {
      for (auto s = v.begin(); s != v.end(); ++s) {
        if (s.key() == "protocols") cfg.protocols = s.value().get<std::vector<std::string>>();
        else if (s.key() == "n_list") cfg.n_list = s.value().get<std::vector<int>>();
        else bad_field("compare." + s.key() + ": unknown field");
      }
    } else if (key == "analytic") {
      for (auto s = v.begin(); s != v.end(); ++s) {
        if (s.key() == "curve_points") cfg.curve_points = s.value().get<int>();
        else if (s.key() == "p0_step") cfg.p0_grid_step = s.value().get<double>();
        else bad_field("analytic." + s.key() + ": unknown field");
      }
    } else bad_field(key + ": unknown field");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad_field("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

sim::Topology make_topology(const ExperimentConfig& cfg, int n) {
  auto pos = cfg.scenario.placement == ScenarioConfig::Placement::Ring
                 ? sim::place_ring(n, cfg.scenario.radius_m)
                 : sim::place_disc(n, cfg.scenario.radius_m,
                                   cfg.scenario.topology_seed);
  return sim::build_topology(std::move(pos), cfg.scenario.sense_radius_m,
                             cfg.scenario.tx_radius_m);
}

std::vector<std::string> cmd_analytic(const ExperimentConfig& cfg,
                                      const std::string& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  std::vector<std::string> written;
  const auto weights = weights_of(cfg, cfg.n);

  CsvWriter curve(dir / "curve.csv", "p,S_bits_per_s,f_value");
  for (int i = 0; i < cfg.curve_points; ++i) {
    const double p = static_cast<double>(i) / cfg.curve_points;
    curve.row(p, model::system_throughput(p, weights, cfg.phy),
              model::gradient_indicator(p, weights, cfg.phy));
  }
  written.push_back(curve.path());

  std::vector<int> ns = cfg.n_list.empty() ? std::vector<int>{cfg.n} : cfg.n_list;
  CsvWriter optima(dir / "optima.csv",
                   "n,p_star,p_star_approx,S_at_p_star_bits_per_s");
  for (int n : ns) {
    const auto uni = model::WeightVector::uniform(n);
    const auto p_star = model::optimal_p(uni, cfg.phy);
    optima.row(n, p_star ? fnum(*p_star) : "nan",
               model::approx_optimal_p(n, cfg.phy),
               p_star ? fnum(model::system_throughput(*p_star, uni, cfg.phy))
                      : "nan");
  }
  written.push_back(optima.path());

  CsvWriter tau(dir / "reset_tau.csv", "n,j,p0,tau,c");
  for (int n : ns)
    for (int jstage = 0; jstage < cfg.phy.max_stage; ++jstage)
      for (double p0 = 0.0; p0 <= 1.0 + 1e-12; p0 += cfg.p0_grid_step) {
        const double p0c = std::min(p0, 1.0);
        const auto dist =
            model::rr_reset_distribution(jstage, p0c, cfg.phy.max_stage);
        const auto fp = model::solve_attempt_fixed_point(dist, n, cfg.phy);
        tau.row(n, jstage, p0c, fp.tau, fp.c);
      }
  written.push_back(tau.path());

  CsvWriter dcf(dir / "dcf.csv", "n,tau,c,S_bits_per_s");
  for (int n : ns) {
    const auto dist = model::rr_reset_distribution(0, 1.0, cfg.phy.max_stage);
    const auto fp = model::solve_attempt_fixed_point(dist, n, cfg.phy);
    dcf.row(n, fp.tau, fp.c, model::rr_throughput(0, 1.0, n, cfg.phy));
  }
  written.push_back(dcf.path());

  written.push_back(write_sidecar(cfg, out_dir));
  return written;
}

std::vector<std::string> cmd_sweep(const ExperimentConfig& cfg,
                                   const std::string& out_dir) {
  cfg.validate();
  if (cfg.sweep_grid.empty()) bad_field("sweep.grid: must be nonempty");
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  const auto topo = make_topology(cfg, cfg.n);
  const auto opt = sim_options(cfg);
  const auto dur = static_cast<std::int64_t>(std::llround(cfg.duration_s * 1e9));

  CsvWriter raw(dir / "sweep.csv", "variable,value,seed,throughput_bps");
  std::vector<double> means;
  for (double value : cfg.sweep_grid) {
    StrategySpec s;
    if (cfg.sweep_variable == "p") {
      s.kind = StrategySpec::Kind::PPersistent;
      s.p = value;
    } else {
      s.kind = StrategySpec::Kind::RandomReset;
      s.reset_stage = cfg.sweep_stage;
      s.reset_p0 = value;
    }
    s.validate(cfg.phy);
    std::vector<StrategySpec> specs(static_cast<std::size_t>(cfg.n), s);
    double acc = 0.0;
    for (auto seed : cfg.seeds) {
      const auto rep = sim::run_sim(topo, cfg.phy, specs, dur, seed, opt);
      raw.row(cfg.sweep_variable, value, seed, rep.total_throughput_bps);
      acc += rep.total_throughput_bps;
    }
    means.push_back(acc / static_cast<double>(cfg.seeds.size()));
  }
  CsvWriter avg(dir / "sweep_avg.csv", "value,mean_throughput_bps");
  for (std::size_t i = 0; i < means.size(); ++i)
    avg.row(cfg.sweep_grid[i], means[i]);

  json result;
  if (means.size() >= 3) {
    const auto verdict =
        model::check_unimodal(cfg.sweep_grid, means, cfg.unimodal_tol);
    result = {{"unimodal", verdict.ok},
              {"peak_value", cfg.sweep_grid[static_cast<std::size_t>(
                  std::max(verdict.peak_index, 0))]},
              {"violations", verdict.violations}};
  } else {
    // too few points for a shape verdict; the data files still stand
    result = {{"unimodal", nullptr}};
  }
  std::vector<std::string> written{raw.path(), avg.path()};
  written.push_back(write_sidecar(cfg, out_dir, std::move(result)));
  return written;
}

std::vector<std::string> cmd_compare(const ExperimentConfig& cfg,
                                     const std::string& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  const auto opt = sim_options(cfg);
  const auto dur = static_cast<std::int64_t>(std::llround(cfg.duration_s * 1e9));
  std::vector<int> ns = cfg.n_list.empty() ? std::vector<int>{cfg.n} : cfg.n_list;

  CsvWriter raw(dir / "compare.csv",
                "protocol,n,seed,throughput_bps,idle_slots_per_tx,hidden_pairs");
  CsvWriter per_node(dir / "per_node.csv",
                     "protocol,n,seed,node,weight,throughput_bps,normalized_bps");
  CsvWriter summary(
      dir / "compare_summary.csv",
      "protocol,n,mean_throughput_bps,std_throughput_bps,mean_idle_slots_per_tx");
  for (const auto& proto : cfg.protocols) {
    for (int n : ns) {
      const auto topo = make_topology(cfg, n);
      std::vector<StrategySpec> specs(static_cast<std::size_t>(n),
                                      protocol_spec(proto));
      // a weighted config applies its weights to the persistence protocol
      if (protocol_spec(proto).kind == StrategySpec::Kind::WTop &&
          cfg.strategies.size() == static_cast<std::size_t>(n)) {
        for (int i = 0; i < n; ++i)
          specs[static_cast<std::size_t>(i)].weight =
              cfg.strategies[static_cast<std::size_t>(i)].weight;
      }
      double acc = 0.0, acc2 = 0.0, idle_acc = 0.0;
      int idle_cnt = 0;
      for (auto seed : cfg.seeds) {
        const auto rep = sim::run_sim(topo, cfg.phy, specs, dur, seed, opt);
        const double total = tail_mean_bps(rep, cfg.warmup_s, cfg.window_s);
        raw.row(proto, n, seed, total,
                rep.idle_slots_per_tx ? fnum(*rep.idle_slots_per_tx)
                                      : std::string("nan"),
                topo.hidden_pairs);
        for (int i = 0; i < n; ++i) {
          const double w = specs[static_cast<std::size_t>(i)].weight;
          per_node.row(proto, n, seed, i, w,
                       rep.nodes[static_cast<std::size_t>(i)].throughput_bps,
                       rep.nodes[static_cast<std::size_t>(i)].throughput_bps / w);
        }
        acc += total;
        acc2 += total * total;
        if (rep.idle_slots_per_tx) {
          idle_acc += *rep.idle_slots_per_tx;
          ++idle_cnt;
        }
      }
      const double k = static_cast<double>(cfg.seeds.size());
      const double mean = acc / k;
      const double var = k > 1 ? std::max(0.0, (acc2 - k * mean * mean) / (k - 1))
                               : 0.0;
      summary.row(proto, n, mean, std::sqrt(var),
                  idle_cnt ? fnum(idle_acc / idle_cnt) : std::string("nan"));
    }
  }
  std::vector<std::string> written{raw.path(), per_node.path(), summary.path()};
  written.push_back(write_sidecar(cfg, out_dir));
  return written;
}

std::vector<std::string> cmd_dynamic(const ExperimentConfig& cfg,
                                     const std::string& out_dir) {
  cfg.validate();
  if (cfg.schedule_s.empty())
    bad_field("schedule: required for the dynamic command");
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  const auto topo = make_topology(cfg, cfg.n);
  const auto opt = sim_options(cfg);
  const auto dur = static_cast<std::int64_t>(std::llround(cfg.duration_s * 1e9));
  const auto specs = node_specs(cfg, cfg.n);

  CsvWriter series(dir / "series.csv", "seed,t_s,throughput_bps");
  CsvWriter control(dir / "control.csv",
                    "seed,t_ns,p_val,probe,s_plus,s_minus,stage");
  CsvWriter totals(dir / "totals.csv", "seed,throughput_bps");
  for (auto seed : cfg.seeds) {
    const auto rep = sim::run_sim(topo, cfg.phy, specs, dur, seed, opt);
    for (std::size_t i = 0; i < rep.window_bps.size(); ++i)
      series.row(seed, (static_cast<double>(i) + 0.5) * cfg.window_s,
                 rep.window_bps[i]);
    for (const auto& row : rep.control_trace)
      control.row(seed, row.t_ns, row.p_val, row.probe, row.s_plus, row.s_minus,
                  row.stage);
    totals.row(seed, rep.total_throughput_bps);
  }
  std::vector<std::string> written{series.path(), control.path(), totals.path()};
  written.push_back(write_sidecar(cfg, out_dir));
  return written;
}

}  // namespace csmalab::exp
