#include "csmalab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace csmalab::sim {

namespace {

// Run-wide accounting shared by both engines.
struct Accounting {
  const model::PhyMacConfig* cfg = nullptr;
  model::Timing timing;
  std::int64_t duration = 0;
  std::int64_t payload_bits = 0;
  std::int64_t window_ns = 0;

  std::vector<NodeCounters> counters;
  std::vector<std::int64_t> window_bits;

  // AP-vantage busy periods: spans fed in start order, merged when the gap
  // is shorter than DIFS. Idle slots are whole sigma intervals beyond the
  // DIFS that reopens contention.
  std::int64_t busy_from = -1;
  std::int64_t busy_until = -1;
  std::int64_t busy_accum = 0;
  std::int64_t ap_periods = 0;
  std::int64_t ap_idle_slots = 0;

  std::optional<ctrl::ApController> controller;
  std::vector<AckTraceRow> ack_trace;
  std::vector<EventLogRow>* elog = nullptr;

  void log(std::int64_t t, int node, const char* ev) {
    if (elog) elog->push_back({t, node, ev});
  }

  std::int64_t gap_slots(std::int64_t gap) const {
    return gap >= cfg->difs_ns ? (gap - cfg->difs_ns) / cfg->sigma_ns : 0;
  }

  void ap_span(std::int64_t s, std::int64_t e) {
    if (busy_until < 0) {
      ap_idle_slots += gap_slots(s);  // idle head of the run
      ap_periods = 1;
      busy_from = s;
      busy_until = e;
      return;
    }
    if (s - busy_until < cfg->difs_ns) {
      busy_until = std::max(busy_until, e);
      return;
    }
    busy_accum += busy_until - busy_from;
    ap_idle_slots += gap_slots(s - busy_until);
    ++ap_periods;
    busy_from = s;
    busy_until = e;
  }

  void finish_ap() {
    if (busy_until < 0) return;
    busy_accum += std::min(busy_until, duration) - std::min(busy_from, duration);
  }

  void deliver(std::int64_t decode_t, int node) {
    auto& c = counters[static_cast<std::size_t>(node)];
    ++c.successes;
    c.payload_bits += payload_bits;
    const auto bin = std::min<std::int64_t>(
        decode_t / window_ns, static_cast<std::int64_t>(window_bits.size()) - 1);
    window_bits[static_cast<std::size_t>(bin)] += payload_bits;
    if (controller) controller->on_decode(decode_t, payload_bits);
  }

  ctrl::AckPayload ack_payload(std::int64_t emit_t) {
    ctrl::AckPayload pl{};
    if (controller) {
      pl = controller->payload();
      ack_trace.push_back({emit_t, pl.value(), pl.stage});
    }
    return pl;
  }
};

struct NodeRt {
  std::unique_ptr<Strategy> strat;
  Rng rng{0};
  bool active = false;
  bool blocked = false;  // counter backoff awaiting its outcome
};

template <class Node>
void activate_range(std::vector<Node>& nodes,
                    const std::vector<StrategySpec>& specs,
                    const model::PhyMacConfig& cfg, int from, int to) {
  for (int i = from; i < to; ++i) {
    auto& nd = nodes[static_cast<std::size_t>(i)];
    nd.strat = make_strategy(specs[static_cast<std::size_t>(i)], cfg, nd.rng);
    nd.active = true;
    nd.blocked = false;
  }
}

// ---------------------------------------------------------------------------
// Fast engine: everyone senses everyone, so all nodes share one slot clock.
// A cycle is one decision boundary plus whatever busy period it opens.
// ---------------------------------------------------------------------------
void run_fast(const Topology& topo, const model::PhyMacConfig& cfg,
              const std::vector<StrategySpec>& specs, std::int64_t duration,
              std::uint64_t seed, Accounting& acc,
              const std::vector<std::pair<std::int64_t, int>>& schedule) {
  const int n = topo.size();
  std::vector<NodeRt> nodes(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    nodes[static_cast<std::size_t>(i)].rng =
        Rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));

  int active_count = schedule.empty() ? n : schedule.front().second;
  std::size_t sched_next = schedule.empty() ? 0 : 1;
  activate_range(nodes, specs, cfg, 0, active_count);

  using Fail = std::pair<std::int64_t, int>;
  std::priority_queue<Fail, std::vector<Fail>, std::greater<>> failures;

  const std::int64_t sigma = cfg.sigma_ns;
  const std::int64_t difs = cfg.difs_ns;
  std::int64_t anchor = 0;  // when the medium last went idle
  std::int64_t boundary = difs;
  std::int64_t idle_gap_slots = 0;
  std::int64_t last_ack_heard = 0;
  std::vector<int> attackers;

  while (boundary < duration) {
    while (sched_next < schedule.size() &&
           schedule[sched_next].first <= boundary) {
      const int want = schedule[sched_next].second;
      acc.log(schedule[sched_next].first, -1, "churn");
      if (want > active_count)
        activate_range(nodes, specs, cfg, active_count, want);
      else
        for (int i = want; i < active_count; ++i)
          nodes[static_cast<std::size_t>(i)].active = false;
      active_count = want;
      ++sched_next;
    }
    while (!failures.empty() && failures.top().first <= boundary) {
      const auto [ft, who] = failures.top();
      failures.pop();
      auto& nd = nodes[static_cast<std::size_t>(who)];
      acc.log(ft, who, "failure");
      if (!nd.active) continue;
      nd.strat->on_failure(nd.rng);
      nd.blocked = false;
    }
    if (acc.controller) acc.controller->on_tick(boundary);
    if (boundary - last_ack_heard > kAckDroughtNs) {
      acc.log(boundary, -1, "ack_drought");
      for (int i = 0; i < n; ++i) {
        auto& nd = nodes[static_cast<std::size_t>(i)];
        if (nd.active) nd.strat->on_ack_drought();
      }
      last_ack_heard = boundary;
    }

    attackers.clear();
    for (int i = 0; i < n; ++i) {
      auto& nd = nodes[static_cast<std::size_t>(i)];
      if (!nd.active || nd.blocked) continue;
      if (nd.strat->on_slot(nd.rng)) attackers.push_back(i);
    }
    if (attackers.empty()) {
      ++idle_gap_slots;
      boundary += sigma;
      continue;
    }

    const std::int64_t data_end = boundary + acc.timing.data_ns;
    for (int i = 0; i < n; ++i) {
      auto& nd = nodes[static_cast<std::size_t>(i)];
      if (nd.active) nd.strat->on_channel_activity(idle_gap_slots);
    }
    idle_gap_slots = 0;
    for (int i : attackers) {
      ++acc.counters[static_cast<std::size_t>(i)].attempts;
      acc.log(boundary, i, "tx_start");
    }

    if (attackers.size() == 1) {
      const int i = attackers.front();
      acc.log(data_end, i, "tx_end_ok");
      acc.deliver(data_end, i);
      const std::int64_t ack_start = data_end + cfg.sifs_ns;
      const std::int64_t ack_end = ack_start + acc.timing.ack_ns;
      const ctrl::AckPayload pl = acc.ack_payload(ack_start);
      acc.log(ack_start, -1, "ack_start");
      acc.ap_span(boundary, ack_end);
      for (int j = 0; j < n; ++j) {
        auto& nd = nodes[static_cast<std::size_t>(j)];
        if (!nd.active) continue;
        if (j == i)
          nd.strat->on_success(pl, nd.rng);
        else
          nd.strat->on_other_ack(pl);
      }
      last_ack_heard = ack_end;
      anchor = ack_end;
    } else {
      const std::int64_t fail_at =
          data_end + cfg.sifs_ns + acc.timing.ack_ns + difs;
      for (int i : attackers) {
        auto& nd = nodes[static_cast<std::size_t>(i)];
        ++acc.counters[static_cast<std::size_t>(i)].collisions;
        acc.log(data_end, i, "tx_end_collided");
        failures.emplace(fail_at, i);
        if (nd.strat->blocks_during_ack_wait()) nd.blocked = true;
      }
      acc.ap_span(boundary, data_end);
      anchor = data_end;
    }
    boundary = anchor + difs;
  }
}

// ---------------------------------------------------------------------------
// General engine: per-node medium views driven by an event queue.
// ---------------------------------------------------------------------------
enum : int {
  kTxEnd = 0,
  kAckStart = 1,
  kAckEnd = 2,
  kFailure = 3,
  kChurn = 4,
  kBoundary = 5,
  kApTick = 6,
  kDroughtCheck = 7,
};

struct Ev {
  std::int64_t t;
  int rank;
  int node;
  std::uint64_t seq;
  std::uint64_t aux;  // token for boundaries, tx index otherwise
  friend bool operator>(const Ev& a, const Ev& b) {
    if (a.t != b.t) return a.t > b.t;
    if (a.rank != b.rank) return a.rank > b.rank;
    if (a.node != b.node) return a.node > b.node;
    return a.seq > b.seq;
  }
};

struct Tx {
  int node = -1;
  std::int64_t start = 0;
  std::int64_t end = 0;
  bool collided = false;
  ctrl::AckPayload payload{};
};

struct EvNode : NodeRt {
  bool transmitting = false;
  int busy = 0;
  std::int64_t idle_since = 0;
  std::int64_t next_boundary = -1;
  std::uint64_t token = 0;
  bool has_deferred_ack = false;
  ctrl::AckPayload deferred_ack{};
};

class EventEngine {
 public:
  EventEngine(const Topology& topo, const model::PhyMacConfig& cfg,
              const std::vector<StrategySpec>& specs, std::int64_t duration,
              std::uint64_t seed, Accounting& acc,
              std::vector<std::pair<std::int64_t, int>> schedule)
      : topo_(topo),
        cfg_(cfg),
        specs_(specs),
        duration_(duration),
        acc_(acc),
        schedule_(std::move(schedule)),
        nodes_(static_cast<std::size_t>(topo.size())) {
    const int n = topo.size();
    for (int i = 0; i < n; ++i)
      nodes_[static_cast<std::size_t>(i)].rng =
          Rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
    active_count_ = schedule_.empty() ? n : schedule_.front().second;
    activate_range(nodes_, specs_, cfg_, 0, active_count_);
    for (int i = 0; i < active_count_; ++i) schedule_boundary(i, cfg_.difs_ns);
    for (std::size_t s = 1; s < schedule_.size(); ++s)
      push(schedule_[s].first, kChurn, -1, s);
    if (acc_.controller) push(acc_.controller->force_deadline_ns(), kApTick, -1, 0);
    push(kAckDroughtNs, kDroughtCheck, -1, 0);
  }

  void run() {
    while (!queue_.empty()) {
      const Ev ev = queue_.top();
      queue_.pop();
      switch (ev.rank) {
        case kTxEnd: tx_end(ev); break;
        case kAckStart: ack_start(ev); break;
        case kAckEnd: ack_end(ev); break;
        case kFailure: failure(ev); break;
        case kChurn: churn(ev); break;
        case kBoundary: boundary(ev); break;
        case kApTick: ap_tick(ev); break;
        case kDroughtCheck: drought_check(ev); break;
        default: break;
      }
    }
  }

 private:
  EvNode& nd(int i) { return nodes_[static_cast<std::size_t>(i)]; }

  void push(std::int64_t t, int rank, int node, std::uint64_t aux) {
    queue_.push(Ev{t, rank, node, seq_++, aux});
  }

  void schedule_boundary(int i, std::int64_t t) {
    auto& node = nd(i);
    node.next_boundary = t;
    push(t, kBoundary, i, node.token);
  }

  // Number of whole idle slots a node saw before the medium turned busy.
  std::int64_t idle_slots_seen(const EvNode& node, std::int64_t t) const {
    const std::int64_t g0 = node.idle_since + cfg_.difs_ns;
    if (t <= g0) return 0;
    return (t - g0 + cfg_.sigma_ns - 1) / cfg_.sigma_ns;
  }

  void busy_inc(int i, std::int64_t t) {
    auto& node = nd(i);
    if (++node.busy == 1) {
      // an onset within DIFS of the last busy end (the data-SIFS-ACK
      // sandwich) continues the same sensed transmission
      if (node.active && t - node.idle_since >= cfg_.difs_ns)
        node.strat->on_channel_activity(idle_slots_seen(node, t));
      if (node.next_boundary > t) ++node.token;  // same-time decisions stand
    }
  }

  void busy_dec(int i, std::int64_t t) {
    auto& node = nd(i);
    if (--node.busy == 0) {
      node.idle_since = t;
      if (node.active && !node.blocked) schedule_boundary(i, t + cfg_.difs_ns);
    }
  }

  void start_tx(int i, std::int64_t t) {
    ++acc_.counters[static_cast<std::size_t>(i)].attempts;
    acc_.log(t, i, "tx_start");
    Tx tx;
    tx.node = i;
    tx.start = t;
    tx.end = t + acc_.timing.data_ns;
    tx.collided = !active_tx_.empty();
    for (std::size_t a : active_tx_) txs_[a].collided = true;
    txs_.push_back(tx);
    const std::size_t idx = txs_.size() - 1;
    active_tx_.push_back(idx);
    nd(i).transmitting = true;
    acc_.ap_span(tx.start, tx.end);
    for (int s : topo_.sense_sets[static_cast<std::size_t>(i)]) busy_inc(s, t);
    push(tx.end, kTxEnd, i, idx);
  }

  void tx_end(const Ev& ev) {
    Tx& tx = txs_[ev.aux];
    auto& node = nd(tx.node);
    node.transmitting = false;
    active_tx_.erase(std::find(active_tx_.begin(), active_tx_.end(), ev.aux));
    if (node.has_deferred_ack && node.active) {
      node.strat->on_other_ack(node.deferred_ack);
      node.has_deferred_ack = false;
    }
    if (!tx.collided) {
      acc_.log(ev.t, tx.node, "tx_end_ok");
      acc_.deliver(ev.t, tx.node);
      const std::int64_t start =
          std::max(ev.t + cfg_.sifs_ns, ack_reserved_until_);
      ack_reserved_until_ = start + acc_.timing.ack_ns;
      push(start, kAckStart, tx.node, ev.aux);
    } else {
      acc_.log(ev.t, tx.node, "tx_end_collided");
      ++acc_.counters[static_cast<std::size_t>(tx.node)].collisions;
      push(ev.t + cfg_.sifs_ns + acc_.timing.ack_ns + cfg_.difs_ns, kFailure,
           tx.node, ev.aux);
      if (node.active && node.strat->blocks_during_ack_wait())
        node.blocked = true;
    }
    for (int s : topo_.sense_sets[static_cast<std::size_t>(tx.node)])
      busy_dec(s, ev.t);
  }

  void ack_start(const Ev& ev) {
    Tx& tx = txs_[ev.aux];
    tx.payload = acc_.ack_payload(ev.t);
    acc_.log(ev.t, -1, "ack_start");
    acc_.ap_span(ev.t, ev.t + acc_.timing.ack_ns);
    ack_until_ = ev.t + acc_.timing.ack_ns;
    for (int i = 0; i < topo_.size(); ++i)
      if (nd(i).active) busy_inc(i, ev.t);
    push(ev.t + acc_.timing.ack_ns, kAckEnd, ev.node, ev.aux);
  }

  void ack_end(const Ev& ev) {
    const Tx& tx = txs_[ev.aux];
    for (int i = 0; i < topo_.size(); ++i) {
      auto& node = nd(i);
      if (!node.active) continue;
      if (i == tx.node) {
        node.strat->on_success(tx.payload, node.rng);
        node.blocked = false;
      } else if (node.transmitting) {
        node.deferred_ack = tx.payload;  // read at own tx end
        node.has_deferred_ack = true;
      } else {
        node.strat->on_other_ack(tx.payload);
      }
    }
    last_ack_heard_ = ev.t;
    for (int i = 0; i < topo_.size(); ++i)
      if (nd(i).active) busy_dec(i, ev.t);
  }

  void failure(const Ev& ev) {
    const Tx& tx = txs_[ev.aux];
    auto& node = nd(tx.node);
    acc_.log(ev.t, tx.node, "failure");
    if (!node.active) return;
    node.strat->on_failure(node.rng);
    if (!node.blocked) return;
    node.blocked = false;
    if (node.busy > 0) return;  // rejoin when the medium frees up
    // resume on the slot grid anchored at the node's last idle transition
    const std::int64_t g0 = node.idle_since + cfg_.difs_ns;
    std::int64_t tb = g0;
    if (ev.t > g0) {
      const std::int64_t k = (ev.t - g0 + cfg_.sigma_ns - 1) / cfg_.sigma_ns;
      tb = g0 + k * cfg_.sigma_ns;
    }
    schedule_boundary(tx.node, tb);
  }

  void churn(const Ev& ev) {
    const int want = schedule_[ev.aux].second;
    acc_.log(ev.t, -1, "churn");
    if (want > active_count_) {
      activate_range(nodes_, specs_, cfg_, active_count_, want);
      for (int i = active_count_; i < want; ++i) {
        auto& node = nd(i);
        ++node.token;
        node.transmitting = false;
        node.busy = ack_until_ > ev.t ? 1 : 0;
        for (std::size_t a : active_tx_)
          if (topo_.senses(i, txs_[a].node)) ++node.busy;
        node.idle_since = ev.t;
        if (node.busy == 0) schedule_boundary(i, ev.t + cfg_.difs_ns);
      }
    } else {
      for (int i = want; i < active_count_; ++i) {
        auto& node = nd(i);
        node.active = false;
        ++node.token;
      }
    }
    active_count_ = want;
  }

  void boundary(const Ev& ev) {
    auto& node = nd(ev.node);
    if (!node.active || node.blocked || ev.aux != node.token ||
        ev.t != node.next_boundary)
      return;
    node.next_boundary = -1;
    if (ev.t >= duration_) return;  // horizon: stop opening new activity
    if (node.strat->on_slot(node.rng)) {
      start_tx(ev.node, ev.t);
    } else if (node.busy == 0) {
      schedule_boundary(ev.node, ev.t + cfg_.sigma_ns);
    }
  }

  void ap_tick(const Ev& ev) {
    if (!acc_.controller) return;
    if (ev.t >= acc_.controller->force_deadline_ns())
      acc_.controller->on_tick(ev.t);
    if (ev.t < duration_)
      push(acc_.controller->force_deadline_ns(), kApTick, -1, 0);
  }

  void drought_check(const Ev& ev) {
    if (ev.t - last_ack_heard_ > kAckDroughtNs) {
      acc_.log(ev.t, -1, "ack_drought");
      for (auto& node : nodes_)
        if (node.active) node.strat->on_ack_drought();
      last_ack_heard_ = ev.t;
    }
    if (ev.t < duration_) push(ev.t + kAckDroughtNs / 2, kDroughtCheck, -1, 0);
  }

  const Topology& topo_;
  const model::PhyMacConfig& cfg_;
  const std::vector<StrategySpec>& specs_;
  std::int64_t duration_;
  Accounting& acc_;
  std::vector<std::pair<std::int64_t, int>> schedule_;
  std::vector<EvNode> nodes_;
  int active_count_ = 0;
  std::priority_queue<Ev, std::vector<Ev>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  std::vector<Tx> txs_;
  std::vector<std::size_t> active_tx_;
  std::int64_t ack_reserved_until_ = 0;
  std::int64_t ack_until_ = 0;
  std::int64_t last_ack_heard_ = 0;
};

}  // namespace

Aggregates report_metrics(const SimReport& report,
                          const std::vector<double>& weights) {
  const std::size_t n = report.nodes.size();
  if (!weights.empty() && weights.size() != n)
    throw std::invalid_argument("weights size does not match node count");
  Aggregates out;
  out.per_node_bps.reserve(n);
  for (const auto& c : report.nodes) out.per_node_bps.push_back(c.throughput_bps);
  out.total_bps = report.total_throughput_bps;
  out.idle_slots_per_tx = report.idle_slots_per_tx;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const double x = out.per_node_bps[i] / w;
    sum += x;
    sum2 += x * x;
  }
  out.jain_fairness = sum2 > 0 ? sum * sum / (static_cast<double>(n) * sum2) : 0.0;
  return out;
}

SimReport run_sim(const Topology& topo, const model::PhyMacConfig& cfg,
                  const std::vector<StrategySpec>& specs,
                  std::int64_t duration_ns, std::uint64_t seed,
                  const SimOptions& options) {
  if (topo.size() < 1) throw std::invalid_argument("need at least one node");
  if (specs.size() != static_cast<std::size_t>(topo.size()))
    throw std::invalid_argument("one strategy spec per node required");
  Accounting acc;
  acc.cfg = &cfg;
  acc.timing = model::derive_timing(cfg);
  if (duration_ns < acc.timing.t_success_ns)
    throw std::invalid_argument("duration shorter than one successful exchange");
  if (options.window_ns <= 0) throw std::invalid_argument("window must be positive");
  if (options.update_period_ns <= 0)
    throw std::invalid_argument("update period must be positive");

  int n_wtop = 0, n_tora = 0;
  for (const auto& s : specs) {
    s.validate(cfg);
    n_wtop += s.kind == StrategySpec::Kind::WTop;
    n_tora += s.kind == StrategySpec::Kind::Tora;
  }
  if (n_wtop > 0 && n_tora > 0)
    throw std::invalid_argument("cannot mix the two controlled strategies");

  auto schedule = options.schedule;
  if (!schedule.empty()) {
    if (schedule.front().first != 0)
      throw std::invalid_argument("population schedule must start at t = 0");
    std::int64_t prev = -1;
    for (const auto& [t, count] : schedule) {
      if (t <= prev) throw std::invalid_argument("schedule times must increase");
      if (t >= duration_ns)
        throw std::invalid_argument("schedule entry beyond the run horizon");
      if (count < 1 || count > topo.size())
        throw std::invalid_argument("schedule count outside [1, N]");
      prev = t;
    }
  }

  acc.duration = duration_ns;
  acc.payload_bits = std::llround(cfg.payload_bits);
  acc.window_ns = options.window_ns;
  acc.counters.assign(static_cast<std::size_t>(topo.size()), {});
  acc.window_bits.assign(
      static_cast<std::size_t>((duration_ns + options.window_ns - 1) /
                               options.window_ns),
      0);
  acc.elog = options.event_log;
  if (n_wtop > 0)
    acc.controller.emplace(ctrl::ApMode::WTop, options.update_period_ns,
                           cfg.rate_bps, cfg.max_stage);
  if (n_tora > 0)
    acc.controller.emplace(ctrl::ApMode::Tora, options.update_period_ns,
                           cfg.rate_bps, cfg.max_stage);

  if (topo.fully_connected() && !options.force_event_engine) {
    run_fast(topo, cfg, specs, duration_ns, seed, acc, schedule);
  } else {
    EventEngine engine(topo, cfg, specs, duration_ns, seed, acc, schedule);
    engine.run();
  }

  acc.finish_ap();
  SimReport rep;
  rep.duration_ns = duration_ns;
  rep.nodes = std::move(acc.counters);
  const double dur_s = static_cast<double>(duration_ns) * 1e-9;
  for (auto& c : rep.nodes) {
    c.throughput_bps = static_cast<double>(c.payload_bits) / dur_s;
    rep.total_throughput_bps += c.throughput_bps;
  }
  rep.busy_fraction =
      static_cast<double>(acc.busy_accum) / static_cast<double>(duration_ns);
  rep.ap_busy_periods = acc.ap_periods;
  rep.ap_idle_slots = acc.ap_idle_slots;
  if (acc.ap_periods > 0)
    rep.idle_slots_per_tx = static_cast<double>(acc.ap_idle_slots) /
                            static_cast<double>(acc.ap_periods);
  rep.window_ns = options.window_ns;
  rep.window_bps.reserve(acc.window_bits.size());
  const double win_s = static_cast<double>(options.window_ns) * 1e-9;
  for (std::int64_t bits : acc.window_bits)
    rep.window_bps.push_back(static_cast<double>(bits) / win_s);
  if (acc.controller) rep.control_trace = acc.controller->trace();
  rep.ack_trace = std::move(acc.ack_trace);
  return rep;
}

}  // namespace csmalab::sim
