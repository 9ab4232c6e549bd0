#pragma once

#include <cstdint>
#include <memory>

#include "csmalab/controllers.hpp"
#include "csmalab/model.hpp"
#include "csmalab/rng.hpp"

namespace csmalab::sim {

// Per-node contention behavior, config-level description.
struct StrategySpec {
  enum class Kind { PPersistent, StdDcf, RandomReset, IdleSense, WTop, Tora };
  Kind kind = Kind::StdDcf;
  double p = 0.1;            // PPersistent: fixed attempt probability
  int reset_stage = 0;       // RandomReset j
  double reset_p0 = 1.0;     // RandomReset stay probability
  double idle_target = 3.1;  // IdleSense target idle slots per transmission
  double idle_md = 0.9;      // IdleSense multiplicative decrease on p
  double idle_ai = 0.001;    // IdleSense additive increase on p
  int idle_window = 200;     // IdleSense adaptation window (transmissions)
  double weight = 1.0;       // WTop fairness weight

  void validate(const model::PhyMacConfig& cfg) const;
};

// Node-side contention state machine. The simulator calls on_slot at every
// idle slot boundary the node observes; a true return transmits in that
// slot. Outcome callbacks arrive at ACK decode / timeout times.
//
// blocks_during_ack_wait distinguishes the two contention families:
// counter-based backoff needs the outcome before it can pick the next
// counter, so the
// node sits out slot boundaries between its data end and the ACK/timeout;
// memoryless (per-slot probability) strategies keep contending through
// that window, which is also what keeps them aligned with the analytic
// slot model.
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual bool on_slot(Rng& rng) = 0;
  virtual void on_success(const ctrl::AckPayload& ack, Rng& rng) = 0;
  virtual void on_failure(Rng& rng) = 0;
  virtual void on_other_ack(const ctrl::AckPayload& ack) { (void)ack; }
  virtual void on_channel_activity(std::int64_t idle_slots) { (void)idle_slots; }
  // Fired after kAckDroughtNs with no ACK on the air at all. AP-steered
  // persistence must shed a poisoned (too-high) broadcast probability here:
  // with every station at, say, p = 0.9, no transmission ever succeeds, so
  // no ACK can deliver the next probe and the cell would stay dead forever.
  virtual void on_ack_drought() {}
  virtual bool blocks_during_ack_wait() const { return false; }
  virtual int stage() const { return 0; }
  virtual double persist_prob() const { return 0.0; }
};

// ACK silence span after which stations fall back to protocol defaults.
// Healthy cells see ACK gaps of a few ms at worst, so this never fires in
// normal operation; a dead cell recovers within ~one span.
inline constexpr std::int64_t kAckDroughtNs = 10'000'000;

std::unique_ptr<Strategy> make_strategy(const StrategySpec& spec,
                                        const model::PhyMacConfig& cfg,
                                        Rng& rng);

}  // namespace csmalab::sim
