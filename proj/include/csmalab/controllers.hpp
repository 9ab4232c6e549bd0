#pragma once

#include <cstdint>
#include <vector>

#include "csmalab/kw.hpp"

namespace csmalab::ctrl {

// Wire format of the control feedback piggybacked on every ACK: a 16-bit
// fixed-point fraction (the p-persistence probe, or the stay probability p0)
// plus a 4-bit backoff stage (unused in p-persistence mode).
struct AckPayload {
  std::uint16_t value_q = 0;
  std::uint8_t stage = 0;

  double value() const { return value_q / 65535.0; }
  static AckPayload encode(double v, int stage);
};

enum class ApMode { WTop, Tora };

// One row per segment closure, for convergence plots and payload audits.
struct ControlSample {
  std::int64_t t_ns = 0;
  double p_val = 0.0;   // center estimate after the closure
  double probe = 0.0;   // probe broadcast from this closure on
  double s_plus = -1.0; // normalized segment throughputs (-1 = not set)
  double s_minus = -1.0;
  int stage = 0;
};

// AP-side controller: accumulates decoded payload bits into fixed-length
// segments, converts each closed segment into a throughput measurement for
// the stochastic optimizer, and exposes the probe to piggyback on ACKs.
//
// Segment closure is checked lazily on packet arrival, dividing by the
// nominal period even when the segment ran long (the arrival-driven rule).
// A silent channel would never close a segment that way, so a watchdog
// closes any segment that reaches 4x the period, dividing by the actual
// elapsed time instead.
class ApController {
 public:
  ApController(ApMode mode, std::int64_t update_period_ns, double rate_bps,
               int max_stage);

  // Packet decoded at the AP: account it, maybe close the segment.
  void on_decode(std::int64_t now_ns, std::int64_t payload_bits);
  // Watchdog hook; call generously (idle slot boundaries are fine).
  void on_tick(std::int64_t now_ns);
  // Probe in force right now, as it would be emitted at ACK time.
  AckPayload payload() const;

  std::int64_t force_deadline_ns() const { return seg_start_ns_ + 4 * period_ns_; }
  ApMode mode() const { return mode_; }
  const std::vector<ControlSample>& trace() const { return trace_; }

 private:
  void close_segment(std::int64_t now_ns, double measured_norm);

  ApMode mode_;
  std::int64_t period_ns_;
  double rate_bps_;
  int max_stage_;
  kw::KwState kw_;       // wTOP mode
  kw::ToraState tora_;   // TORA mode
  std::int64_t seg_start_ns_ = 0;
  std::int64_t seg_bits_ = 0;
  std::vector<ControlSample> trace_;
};

// Node-side floor for the applied persistence probability. The probe itself
// may reach 0 (the minus clamp), and a station that obeyed that literally
// would fall silent together with everyone else -- with no transmissions
// there is no ACK to carry the next probe, and the loop deadlocks. Keeping
// a hair of persistence lets the plus probe resurrect the channel.
inline constexpr double kNodePersistFloor = 1e-3;

}  // namespace csmalab::ctrl
