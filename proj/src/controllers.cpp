#include "csmalab/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace csmalab::ctrl {

AckPayload AckPayload::encode(double v, int stage) {
  if (!(v >= 0.0) || !(v <= 1.0))
    throw std::invalid_argument("payload value outside [0,1]");
  if (stage < 0 || stage > 15)
    throw std::invalid_argument("stage does not fit in 4 bits");
  AckPayload p;
  p.value_q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
  p.stage = static_cast<std::uint8_t>(stage);
  return p;
}

ApController::ApController(ApMode mode, std::int64_t update_period_ns,
                           double rate_bps, int max_stage)
    : mode_(mode),
      period_ns_(update_period_ns),
      rate_bps_(rate_bps),
      max_stage_(max_stage) {
  if (period_ns_ <= 0) throw std::invalid_argument("update period must be positive");
  if (!(rate_bps_ > 0)) throw std::invalid_argument("rate must be positive");
  kw_ = kw::kw_new(0.5, 0.0, 0.9);
  tora_ = kw::tora_new(0);
}

void ApController::on_decode(std::int64_t now_ns, std::int64_t payload_bits) {
  seg_bits_ += payload_bits;
  if (now_ns >= seg_start_ns_ + period_ns_) {
    // arrival-driven closure: nominal-period divisor even if we ran long
    close_segment(now_ns,
                  static_cast<double>(seg_bits_) /
                      (static_cast<double>(period_ns_) * 1e-9) / rate_bps_);
  }
}

void ApController::on_tick(std::int64_t now_ns) {
  if (now_ns < force_deadline_ns()) return;
  const double elapsed_s = static_cast<double>(now_ns - seg_start_ns_) * 1e-9;
  close_segment(now_ns, static_cast<double>(seg_bits_) / elapsed_s / rate_bps_);
}

void ApController::close_segment(std::int64_t now_ns, double measured_norm) {
  measured_norm = std::max(0.0, measured_norm);
  ControlSample row;
  row.t_ns = now_ns;
  if (mode_ == ApMode::WTop) {
    const bool was_minus = kw_.phase == kw::Phase::Minus;
    row.s_plus = was_minus && kw_.s_plus ? *kw_.s_plus : -1.0;
    row.s_minus = was_minus ? measured_norm : -1.0;
    if (!was_minus) row.s_plus = measured_norm;
    kw_ = kw::kw_report(kw_, measured_norm);
    row.p_val = kw_.p_val;
    row.probe = kw::kw_probe(kw_);
  } else {
    const bool was_minus = tora_.kw.phase == kw::Phase::Minus;
    row.s_plus = was_minus && tora_.kw.s_plus ? *tora_.kw.s_plus : -1.0;
    row.s_minus = was_minus ? measured_norm : -1.0;
    if (!was_minus) row.s_plus = measured_norm;
    tora_.kw = kw::kw_report(tora_.kw, measured_norm, /*advance_k=*/false);
    if (was_minus) tora_ = kw::tora_step(tora_, max_stage_);
    row.p_val = tora_.kw.p_val;
    row.probe = kw::kw_probe(tora_.kw);
    row.stage = tora_.stage_j;
  }
  trace_.push_back(row);
  seg_start_ns_ = now_ns;
  seg_bits_ = 0;
}

AckPayload ApController::payload() const {
  if (mode_ == ApMode::WTop) return AckPayload::encode(kw::kw_probe(kw_), 0);
  return AckPayload::encode(kw::kw_probe(tora_.kw), tora_.stage_j);
}

}  // namespace csmalab::ctrl
