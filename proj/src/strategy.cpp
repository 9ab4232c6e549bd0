#include "csmalab/strategy.hpp"

#include <algorithm>
#include <stdexcept>

namespace csmalab::sim {

namespace {

int cw_at_stage(int stage, const model::PhyMacConfig& cfg) {
  return std::min(cfg.cw_min << stage, cfg.cw_max());
}

// Reset-rule sample shared by RandomReset and the controlled variant:
// stay at j with probability p0, otherwise uniform over {j+1..m}.
int sample_reset_stage(int j, double p0, int m, Rng& rng) {
  if (j >= m) return m;
  if (rng.bernoulli(p0)) return j;
  return j + 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - j)));
}

class PPersistent final : public Strategy {
 public:
  explicit PPersistent(double p) : p_(p) {}
  bool on_slot(Rng& rng) override { return rng.bernoulli(p_); }
  void on_success(const ctrl::AckPayload&, Rng&) override {}
  void on_failure(Rng&) override {}
  double persist_prob() const override { return p_; }

 private:
  double p_;
};

// Classic slotted backoff: wait a uniformly drawn number of idle slots,
// transmit, then redraw from the stage picked by the outcome.
class CounterBackoff : public Strategy {
 public:
  CounterBackoff(int initial_stage, const model::PhyMacConfig& cfg, Rng& rng)
      : cfg_(cfg), stage_(initial_stage) {
    redraw(rng);
  }

  bool on_slot(Rng& rng) override {
    (void)rng;
    if (counter_ == 0) return true;
    --counter_;
    return false;
  }

  void on_failure(Rng& rng) override {
    stage_ = std::min(stage_ + 1, cfg_.max_stage);
    redraw(rng);
  }

  bool blocks_during_ack_wait() const override { return true; }
  int stage() const override { return stage_; }

 protected:
  void set_stage_and_redraw(int stage, Rng& rng) {
    stage_ = stage;
    redraw(rng);
  }
  const model::PhyMacConfig& config() const { return cfg_; }

 private:
  void redraw(Rng& rng) {
    counter_ = static_cast<int>(
        rng.below(static_cast<std::uint64_t>(cw_at_stage(stage_, cfg_))));
  }

  model::PhyMacConfig cfg_;
  int stage_;
  int counter_ = 0;
};

class StdDcf final : public CounterBackoff {
 public:
  StdDcf(const model::PhyMacConfig& cfg, Rng& rng) : CounterBackoff(0, cfg, rng) {}
  void on_success(const ctrl::AckPayload&, Rng& rng) override {
    set_stage_and_redraw(0, rng);
  }
};

class RandomReset final : public CounterBackoff {
 public:
  RandomReset(int j, double p0, const model::PhyMacConfig& cfg, Rng& rng)
      : CounterBackoff(j, cfg, rng), j_(j), p0_(p0) {}
  void on_success(const ctrl::AckPayload&, Rng& rng) override {
    set_stage_and_redraw(sample_reset_stage(j_, p0_, config().max_stage, rng),
                         rng);
  }

 private:
  int j_;
  double p0_;
};

// Per-slot persistence steered by AIMD so the observed idle slots per
// transmission track a fixed target.
class IdleSense final : public Strategy {
 public:
  IdleSense(const StrategySpec& spec) : spec_(spec) {}
  bool on_slot(Rng& rng) override { return rng.bernoulli(p_); }
  void on_success(const ctrl::AckPayload&, Rng&) override {}
  void on_failure(Rng&) override {}

  void on_channel_activity(std::int64_t idle_slots) override {
    idle_accum_ += idle_slots;
    if (++tx_seen_ < spec_.idle_window) return;
    const double mean = static_cast<double>(idle_accum_) / tx_seen_;
    if (mean < spec_.idle_target)
      p_ *= spec_.idle_md;  // channel too busy, back off
    else
      p_ += spec_.idle_ai;
    p_ = std::clamp(p_, 1e-4, 0.5);
    idle_accum_ = 0;
    tx_seen_ = 0;
  }

  double persist_prob() const override { return p_; }

 private:
  StrategySpec spec_;
  double p_ = 0.1;
  std::int64_t idle_accum_ = 0;
  int tx_seen_ = 0;
};

// AP-steered p-persistence: every decoded ACK rebases p_t through the
// weight map. Floored away from zero so a zero probe cannot silence the
// whole cell (see kNodePersistFloor).
class WTopNode final : public Strategy {
 public:
  static constexpr double kInitialP = 0.1;
  explicit WTopNode(double weight) : w_(weight) {}
  bool on_slot(Rng& rng) override { return rng.bernoulli(p_t_); }
  void on_success(const ctrl::AckPayload& ack, Rng&) override { apply(ack); }
  void on_other_ack(const ctrl::AckPayload& ack) override { apply(ack); }
  void on_failure(Rng&) override {}
  void on_ack_drought() override { p_t_ = kInitialP; }
  double persist_prob() const override { return p_t_; }

 private:
  void apply(const ctrl::AckPayload& ack) {
    p_t_ = std::max(model::weight_map(ack.value(), w_), ctrl::kNodePersistFloor);
  }

  double w_;
  double p_t_ = kInitialP;
};

// AP-steered exponential backoff: attempts are memoryless at 2/CW of the
// current stage; the stage resets through the broadcast (p0, j) rule on
// success and climbs on failure.
class ToraNode final : public Strategy {
 public:
  explicit ToraNode(const model::PhyMacConfig& cfg) : cfg_(cfg) {}

  bool on_slot(Rng& rng) override {
    return rng.bernoulli(2.0 / cw_at_stage(stage_, cfg_));
  }
  void on_success(const ctrl::AckPayload& ack, Rng& rng) override {
    stage_ =
        sample_reset_stage(ack.stage, ack.value(), cfg_.max_stage, rng);
  }
  void on_failure(Rng&) override {
    stage_ = std::min(stage_ + 1, cfg_.max_stage);
  }

  int stage() const override { return stage_; }
  double persist_prob() const override {
    return 2.0 / cw_at_stage(stage_, cfg_);
  }

 private:
  model::PhyMacConfig cfg_;
  int stage_ = 0;
};

}  // namespace

void StrategySpec::validate(const model::PhyMacConfig& cfg) const {
  switch (kind) {
    case Kind::PPersistent:
      if (!(p > 0.0) || !(p <= 1.0))
        throw std::invalid_argument("p-persistent probability outside (0,1]");
      break;
    case Kind::RandomReset:
      if (reset_stage < 0 || reset_stage > cfg.max_stage)
        throw std::invalid_argument("reset stage outside the ladder");
      if (!(reset_p0 >= 0.0) || !(reset_p0 <= 1.0))
        throw std::invalid_argument("reset p0 outside [0,1]");
      if (reset_stage == cfg.max_stage && reset_p0 != 1.0)
        throw std::invalid_argument("top-stage reset requires p0 = 1");
      break;
    case Kind::IdleSense:
      if (!(idle_target > 0)) throw std::invalid_argument("idle target must be positive");
      if (!(idle_md > 0.0) || !(idle_md < 1.0))
        throw std::invalid_argument("idle_md outside (0,1)");
      if (!(idle_ai > 0.0)) throw std::invalid_argument("idle_ai must be positive");
      if (idle_window < 1) throw std::invalid_argument("idle_window must be >= 1");
      break;
    case Kind::WTop:
      if (!(weight > 0.0)) throw std::invalid_argument("weight must be positive");
      break;
    case Kind::StdDcf:
    case Kind::Tora:
      break;
  }
}

std::unique_ptr<Strategy> make_strategy(const StrategySpec& spec,
                                        const model::PhyMacConfig& cfg,
                                        Rng& rng) {
  spec.validate(cfg);
  switch (spec.kind) {
    case StrategySpec::Kind::PPersistent:
      return std::make_unique<PPersistent>(spec.p);
    case StrategySpec::Kind::StdDcf:
      return std::make_unique<StdDcf>(cfg, rng);
    case StrategySpec::Kind::RandomReset:
      return std::make_unique<RandomReset>(spec.reset_stage, spec.reset_p0, cfg,
                                           rng);
    case StrategySpec::Kind::IdleSense:
      return std::make_unique<IdleSense>(spec);
    case StrategySpec::Kind::WTop:
      return std::make_unique<WTopNode>(spec.weight);
    case StrategySpec::Kind::Tora:
      return std::make_unique<ToraNode>(cfg);
  }
  throw std::logic_error("unreachable");
}

}  // namespace csmalab::sim
