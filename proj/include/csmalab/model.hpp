#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace csmalab::model {

// PHY/MAC parameters for a saturated single-AP WLAN cell. Defaults follow a
// common 54 Mb/s OFDM setup with a short contention window ladder.
struct PhyMacConfig {
  std::int64_t sigma_ns = 9'000;   // idle slot
  std::int64_t sifs_ns = 16'000;
  std::int64_t difs_ns = 34'000;
  double rate_bps = 54e6;
  double payload_bits = 8'000;     // expected payload per frame
  double header_bits = 272;
  double ack_bits = 112;
  int cw_min = 8;                  // power of two, >= 2
  int max_stage = 7;               // CW doubles per stage up to cw_min * 2^max_stage

  int cw_max() const { return cw_min << max_stage; }
  void validate() const;           // throws std::invalid_argument
};

// Channel-occupancy durations derived from the config. Airtimes are rounded
// to whole nanoseconds before summing.
struct Timing {
  std::int64_t data_ns = 0;    // header + payload airtime
  std::int64_t ack_ns = 0;
  std::int64_t t_success_ns = 0;  // data + SIFS + ACK + DIFS
  std::int64_t t_collision_ns = 0;  // data + DIFS
  double t_success_slots = 0.0;   // normalized by the idle slot
  double t_collision_slots = 0.0;
};

Timing derive_timing(const PhyMacConfig& cfg);

// Per-station attempt weights; stations with weight w obtain w times the
// unit-weight station throughput.
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> w);  // all entries > 0, size >= 1
  static WeightVector uniform(int n);

  int size() const { return static_cast<int>(w_.size()); }
  double operator[](int i) const { return w_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& values() const { return w_; }
  double sum() const;

 private:
  std::vector<double> w_;
};

// Attempt probability of a station holding weight w when the unit-weight
// attempt probability is p. Identity at w=1; maps [0,1] into [0,1].
double weight_map(double p, double w);

// Per-station saturation throughput (bits/s) for heterogeneous attempt
// probabilities. Requires each p_i in [0,1) and at least one p_i > 0.
std::vector<double> station_throughputs(std::span<const double> attempt_probs,
                                        const PhyMacConfig& cfg);

// Aggregate saturation throughput (bits/s) when station i attempts with
// probability weight_map(p, w_i).
double system_throughput(double p, const WeightVector& weights,
                         const PhyMacConfig& cfg);

// Sign indicator for d/dp of system_throughput: strictly decreasing in p,
// equal to 1 at p=0 and negative at p=1 for two or more stations. Its root
// is the throughput-maximizing p.
double gradient_indicator(double p, const WeightVector& weights,
                          const PhyMacConfig& cfg);

// Throughput-maximizing unit-weight attempt probability, via bisection on
// gradient_indicator over [1e-6, 1-1e-6]. For a single station throughput
// increases on [0,1) and no interior maximizer exists: returns nullopt.
std::optional<double> optimal_p(const WeightVector& weights,
                                const PhyMacConfig& cfg);

// Closed-form large-N approximation 1 / (n * sqrt(t_collision_slots / 2)).
double approx_optimal_p(int n_stations, const PhyMacConfig& cfg);

}  // namespace csmalab::model
