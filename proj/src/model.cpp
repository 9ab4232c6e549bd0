#include "csmalab/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace csmalab::model {

namespace {

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

std::int64_t airtime_ns(double bits, double rate_bps) {
  return std::llround(bits / rate_bps * 1e9);
}

}  // namespace

void PhyMacConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (sigma_ns <= 0) fail("sigma_ns must be positive");
  if (sifs_ns < 0) fail("sifs_ns must be nonnegative");
  if (difs_ns <= 0) fail("difs_ns must be positive");
  if (!(rate_bps > 0)) fail("rate_bps must be positive");
  if (!(payload_bits > 0)) fail("payload_bits must be positive");
  if (header_bits < 0) fail("header_bits must be nonnegative");
  if (ack_bits < 0) fail("ack_bits must be nonnegative");
  if (cw_min < 2 || !is_pow2(cw_min)) fail("cw_min must be a power of two >= 2");
  if (max_stage < 0 || max_stage > 24) fail("max_stage must be in [0, 24]");
}

Timing derive_timing(const PhyMacConfig& cfg) {
  cfg.validate();
  Timing t;
  t.data_ns = airtime_ns(cfg.header_bits + cfg.payload_bits, cfg.rate_bps);
  t.ack_ns = airtime_ns(cfg.ack_bits, cfg.rate_bps);
  t.t_success_ns = t.data_ns + cfg.sifs_ns + t.ack_ns + cfg.difs_ns;
  t.t_collision_ns = t.data_ns + cfg.difs_ns;
  t.t_success_slots = static_cast<double>(t.t_success_ns) / static_cast<double>(cfg.sigma_ns);
  t.t_collision_slots = static_cast<double>(t.t_collision_ns) / static_cast<double>(cfg.sigma_ns);
  if (t.t_success_ns <= t.t_collision_ns)
    throw std::invalid_argument("success airtime must exceed collision airtime");
  return t;
}

WeightVector::WeightVector(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) throw std::invalid_argument("weight vector must be nonempty");
  for (double v : w_)
    if (!(v > 0) || !std::isfinite(v))
      throw std::invalid_argument("weights must be positive finite");
}

WeightVector WeightVector::uniform(int n) {
  if (n < 1) throw std::invalid_argument("need at least one station");
  return WeightVector(std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

double WeightVector::sum() const {
  return std::accumulate(w_.begin(), w_.end(), 0.0);
}

double weight_map(double p, double w) {
  if (!(p >= 0.0) || !(p <= 1.0)) throw std::invalid_argument("p outside [0,1]");
  if (!(w > 0)) throw std::invalid_argument("weight must be positive");
  // w*p / (1 + (w-1)*p): identity at w=1, fixes the endpoints for any w.
  return w * p / (1.0 + (w - 1.0) * p);
}

std::vector<double> station_throughputs(std::span<const double> attempt_probs,
                                        const PhyMacConfig& cfg) {
  const Timing t = derive_timing(cfg);
  const int n = static_cast<int>(attempt_probs.size());
  if (n < 1) throw std::invalid_argument("need at least one station");
  double p_idle = 1.0;    // no station attempts in a slot
  double sum_odds = 0.0;  // sum of p_i / (1 - p_i)
  for (double p : attempt_probs) {
    if (!(p >= 0.0) || !(p < 1.0))
      throw std::invalid_argument("attempt probabilities must lie in [0,1)");
    p_idle *= 1.0 - p;
    sum_odds += p / (1.0 - p);
  }
  if (sum_odds == 0.0) throw std::invalid_argument("at least one station must attempt");

  // P(slot carries a lone winner i) = p_i * prod_{j!=i}(1-p_j) = p_idle * odds_i.
  // E[slot length] = sigma*p_idle + T_s*P_succ + T_c*(1 - p_idle - P_succ).
  const double p_succ = p_idle * sum_odds;
  const double sigma = static_cast<double>(cfg.sigma_ns) * 1e-9;
  const double ts = static_cast<double>(t.t_success_ns) * 1e-9;
  const double tc = static_cast<double>(t.t_collision_ns) * 1e-9;
  const double mean_slot =
      sigma * p_idle + ts * p_succ + tc * (1.0 - p_idle - p_succ);

  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double p = attempt_probs[static_cast<std::size_t>(i)];
    const double win = p_idle * (p / (1.0 - p));
    out[static_cast<std::size_t>(i)] = cfg.payload_bits * win / mean_slot;
  }
  return out;
}

double system_throughput(double p, const WeightVector& weights,
                         const PhyMacConfig& cfg) {
  if (p == 0.0) return 0.0;
  std::vector<double> probs(static_cast<std::size_t>(weights.size()));
  for (int i = 0; i < weights.size(); ++i)
    probs[static_cast<std::size_t>(i)] = weight_map(p, weights[i]);
  const auto per = station_throughputs(probs, cfg);
  return std::accumulate(per.begin(), per.end(), 0.0);
}

double gradient_indicator(double p, const WeightVector& weights,
                          const PhyMacConfig& cfg) {
  const Timing t = derive_timing(cfg);
  double p_idle = 1.0;
  double sum_p = 0.0;
  for (int i = 0; i < weights.size(); ++i) {
    const double pi = weight_map(p, weights[i]);
    if (pi >= 1.0) {
      // Degenerate only at p=1 with w>=1; handle via the limit below.
      p_idle = 0.0;
    } else {
      p_idle *= 1.0 - pi;
    }
    sum_p += pi;
  }
  // Positive iff throughput is increasing at p. Equals 1 at p=0 and
  // -(n-1)*t_collision_slots at p=1.
  return t.t_collision_slots * (1.0 - sum_p - p_idle) + p_idle;
}

std::optional<double> optimal_p(const WeightVector& weights,
                                const PhyMacConfig& cfg) {
  constexpr double kLo = 1e-6;
  constexpr double kHi = 1.0 - 1e-6;
  double lo = kLo, hi = kHi;
  double f_lo = gradient_indicator(lo, weights, cfg);
  double f_hi = gradient_indicator(hi, weights, cfg);
  if (f_lo <= 0.0 || f_hi >= 0.0) return std::nullopt;  // single station: f > 0 on (0,1)
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = gradient_indicator(mid, weights, cfg);
    if (f_mid > 0.0) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  return 0.5 * (lo + hi);
}

double approx_optimal_p(int n_stations, const PhyMacConfig& cfg) {
  if (n_stations < 1) throw std::invalid_argument("need at least one station");
  const Timing t = derive_timing(cfg);
  return 1.0 / (n_stations * std::sqrt(t.t_collision_slots / 2.0));
}

}  // namespace csmalab::model
