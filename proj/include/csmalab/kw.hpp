#pragma once

#include <optional>

namespace csmalab::kw {

enum class Phase { Plus, Minus };

// One Kiefer-Wolfowitz finite-difference iteration: probe at p_val + b_k,
// then at p_val - b_k, then step p_val by a_k * (S_plus - S_minus) / b_k.
// Gains a_k = 1/k and b_k = 1/k^(1/3) satisfy the usual summability
// conditions. States are value types: operations take state in, state out.
struct KwState {
  int k = 2;
  double p_val = 0.5;
  Phase phase = Phase::Plus;
  std::optional<double> s_plus;
  double lo = 0.0;
  double hi = 1.0;

  double a_k() const;
  double b_k() const;  // exactly 0.1 at k=1000
};

// Probes are clamped to [lo, hi]; the iterate itself is kept in
// [lo + kIterateMargin, hi - kIterateMargin] so both probes stay distinct
// points and p_val cannot escape the box after a large noisy step.
inline constexpr double kIterateMargin = 1e-3;

KwState kw_new(double initial, double lo, double hi);

// Current probe point: clamp(p_val + b_k) in the Plus phase,
// clamp(p_val - b_k) in the Minus phase. Pure.
double kw_probe(const KwState& state);

// Feed back the throughput measured at the current probe. A Plus report
// just records S_plus and flips phase; a Minus report applies the gradient
// step, flips back to Plus and (when advance_k) increments k. The TORA
// wrapper passes advance_k = false and owns the increment in tora_step.
KwState kw_report(KwState state, double measured, bool advance_k = true);

// Stage-tracking extension: the same scalar iteration runs on a reset
// probability p0 while stage_j selects which backoff stage the search is
// centered on. stage_j stays in [0, m-1].
struct ToraState {
  KwState kw;
  int stage_j = 0;
  double delta_lo = 0.05;
  double delta_hi = 0.95;
};

ToraState tora_new(int stage_j = 0, double initial = 0.5, double delta_lo = 0.05,
                   double delta_hi = 0.95);

// Call right after a Minus-phase kw_report(..., advance_k=false). When the
// iterate has been pushed to a threshold the maximizer lies outside the
// current stage's reachable range: jump the stage and restart p0 at 0.5
// without advancing k. Otherwise k advances as usual.
ToraState tora_step(ToraState state, int m);

}  // namespace csmalab::kw
