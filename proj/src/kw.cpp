#include "csmalab/kw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace csmalab::kw {

double KwState::a_k() const { return 1.0 / k; }

double KwState::b_k() const { return 1.0 / std::cbrt(static_cast<double>(k)); }

KwState kw_new(double initial, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("need lo < hi");
  if (!(initial >= lo) || !(initial <= hi))
    throw std::invalid_argument("initial outside [lo, hi]");
  KwState st;
  st.k = 2;
  st.p_val = initial;
  st.phase = Phase::Plus;
  st.lo = lo;
  st.hi = hi;
  return st;
}

double kw_probe(const KwState& state) {
  const double b = state.b_k();
  const double raw =
      state.phase == Phase::Plus ? state.p_val + b : state.p_val - b;
  return std::clamp(raw, state.lo, state.hi);
}

KwState kw_report(KwState state, double measured, bool advance_k) {
  if (!(measured >= 0.0)) throw std::invalid_argument("measured must be >= 0");
  if (state.phase == Phase::Plus) {
    state.s_plus = measured;
    state.phase = Phase::Minus;
    return state;
  }
  if (!state.s_plus)
    throw std::logic_error("Minus report without a stored Plus measurement");
  state.p_val += state.a_k() * (*state.s_plus - measured) / state.b_k();
  state.p_val = std::clamp(state.p_val, state.lo + kIterateMargin,
                           state.hi - kIterateMargin);
  state.s_plus.reset();
  state.phase = Phase::Plus;
  if (advance_k) ++state.k;
  return state;
}

ToraState tora_new(int stage_j, double initial, double delta_lo,
                   double delta_hi) {
  if (stage_j < 0) throw std::invalid_argument("stage_j must be >= 0");
  if (!(0.0 < delta_lo && delta_lo < delta_hi && delta_hi < 1.0))
    throw std::invalid_argument("need 0 < delta_lo < delta_hi < 1");
  ToraState st;
  st.kw = kw_new(initial, 0.0, 1.0);
  st.stage_j = stage_j;
  st.delta_lo = delta_lo;
  st.delta_hi = delta_hi;
  return st;
}

ToraState tora_step(ToraState state, int m) {
  if (m < 1) throw std::invalid_argument("need at least one stage");
  if (state.stage_j > m - 1)
    throw std::invalid_argument("stage_j outside [0, m-1]");
  // p0 at the floor means even "always reset to j" is too aggressive:
  // move up a stage. At the ceiling the search wants a shorter window.
  // Jumps re-center p0 and do not advance k.
  if (state.kw.p_val <= state.delta_lo && state.stage_j < m - 1) {
    state.stage_j += 1;
    state.kw.p_val = 0.5;
  } else if (state.kw.p_val >= state.delta_hi && state.stage_j > 0) {
    state.stage_j -= 1;
    state.kw.p_val = 0.5;
  } else {
    state.kw.k += 1;
  }
  return state;
}

}  // namespace csmalab::kw
