#pragma once

#include <optional>
#include <vector>

#include "csmalab/model.hpp"

namespace csmalab::model {

// Distribution over backoff stages {0..max_stage} that a station samples
// after a successful transmission. Normalized on construction.
struct ResetDistribution {
  explicit ResetDistribution(std::vector<double> q);
  int max_stage() const { return static_cast<int>(q.size()) - 1; }
  std::vector<double> q;
};

// Expected contention-window factors alpha_j(c) for j = 0..max_stage, where
// c is the per-attempt collision probability. alpha_m = 2^m and
// alpha_j = (1-c) 2^j + c alpha_{j+1}: the window seen from stage j averaged
// over the doubling walk absorbed at the top stage.
std::vector<double> stage_alphas(double c, int max_stage);

// Attempt probability of a station that resets according to `reset` and
// faces collision probability c on every attempt: (2/cw_min) / sum q_j alpha_j.
double tau_given_c(const ResetDistribution& reset, double c,
                   const PhyMacConfig& cfg);

// Collision probability seen by one of n stations all attempting with tau.
double collision_given_tau(double tau, int n_stations);

struct FixedPointSolution {
  double tau = 0.0;
  double c = 0.0;
  double residual = 0.0;  // |tau - tau_given_c(reset, c(tau))| at the solution
  int iterations = 0;
};

// Consistent (tau, c) for n homogeneous stations with the given reset
// distribution. tau_given_c is strictly decreasing in c and
// collision_given_tau strictly increasing in tau, so the fixed point is
// unique; solved by damped iteration with a bisection fallback.
// start, if given, seeds the damped iteration (defaults to the c = 0 value);
// any seed in the feasible range converges to the same point.
FixedPointSolution solve_attempt_fixed_point(const ResetDistribution& reset,
                                             int n_stations,
                                             const PhyMacConfig& cfg,
                                             double tol = 1e-10,
                                             int max_iters = 10'000,
                                             std::optional<double> start = {});

// Two-parameter reset family: after a success from stage >= reset_stage j,
// stay at j with probability p0, otherwise pick uniformly from {j+1..m}.
// j = m forces p0 = 1.
ResetDistribution rr_reset_distribution(int reset_stage, double p0,
                                        int max_stage);

// Saturation throughput (bits/s) of n stations running the reset family
// above, at the consistent attempt probability.
double rr_throughput(int reset_stage, double p0, int n_stations,
                     const PhyMacConfig& cfg);

}  // namespace csmalab::model
