#include "csmalab/backoff.hpp"

#include <cmath>
#include <stdexcept>

namespace csmalab::model {

ResetDistribution::ResetDistribution(std::vector<double> q_in)
    : q(std::move(q_in)) {
  if (q.empty() || q.size() > 32)
    throw std::invalid_argument("reset distribution needs 1..32 stages");
  double total = 0.0;
  for (double v : q) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("reset probabilities must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("reset probabilities must sum to 1");
  for (double& v : q) v /= total;
}

std::vector<double> stage_alphas(double c, int max_stage) {
  if (!(c >= 0.0) || !(c <= 1.0)) throw std::invalid_argument("c outside [0,1]");
  if (max_stage < 0 || max_stage > 31)
    throw std::invalid_argument("max_stage outside [0,31]");
  std::vector<double> a(static_cast<std::size_t>(max_stage) + 1);
  a[static_cast<std::size_t>(max_stage)] = std::ldexp(1.0, max_stage);
  for (int j = max_stage - 1; j >= 0; --j)
    a[static_cast<std::size_t>(j)] =
        (1.0 - c) * std::ldexp(1.0, j) + c * a[static_cast<std::size_t>(j) + 1];
  return a;
}

double tau_given_c(const ResetDistribution& reset, double c,
                   const PhyMacConfig& cfg) {
  cfg.validate();
  if (reset.max_stage() != cfg.max_stage)
    throw std::invalid_argument("reset distribution does not match max_stage");
  const auto alphas = stage_alphas(c, cfg.max_stage);
  double mean_alpha = 0.0;
  for (std::size_t j = 0; j < reset.q.size(); ++j)
    mean_alpha += reset.q[j] * alphas[j];
  return 2.0 / (cfg.cw_min * mean_alpha);
}

double collision_given_tau(double tau, int n_stations) {
  if (!(tau >= 0.0) || !(tau <= 1.0))
    throw std::invalid_argument("tau outside [0,1]");
  if (n_stations < 1) throw std::invalid_argument("need at least one station");
  return 1.0 - std::pow(1.0 - tau, n_stations - 1);
}

FixedPointSolution solve_attempt_fixed_point(const ResetDistribution& reset,
                                             int n_stations,
                                             const PhyMacConfig& cfg,
                                             double tol, int max_iters,
                                             std::optional<double> start) {
  if (n_stations < 1) throw std::invalid_argument("need at least one station");
  auto step = [&](double tau) {
    return tau_given_c(reset, collision_given_tau(tau, n_stations), cfg);
  };
  FixedPointSolution sol;
  double tau = start.value_or(tau_given_c(reset, 0.0, cfg));
  if (!(tau > 0.0) || !(tau < 1.0))
    throw std::invalid_argument("start outside (0,1)");
  for (; sol.iterations < max_iters; ++sol.iterations) {
    const double next = 0.5 * tau + 0.5 * step(tau);
    if (std::abs(next - tau) < tol) {
      tau = next;
      break;
    }
    tau = next;
  }
  if (std::abs(step(tau) - tau) > 10 * tol) {
    // Damped iteration stalled; g(tau) = tau - step(tau) is strictly
    // increasing with g < 0 at the lower end, so bisect.
    double lo = tau_given_c(reset, 1.0, cfg);
    double hi = tau_given_c(reset, 0.0, cfg);
    for (int it = 0; it < 200 && hi - lo > tol * 1e-2; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mid - step(mid) < 0.0 ? lo : hi) = mid;
      ++sol.iterations;
    }
    tau = 0.5 * (lo + hi);
  }
  sol.tau = tau;
  sol.c = collision_given_tau(tau, n_stations);
  sol.residual = std::abs(step(tau) - tau);
  return sol;
}

ResetDistribution rr_reset_distribution(int reset_stage, double p0,
                                        int max_stage) {
  if (max_stage < 0 || max_stage > 31)
    throw std::invalid_argument("max_stage outside [0,31]");
  if (reset_stage < 0 || reset_stage > max_stage)
    throw std::invalid_argument("reset_stage outside [0,max_stage]");
  if (!(p0 >= 0.0) || !(p0 <= 1.0)) throw std::invalid_argument("p0 outside [0,1]");
  if (reset_stage == max_stage && p0 != 1.0)
    throw std::invalid_argument("reset_stage == max_stage requires p0 == 1");
  std::vector<double> q(static_cast<std::size_t>(max_stage) + 1, 0.0);
  q[static_cast<std::size_t>(reset_stage)] = p0;
  const int above = max_stage - reset_stage;
  for (int j = reset_stage + 1; j <= max_stage; ++j)
    q[static_cast<std::size_t>(j)] = (1.0 - p0) / above;
  return ResetDistribution(std::move(q));
}

double rr_throughput(int reset_stage, double p0, int n_stations,
                     const PhyMacConfig& cfg) {
  const auto reset = rr_reset_distribution(reset_stage, p0, cfg.max_stage);
  const auto sol = solve_attempt_fixed_point(reset, n_stations, cfg);
  const std::vector<double> probs(static_cast<std::size_t>(n_stations), sol.tau);
  const auto per = station_throughputs(probs, cfg);
  double total = 0.0;
  for (double s : per) total += s;
  return total;
}

}  // namespace csmalab::model
