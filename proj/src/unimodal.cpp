#include "csmalab/unimodal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace csmalab::model {

UnimodalReport check_unimodal(std::span<const double> xs,
                              std::span<const double> ys, double noise_tol) {
  const std::size_t n = ys.size();
  if (xs.size() != n) throw std::invalid_argument("xs and ys sizes differ");
  if (n < 3) throw std::invalid_argument("need at least three samples");
  if (!(noise_tol >= 0.0)) throw std::invalid_argument("noise_tol must be >= 0");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(xs[i] < xs[i + 1]))
      throw std::invalid_argument("xs must be strictly increasing");
  for (double y : ys)
    if (!std::isfinite(y)) throw std::invalid_argument("ys must be finite");

  UnimodalReport rep;
  std::size_t peak = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (ys[i] >= ys[peak]) peak = i;
  rep.peak_index = static_cast<int>(peak);

  const double tol = noise_tol * *std::max_element(ys.begin(), ys.end());
  double run_max = ys[0];
  for (std::size_t i = 1; i <= peak; ++i) {
    if (ys[i] < run_max - tol) rep.violations.push_back(static_cast<int>(i));
    run_max = std::max(run_max, ys[i]);
  }
  double run_min = ys[peak];
  for (std::size_t i = peak + 1; i < n; ++i) {
    if (ys[i] > run_min + tol) rep.violations.push_back(static_cast<int>(i));
    run_min = std::min(run_min, ys[i]);
  }
  rep.ok = rep.violations.empty();
  return rep;
}

}  // namespace csmalab::model
