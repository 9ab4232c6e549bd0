#pragma once

#include <span>
#include <vector>

namespace csmalab::model {

struct UnimodalReport {
  bool ok = false;
  int peak_index = -1;             // last argmax of ys
  std::vector<int> violations;     // sample indices breaking the shape
};

// Noise-tolerant unimodality check of ys sampled at strictly increasing xs
// (n >= 3). Samples may deviate by tol = noise_tol * max(ys): before the
// peak each sample must stay within tol of the running max, after it within
// tol of the running min. The peak is the LAST argmax so plateaus and
// near-ties at the top do not count against the rising phase.
UnimodalReport check_unimodal(std::span<const double> xs,
                              std::span<const double> ys, double noise_tol);

}  // namespace csmalab::model
