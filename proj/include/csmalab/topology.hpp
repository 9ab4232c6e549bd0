#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace csmalab::sim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// N points equally spaced on a circle about the AP (origin), first at angle 0.
std::vector<Vec2> place_ring(int n, double radius_m);

// N area-uniform points on the disc, deterministic per seed.
std::vector<Vec2> place_disc(int n, double radius_m, std::uint64_t seed);

// Static geometry plus the derived sensing structure. The AP sits at the
// origin; every node must be able to reach it. Sensing is symmetric by
// construction (distance threshold), and a node always senses itself.
struct Topology {
  std::vector<Vec2> positions;
  double sense_radius_m = 24.0;
  double tx_radius_m = 16.0;
  std::vector<std::vector<int>> sense_sets;  // sorted, includes self
  int hidden_pairs = 0;

  int size() const { return static_cast<int>(positions.size()); }
  bool fully_connected() const { return hidden_pairs == 0; }
  bool senses(int i, int j) const;
  std::string to_json() const;
};

Topology build_topology(std::vector<Vec2> positions, double sense_radius_m,
                        double tx_radius_m);

}  // namespace csmalab::sim
