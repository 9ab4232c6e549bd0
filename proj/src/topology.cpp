#include "csmalab/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

#include "csmalab/rng.hpp"

namespace csmalab::sim {

namespace {

double dist(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace

std::vector<Vec2> place_ring(int n, double radius_m) {
  if (n < 1) throw std::invalid_argument("need at least one node");
  if (!(radius_m > 0)) throw std::invalid_argument("radius must be positive");
  std::vector<Vec2> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    pts[static_cast<std::size_t>(i)] = {radius_m * std::cos(a),
                                        radius_m * std::sin(a)};
  }
  return pts;
}

std::vector<Vec2> place_disc(int n, double radius_m, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("need at least one node");
  if (!(radius_m > 0)) throw std::invalid_argument("radius must be positive");
  Rng rng(Rng::derive(seed, 0x70706f));
  std::vector<Vec2> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double r = radius_m * std::sqrt(rng.uniform01());
    const double a = 2.0 * std::numbers::pi * rng.uniform01();
    pts[static_cast<std::size_t>(i)] = {r * std::cos(a), r * std::sin(a)};
  }
  return pts;
}

bool Topology::senses(int i, int j) const {
  const auto& s = sense_sets[static_cast<std::size_t>(i)];
  return std::binary_search(s.begin(), s.end(), j);
}

std::string Topology::to_json() const {
  nlohmann::json j;
  j["sense_radius_m"] = sense_radius_m;
  j["tx_radius_m"] = tx_radius_m;
  j["hidden_pairs"] = hidden_pairs;
  auto& pos = j["positions"] = nlohmann::json::array();
  for (const auto& p : positions) pos.push_back({p.x, p.y});
  j["sense_sets"] = sense_sets;
  return j.dump(2);
}

Topology build_topology(std::vector<Vec2> positions, double sense_radius_m,
                        double tx_radius_m) {
  if (positions.empty()) throw std::invalid_argument("need at least one node");
  if (!(sense_radius_m > 0) || !(tx_radius_m > 0))
    throw std::invalid_argument("radii must be positive");
  Topology t;
  t.positions = std::move(positions);
  t.sense_radius_m = sense_radius_m;
  t.tx_radius_m = tx_radius_m;
  const int n = t.size();
  const Vec2 ap{0.0, 0.0};
  for (int i = 0; i < n; ++i)
    if (dist(t.positions[static_cast<std::size_t>(i)], ap) > tx_radius_m)
      throw std::invalid_argument("node " + std::to_string(i) +
                                  " outside AP transmission range");
  t.sense_sets.assign(static_cast<std::size_t>(n), {});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || dist(t.positions[static_cast<std::size_t>(i)],
                         t.positions[static_cast<std::size_t>(j)]) <=
                        sense_radius_m)
        t.sense_sets[static_cast<std::size_t>(i)].push_back(j);
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!t.senses(i, j)) ++t.hidden_pairs;
  return t;
}

}  // namespace csmalab::sim
