#pragma once

/// @file dbscan.hpp
/// @brief DBSCAN over planar points with a uniform-grid neighbour index.

#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "magsuture/core.hpp"

namespace magsuture {

inline constexpr int kNoise = -1;

struct DbscanResult {
  /// Cluster id per input point, or kNoise.
  std::vector<int> labels;
  int cluster_count = 0;
};

/// Standard DBSCAN: a point is core when at least `min_pts` points (itself included)
/// lie within `eps`. Cluster ids follow the order in which seeds are met.
inline DbscanResult dbscan(std::span<const Vec2> pts, double eps, int min_pts) {
  if (!(eps > 0.0)) throw DomainError("dbscan: eps must be positive");
  if (min_pts < 1) throw DomainError("dbscan: min_pts must be >= 1");

  const auto cell_of = [eps](double v) { return static_cast<std::int64_t>(std::floor(v / eps)); };
  const auto key = [](std::int64_t cx, std::int64_t cy) { return (cx << 32) ^ (cy & 0xffffffffll); };
  std::unordered_map<std::int64_t, std::vector<int>> grid;
  grid.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    grid[key(cell_of(pts[i].x()), cell_of(pts[i].y()))].push_back(static_cast<int>(i));

  const double eps2 = eps * eps;
  std::vector<int> nbrs;
  const auto region = [&](int i) {
    nbrs.clear();
    const std::int64_t cx = cell_of(pts[i].x());
    const std::int64_t cy = cell_of(pts[i].y());
    for (std::int64_t dy = -1; dy <= 1; ++dy)
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto it = grid.find(key(cx + dx, cy + dy));
        if (it == grid.end()) continue;
        for (int j : it->second)
          if ((pts[j] - pts[i]).squaredNorm() <= eps2) nbrs.push_back(j);
      }
  };

  constexpr int kUnvisited = -2;
  DbscanResult out;
  out.labels.assign(pts.size(), kUnvisited);
  std::vector<int> frontier;
  for (std::size_t s = 0; s < pts.size(); ++s) {
    if (out.labels[s] != kUnvisited) continue;
    region(static_cast<int>(s));
    if (static_cast<int>(nbrs.size()) < min_pts) {
      out.labels[s] = kNoise;
      continue;
    }
    const int id = out.cluster_count++;
    out.labels[s] = id;
    frontier.assign(nbrs.begin(), nbrs.end());
    while (!frontier.empty()) {
      const int q = frontier.back();
      frontier.pop_back();
      if (out.labels[q] == kNoise) out.labels[q] = id;  // border point
      if (out.labels[q] != kUnvisited) continue;
      out.labels[q] = id;
      region(q);
      if (static_cast<int>(nbrs.size()) >= min_pts)
        for (int j : nbrs)
          if (out.labels[j] == kUnvisited || out.labels[j] == kNoise) frontier.push_back(j);
    }
  }
  return out;
}

/// Groups points by cluster label, dropping noise.
inline std::vector<std::vector<Vec2>> group_clusters(std::span<const Vec2> pts, const DbscanResult& r) {
  std::vector<std::vector<Vec2>> groups(static_cast<std::size_t>(r.cluster_count));
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (r.labels[i] >= 0) groups[static_cast<std::size_t>(r.labels[i])].push_back(pts[i]);
  return groups;
}

}  // namespace magsuture
