#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "trajrec/errors.hpp"
#include "trajrec/geo.hpp"
#include "trajrec/road_network.hpp"

namespace trajrec {

struct HmmParams {
  double sigma_z = 10.0;             // emission noise scale, meters
  double beta = 50.0;                // transition discrepancy scale, meters
  int max_candidates_per_point = 5;
  double candidate_radius = 50.0;    // meters
  bool respect_oneway = false;       // enabled for driving/bus
};

struct MatchResult {
  Polyline matched;
  std::vector<std::int64_t> road_sequence;  // consecutive duplicates collapsed
  double log_prob = 0.0;
  std::size_t observations_used = 0;
  std::size_t observations_dropped = 0;
};

namespace mm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Node-level routing graph: vertices are OSM node ids, edges are consecutive
/// geometry points of each road. Oneway roads contribute forward edges only
/// when oneway handling is on.
struct RouteGraph {
  std::map<std::int64_t, std::vector<std::pair<std::int64_t, double>>> adj;
  std::map<std::int64_t, GeoPoint> node_loc;
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> edge_road;  // directed (u,v)

  static RouteGraph build(const RoadNetwork& net, bool respect_oneway) {
    RouteGraph g;
    for (const auto& [rid, road] : net.roads) {
      for (std::size_t i = 0; i < road.node_ids.size(); ++i)
        g.node_loc.emplace(road.node_ids[i], road.geometry[i]);
      for (std::size_t i = 0; i + 1 < road.node_ids.size(); ++i) {
        const std::int64_t u = road.node_ids[i], v = road.node_ids[i + 1];
        const double w = haversine_distance(road.geometry[i], road.geometry[i + 1]);
        g.add_edge(u, v, w, rid);
        if (!(respect_oneway && road.oneway)) g.add_edge(v, u, w, rid);
      }
    }
    return g;
  }

  void add_edge(std::int64_t u, std::int64_t v, double w, std::int64_t rid) {
    adj[u].emplace_back(v, w);
    auto [it, inserted] = edge_road.emplace(std::make_pair(u, v), rid);
    if (!inserted && rid < it->second) it->second = rid;
  }
};

struct Candidate {
  std::int64_t road_id = 0;
  GeoPoint point;
  double distance_m = 0.0;
  bool point_road = false;     // single-vertex road (e.g., station)
  std::int64_t node_single = 0;
  std::size_t seg = 0;         // geometry[seg..seg+1]
  double t = 0.0;
  std::int64_t node_back = 0, node_fwd = 0;
  double off_back = 0.0, off_fwd = 0.0;  // arc offsets to segment endpoints
};

/// Best projection per road within the radius, then the closest
/// max_candidates overall; ties break on road id.
inline std::vector<Candidate> candidates_for(const RoadNetwork& net, const GeoPoint& p,
                                             const HmmParams& params) {
  std::vector<Candidate> all;
  for (const auto& [rid, road] : net.roads) {
    if (road.geometry.empty()) continue;
    Candidate best;
    best.distance_m = kInf;
    if (road.geometry.size() == 1) {
      const double d = haversine_distance(p, road.geometry[0]);
      if (d < best.distance_m)
        best = Candidate{rid, road.geometry[0], d, true, road.node_ids[0], 0, 0.0, 0, 0, 0.0, 0.0};
    } else {
      for (std::size_t i = 0; i + 1 < road.geometry.size(); ++i) {
        const auto proj = detail::project_to_segment(p, road.geometry[i], road.geometry[i + 1]);
        if (proj.distance_m < best.distance_m) {
          const double seg_len = haversine_distance(road.geometry[i], road.geometry[i + 1]);
          best = Candidate{rid,
                           proj.closest,
                           proj.distance_m,
                           false,
                           0,
                           i,
                           proj.t,
                           road.node_ids[i],
                           road.node_ids[i + 1],
                           proj.t * seg_len,
                           (1.0 - proj.t) * seg_len};
        }
      }
    }
    if (best.distance_m <= params.candidate_radius) all.push_back(best);
  }
  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
    if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
    return a.road_id < b.road_id;
  });
  if (all.size() > static_cast<std::size_t>(params.max_candidates_per_point))
    all.resize(static_cast<std::size_t>(params.max_candidates_per_point));
  return all;
}

struct DijkstraResult {
  std::map<std::int64_t, double> dist;
  std::map<std::int64_t, std::int64_t> pred;  // node -> previous node (0 for sources)
};

inline DijkstraResult dijkstra(const RouteGraph& g,
                               const std::vector<std::pair<std::int64_t, double>>& sources,
                               double max_dist = 50000.0) {
  DijkstraResult res;
  using Item = std::pair<double, std::int64_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (const auto& [node, cost] : sources) {
    auto it = res.dist.find(node);
    if (it == res.dist.end() || cost < it->second) {
      res.dist[node] = cost;
      res.pred[node] = 0;
      pq.emplace(cost, node);
    }
  }
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > res.dist[u]) continue;
    if (d > max_dist) continue;
    auto it = g.adj.find(u);
    if (it == g.adj.end()) continue;
    for (const auto& [v, w] : it->second) {
      const double nd = d + w;
      auto dv = res.dist.find(v);
      if (dv == res.dist.end() || nd < dv->second) {
        res.dist[v] = nd;
        res.pred[v] = u;
        pq.emplace(nd, v);
      }
    }
  }
  return res;
}

/// Exit frontier of a candidate: (node, arc cost) pairs a traveler can reach
/// when leaving it. Oneway forbids moving backward to the segment start.
inline std::vector<std::pair<std::int64_t, double>> exit_sources(const Candidate& c,
                                                                 const RoadNetwork& net,
                                                                 bool respect_oneway) {
  if (c.point_road) return {{c.node_single, 0.0}};
  const bool oneway = respect_oneway && net.roads.at(c.road_id).oneway;
  std::vector<std::pair<std::int64_t, double>> out;
  out.emplace_back(c.node_fwd, c.off_fwd);
  if (!oneway) out.emplace_back(c.node_back, c.off_back);
  return out;
}

/// Entry costs of a candidate keyed by the graph node the route arrives at.
inline std::vector<std::pair<std::int64_t, double>> entry_costs(const Candidate& c,
                                                                const RoadNetwork& net,
                                                                bool respect_oneway) {
  if (c.point_road) return {{c.node_single, 0.0}};
  const bool oneway = respect_oneway && net.roads.at(c.road_id).oneway;
  std::vector<std::pair<std::int64_t, double>> out;
  out.emplace_back(c.node_back, c.off_back);
  if (!oneway) out.emplace_back(c.node_fwd, c.off_fwd);
  return out;
}

/// Along-road shortcut when both candidates sit on the same segment.
inline double same_segment_distance(const Candidate& a, const Candidate& b, const RoadNetwork& net,
                                    bool respect_oneway) {
  if (a.point_road || b.point_road) {
    if (a.point_road && b.point_road && a.road_id == b.road_id) return 0.0;
    return kInf;
  }
  if (a.road_id != b.road_id || a.seg != b.seg) return kInf;
  const bool oneway = respect_oneway && net.roads.at(a.road_id).oneway;
  if (oneway && b.t < a.t) return kInf;
  return std::fabs(a.off_back - b.off_back);
}

inline double route_distance_from(const DijkstraResult& dik, const Candidate& from,
                                  const Candidate& to, const RoadNetwork& net,
                                  bool respect_oneway) {
  double best = same_segment_distance(from, to, net, respect_oneway);
  for (const auto& [node, cost] : entry_costs(to, net, respect_oneway)) {
    auto it = dik.dist.find(node);
    if (it != dik.dist.end()) best = std::min(best, it->second + cost);
  }
  return best;
}

}  // namespace mm

/// Shortest-path distance between two snapped positions, used by the
/// transition model and exposed for tests.
inline double route_distance(const RoadNetwork& net, const mm::RouteGraph& graph,
                             const mm::Candidate& from, const mm::Candidate& to,
                             bool respect_oneway) {
  const auto dik = mm::dijkstra(graph, mm::exit_sources(from, net, respect_oneway));
  return mm::route_distance_from(dik, from, to, net, respect_oneway);
}

/// HMM map matching: Gaussian emissions on snap distance, transitions scored
/// by |great-circle step / route distance| discrepancy, Viterbi decode.
/// Observations with no candidate in range are dropped; dropping all of them
/// is a MatchInfeasible error.
inline MatchResult hmm_map_match(const RoadNetwork& net, const Polyline& observations,
                                 const HmmParams& params) {
  if (net.empty()) throw NoRoads("cannot match against an empty network");
  if (observations.size() < 2) throw MatchInfeasible("need at least 2 observations");

  const mm::RouteGraph graph = mm::RouteGraph::build(net, params.respect_oneway);

  // Layers: observations that have candidates.
  std::vector<GeoPoint> obs;
  std::vector<std::vector<mm::Candidate>> layers;
  std::size_t dropped = 0;
  for (const auto& p : observations.points) {
    auto cands = mm::candidates_for(net, p, params);
    if (cands.empty()) {
      ++dropped;
      continue;
    }
    obs.push_back(p);
    layers.push_back(std::move(cands));
  }
  if (layers.empty()) throw MatchInfeasible("no observation has a candidate within radius");

  const auto emission = [&](const mm::Candidate& c) {
    const double r = c.distance_m / params.sigma_z;
    return -0.5 * r * r;
  };

  const std::size_t T = layers.size();
  std::vector<std::vector<double>> dp(T);
  std::vector<std::vector<int>> pred(T);
  dp[0].resize(layers[0].size());
  pred[0].assign(layers[0].size(), -1);
  for (std::size_t k = 0; k < layers[0].size(); ++k) dp[0][k] = emission(layers[0][k]);

  for (std::size_t t = 1; t < T; ++t) {
    const double gc = haversine_distance(obs[t - 1], obs[t]);
    dp[t].assign(layers[t].size(), -mm::kInf);
    pred[t].assign(layers[t].size(), -1);
    for (std::size_t j = 0; j < layers[t - 1].size(); ++j) {
      if (dp[t - 1][j] == -mm::kInf) continue;
      const auto dik = mm::dijkstra(graph, mm::exit_sources(layers[t - 1][j], net, params.respect_oneway));
      for (std::size_t k = 0; k < layers[t].size(); ++k) {
        const double route =
            mm::route_distance_from(dik, layers[t - 1][j], layers[t][k], net, params.respect_oneway);
        if (route == mm::kInf) continue;
        const double lp = dp[t - 1][j] - std::fabs(gc - route) / params.beta + emission(layers[t][k]);
        if (lp > dp[t][k]) {
          dp[t][k] = lp;
          pred[t][k] = static_cast<int>(j);
        }
      }
    }
  }

  // Backtrack from the best final candidate.
  std::size_t best_k = 0;
  double best_lp = -mm::kInf;
  for (std::size_t k = 0; k < dp[T - 1].size(); ++k)
    if (dp[T - 1][k] > best_lp) {
      best_lp = dp[T - 1][k];
      best_k = k;
    }
  if (best_lp == -mm::kInf)
    throw MatchInfeasible("no connected candidate sequence through the network");

  std::vector<const mm::Candidate*> chosen(T);
  {
    int k = static_cast<int>(best_k);
    for (std::size_t t = T; t-- > 0;) {
      chosen[t] = &layers[t][static_cast<std::size_t>(k)];
      if (t > 0) k = pred[t][static_cast<std::size_t>(k)];
    }
  }

  MatchResult result;
  result.log_prob = best_lp;
  result.observations_used = T;
  result.observations_dropped = dropped;

  const auto push_point = [&](const GeoPoint& p) {
    if (result.matched.empty() || !(result.matched.points.back() == p))
      result.matched.points.push_back(p);
  };
  const auto push_road = [&](std::int64_t rid) {
    if (result.road_sequence.empty() || result.road_sequence.back() != rid)
      result.road_sequence.push_back(rid);
  };

  push_point(chosen[0]->point);
  push_road(chosen[0]->road_id);
  for (std::size_t t = 1; t < T; ++t) {
    const mm::Candidate& a = *chosen[t - 1];
    const mm::Candidate& b = *chosen[t];
    const double direct = mm::same_segment_distance(a, b, net, params.respect_oneway);
    const auto dik = mm::dijkstra(graph, mm::exit_sources(a, net, params.respect_oneway));
    double via_graph = mm::kInf;
    std::int64_t entry_node = 0;
    for (const auto& [node, cost] : mm::entry_costs(b, net, params.respect_oneway)) {
      auto it = dik.dist.find(node);
      if (it != dik.dist.end() && it->second + cost < via_graph) {
        via_graph = it->second + cost;
        entry_node = node;
      }
    }
    if (direct <= via_graph) {
      push_road(b.road_id);
      push_point(b.point);
      continue;
    }
    // Walk the predecessor chain to recover the node path and its roads.
    std::vector<std::int64_t> chain;
    for (std::int64_t n = entry_node; n != 0; n = dik.pred.at(n)) chain.push_back(n);
    std::reverse(chain.begin(), chain.end());
    for (std::size_t i = 0; i < chain.size(); ++i) {
      if (i > 0) {
        auto er = graph.edge_road.find({chain[i - 1], chain[i]});
        if (er != graph.edge_road.end()) push_road(er->second);
      }
      push_point(graph.node_loc.at(chain[i]));
    }
    push_road(b.road_id);
    push_point(b.point);
  }
  return result;
}

}  // namespace trajrec
