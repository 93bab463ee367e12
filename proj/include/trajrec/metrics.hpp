#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trajrec/errors.hpp"
#include "trajrec/geo.hpp"
#include "trajrec/road_network.hpp"
#include "trajrec/trace.hpp"

namespace trajrec {

struct MetricsConfig {
  double tau = 10.0;                  // PoT tolerance, meters
  double large_gap_threshold = 200.0; // step-gap counting, strict >
};

/// Coordinate-equality tolerance for adherence checks: 1e-6 degrees per
/// axis (~0.1 m), absorbing decimal-rendering round trips.
inline constexpr double kVertexMatchTolDeg = 1e-6;

inline bool coords_match(const GeoPoint& a, const GeoPoint& b) {
  return std::fabs(a.lat - b.lat) <= kVertexMatchTolDeg + 1e-12 &&
         std::fabs(a.lon - b.lon) <= kVertexMatchTolDeg + 1e-12;
}

// ---------------------------------------------------------------------------
// Reconstruction metrics
// ---------------------------------------------------------------------------

/// Mean nearest-point deviation of ground truth G against reconstruction R,
/// as a percentage of the masked length: (1/(|G| L_G)) sum_i min_j d(g_i, r_j) x 100.
/// Point-to-point by definition; see pot_* for the segment-based metric.
inline double mae_gr(const Polyline& G, const Polyline& R) {
  if (G.empty() || R.empty()) throw DegenerateGroundTruth("empty polyline in mae_gr");
  const double L = path_length(G);
  if (L <= 0.0) throw DegenerateGroundTruth("zero-length ground truth");
  double sum = 0.0;
  for (const auto& g : G.points) sum += min_point_distance(g, R);
  return sum / (static_cast<double>(G.size()) * L) * 100.0;
}

/// Mirror of mae_gr with roles and normalizer swapped (L_R).
inline double mae_rg(const Polyline& R, const Polyline& G) {
  if (G.empty() || R.empty()) throw DegenerateGroundTruth("empty polyline in mae_rg");
  const double L = path_length(R);
  if (L <= 0.0) throw DegenerateGroundTruth("zero-length reconstruction");
  double sum = 0.0;
  for (const auto& r : R.points) sum += min_point_distance(r, G);
  return sum / (static_cast<double>(R.size()) * L) * 100.0;
}

/// Harmonic mean with the documented (0,0) -> 0 convention.
inline double harmonic_mean(double a, double b) {
  if (a < 0.0 || b < 0.0) throw Error("harmonic mean needs non-negative inputs");
  if (a + b == 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

inline double mae_f1(double gr, double rg) { return harmonic_mean(gr, rg); }

/// Fraction of G's points within tau meters of R's piecewise-linear curve.
inline double pot_gr(const Polyline& G, const Polyline& R, double tau) {
  if (G.empty() || R.empty()) throw DegenerateGroundTruth("empty polyline in pot_gr");
  std::size_t hits = 0;
  for (const auto& g : G.points)
    if (min_segment_distance(g, R) <= tau) ++hits;
  return static_cast<double>(hits) / static_cast<double>(G.size()) * 100.0;
}

inline double pot_rg(const Polyline& R, const Polyline& G, double tau) {
  return pot_gr(R, G, tau);  // same form with roles swapped
}

inline double pot_f1(double gr, double rg) { return harmonic_mean(gr, rg); }

// ---------------------------------------------------------------------------
// Stage-quality diagnostics
// ---------------------------------------------------------------------------

/// Ordered road-id mentions with plan-level adjacency checking: the fraction
/// of distinct consecutive pairs that share an intersection. Single-road
/// plans (no distinct pairs) are fully connected.
inline double plan_connectivity(const std::vector<std::int64_t>& road_mentions,
                                const RoadNetwork& net) {
  std::size_t pairs = 0, connected = 0;
  for (std::size_t i = 0; i + 1 < road_mentions.size(); ++i) {
    if (road_mentions[i] == road_mentions[i + 1]) continue;
    ++pairs;
    if (net.adjacent(road_mentions[i], road_mentions[i + 1])) ++connected;
  }
  if (pairs == 0) return 100.0;
  return static_cast<double>(connected) / static_cast<double>(pairs) * 100.0;
}

/// Valid ids / referenced ids, pooled over road and intersection ids.
inline double network_adherence(const std::vector<std::int64_t>& road_ids,
                                const std::vector<std::int64_t>& intersection_ids,
                                const RoadNetwork& net) {
  std::size_t total = 0, valid = 0;
  for (auto id : road_ids) {
    ++total;
    if (net.roads.count(id)) ++valid;
  }
  for (auto id : intersection_ids) {
    ++total;
    if (net.intersections.count(id)) ++valid;
  }
  if (total == 0) return 100.0;
  return static_cast<double>(valid) / static_cast<double>(total) * 100.0;
}

/// Fraction of raw (pre-grounding) coordinates that are geometry vertices
/// (1e-6 degree per axis) or boundary anchors.
inline double geometry_adherence(const std::vector<Polyline>& raw_steps,
                                 const std::vector<GeoPoint>& vertices,
                                 const std::vector<GeoPoint>& anchors) {
  std::size_t total = 0, valid = 0;
  const auto is_valid = [&](const GeoPoint& p) {
    for (const auto& v : vertices)
      if (coords_match(p, v)) return true;
    for (const auto& a : anchors)
      if (coords_match(p, a)) return true;
    return false;
  };
  for (const auto& step : raw_steps)
    for (const auto& p : step.points) {
      ++total;
      if (is_valid(p)) ++valid;
    }
  if (total == 0) return 100.0;
  return static_cast<double>(valid) / static_cast<double>(total) * 100.0;
}

/// One plan step reduced to what the bearing diagnostic needs.
struct StepBearing {
  Cardinal stated = Cardinal::N;
  GeoPoint start;
  GeoPoint end;
};

struct BearingErrorResult {
  std::optional<double> mean_deg;  // absent when every step was degenerate
  std::size_t scored = 0;
  std::size_t skipped = 0;
};

/// Mean circular error between each step's stated cardinal (mapped to its
/// canonical bearing: N=0, NE=45, ..., NW=315) and the realized bearing of
/// the step's start -> end displacement. Steps with coincident endpoints
/// cannot be scored and are skipped (counted).
inline BearingErrorResult bearing_error(const std::vector<StepBearing>& steps) {
  BearingErrorResult res;
  double sum = 0.0;
  for (const auto& s : steps) {
    if (s.start == s.end) {
      ++res.skipped;
      continue;
    }
    const double expected = cardinal_center(s.stated);
    const double actual = initial_bearing(s.start, s.end);
    sum += circular_angle_error(expected, actual);
    ++res.scored;
  }
  if (res.scored > 0) res.mean_deg = sum / static_cast<double>(res.scored);
  return res;
}

struct StepGapStats {
  std::size_t num_steps = 0;
  std::size_t num_large_gaps = 0;
};

/// Distance between consecutive steps' boundary points; a gap strictly
/// longer than the threshold counts as large. Empty steps are bridged.
inline StepGapStats step_gap_stats(const std::vector<Polyline>& per_step_points,
                                   double large_gap_threshold) {
  StepGapStats stats;
  stats.num_steps = per_step_points.size();
  const Polyline* prev = nullptr;
  for (const auto& step : per_step_points) {
    if (step.empty()) continue;
    if (prev) {
      const double gap = haversine_distance(prev->points.back(), step.points.front());
      if (gap > large_gap_threshold) ++stats.num_large_gaps;
    }
    prev = &step;
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Per-task records and aggregation
// ---------------------------------------------------------------------------

struct EvalRecord {
  std::string task_id;
  std::string method;
  GapKind gap_kind = GapKind::Small;
  Activity activity = Activity::Unknown;
  std::string region;
  // Percents; MAE values are unbounded above for far-off reconstructions.
  double pot_gr = 0.0, pot_rg = 0.0, pot_f1 = 0.0;
  double mae_gr = 0.0, mae_rg = 0.0, mae_f1 = 0.0;
  std::optional<double> connectivity;          // plan-bearing methods only
  std::optional<double> network_adherence;
  std::optional<double> geometry_adherence;
  std::optional<double> bearing_error_mean;
  std::size_t bearing_steps_skipped = 0;
  std::size_t num_steps = 0;
  std::size_t num_large_gaps = 0;
  bool fallback = false;
  bool missing = false;  // no reconstruction was found for the task
};

enum class GroupBy { Method, Gap, Region, ActivityType };

inline const char* group_by_name(GroupBy g) {
  switch (g) {
    case GroupBy::Method: return "method";
    case GroupBy::Gap: return "gap_kind";
    case GroupBy::Region: return "region";
    case GroupBy::ActivityType: return "activity";
  }
  return "method";
}

struct AggregateRow {
  std::string group;
  std::size_t count = 0;
  double pot_gr = 0.0, pot_rg = 0.0, pot_f1 = 0.0;
  double mae_gr = 0.0, mae_rg = 0.0, mae_f1 = 0.0;
  std::optional<double> connectivity, network_adherence, geometry_adherence, bearing_error_mean;
  double avg_steps = 0.0, avg_large_gaps = 0.0;
  std::size_t fallbacks = 0;
};

/// Unweighted per-group means over the scored records (missing ones are
/// excluded); the final "overall" row averages every scored record.
inline std::vector<AggregateRow> aggregate(const std::vector<EvalRecord>& records, GroupBy group_by) {
  const auto key_of = [&](const EvalRecord& r) -> std::string {
    switch (group_by) {
      case GroupBy::Method: return r.method;
      case GroupBy::Gap: return gap_kind_name(r.gap_kind);
      case GroupBy::Region: return r.region;
      case GroupBy::ActivityType: return activity_name(r.activity);
    }
    return r.method;
  };

  std::map<std::string, std::vector<const EvalRecord*>> groups;
  std::vector<const EvalRecord*> all;
  for (const auto& r : records) {
    if (r.missing) continue;
    groups[key_of(r)].push_back(&r);
    all.push_back(&r);
  }

  const auto summarize = [](const std::string& name, const std::vector<const EvalRecord*>& rs) {
    AggregateRow row;
    row.group = name;
    row.count = rs.size();
    double conn = 0.0, net_adh = 0.0, geo_adh = 0.0, bear = 0.0;
    std::size_t n_conn = 0, n_net = 0, n_geo = 0, n_bear = 0;
    for (const auto* r : rs) {
      row.pot_gr += r->pot_gr;
      row.pot_rg += r->pot_rg;
      row.pot_f1 += r->pot_f1;
      row.mae_gr += r->mae_gr;
      row.mae_rg += r->mae_rg;
      row.mae_f1 += r->mae_f1;
      row.avg_steps += static_cast<double>(r->num_steps);
      row.avg_large_gaps += static_cast<double>(r->num_large_gaps);
      if (r->fallback) ++row.fallbacks;
      if (r->connectivity) { conn += *r->connectivity; ++n_conn; }
      if (r->network_adherence) { net_adh += *r->network_adherence; ++n_net; }
      if (r->geometry_adherence) { geo_adh += *r->geometry_adherence; ++n_geo; }
      if (r->bearing_error_mean) { bear += *r->bearing_error_mean; ++n_bear; }
    }
    const double n = static_cast<double>(rs.size());
    if (n > 0) {
      row.pot_gr /= n; row.pot_rg /= n; row.pot_f1 /= n;
      row.mae_gr /= n; row.mae_rg /= n; row.mae_f1 /= n;
      row.avg_steps /= n; row.avg_large_gaps /= n;
    }
    if (n_conn) row.connectivity = conn / static_cast<double>(n_conn);
    if (n_net) row.network_adherence = net_adh / static_cast<double>(n_net);
    if (n_geo) row.geometry_adherence = geo_adh / static_cast<double>(n_geo);
    if (n_bear) row.bearing_error_mean = bear / static_cast<double>(n_bear);
    return row;
  };

  std::vector<AggregateRow> rows;
  for (const auto& [name, rs] : groups) rows.push_back(summarize(name, rs));
  if (!all.empty()) rows.push_back(summarize("overall", all));
  return rows;
}

}  // namespace trajrec
