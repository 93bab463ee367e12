#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "trajrec/geo.hpp"
#include "trajrec/map_match.hpp"
#include "trajrec/polyline_codec.hpp"
#include "trajrec/trace.hpp"

namespace trajrec {

inline constexpr double kInterpolationSpacingM = 25.0;

/// Evenly spaced points along the straight chord from p_s to p_e, both
/// endpoints included; count = ceil(d/spacing) + 1. Coincident endpoints
/// degenerate to a two-point polyline.
inline Polyline linear_interpolate(const GeoPoint& p_s, const GeoPoint& p_e, double spacing_m) {
  if (spacing_m <= 0.0) throw Error("interpolation spacing must be positive");
  Polyline out;
  const double d = haversine_distance(p_s, p_e);
  const auto segments = static_cast<std::size_t>(std::max(1.0, std::ceil(d / spacing_m)));
  for (std::size_t i = 0; i <= segments; ++i)
    out.points.push_back(lerp(p_s, p_e, static_cast<double>(i) / static_cast<double>(segments)));
  return out;
}

struct BaselineResult {
  Polyline line;
  std::vector<std::int64_t> road_sequence;
  bool fallback = false;  // map matching infeasible, raw linear line returned
};

/// Linear interpolation followed by HMM snapping. When matching is
/// infeasible (empty network, nothing in range) the raw linear polyline is
/// returned with the fallback flag so evaluation totals stay complete.
inline BaselineResult linear_plus_hmm(const GeoPoint& p_s, const GeoPoint& p_e,
                                      const RoadNetwork& net, const HmmParams& params,
                                      double spacing_m = kInterpolationSpacingM) {
  BaselineResult out;
  const Polyline line = linear_interpolate(p_s, p_e, spacing_m);
  try {
    MatchResult match = hmm_map_match(net, line, params);
    out.line = std::move(match.matched);
    out.road_sequence = std::move(match.road_sequence);
  } catch (const NoRoads&) {
    out.line = line;
    out.fallback = true;
  } catch (const MatchInfeasible&) {
    out.line = line;
    out.fallback = true;
  }
  return out;
}

inline BaselineResult linear_plus_hmm(const MaskedTask& task, const RoadNetwork& net,
                                      const HmmParams& params,
                                      double spacing_m = kInterpolationSpacingM) {
  HmmParams p = params;
  p.respect_oneway = task.activity == Activity::Driving || task.activity == Activity::Bus;
  return linear_plus_hmm(task.p_s, task.p_e, net, p, spacing_m);
}

}  // namespace trajrec
