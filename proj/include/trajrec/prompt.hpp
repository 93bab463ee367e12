#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trajrec/errors.hpp"
#include "trajrec/geo.hpp"
#include "trajrec/plan.hpp"
#include "trajrec/road_network.hpp"
#include "trajrec/trace.hpp"
#include "trajrec/util.hpp"

namespace trajrec {

/// Step budget offered to the planner by gap kind.
inline constexpr int kSmallGapStepCap = 3;
inline constexpr int kLargeGapStepCap = 7;

inline int step_cap_for(GapKind kind) {
  return kind == GapKind::Small ? kSmallGapStepCap : kLargeGapStepCap;
}

enum class ContextSide { Before, After };

struct ContextSummary {
  ContextSide side = ContextSide::Before;
  std::optional<double> avg_speed_mps;  // present iff timestamps allow it
  std::optional<Cardinal> heading;
  std::string narrative;
};

namespace detail {

inline std::string activity_gerund(Activity a) {
  switch (a) {
    case Activity::Hiking: return "hiking";
    case Activity::Driving: return "driving";
    case Activity::Walking: return "walking";
    case Activity::Cycling: return "cycling";
    case Activity::Flying: return "flying";
    case Activity::Boat: return "boating";
    case Activity::Bus: return "riding the bus";
    case Activity::Train: return "riding the train";
    case Activity::Unknown: break;
  }
  return "moving";
}

}  // namespace detail

/// Speed and heading summary of the visible points adjacent to the gap.
/// Heading uses the 2 boundary points, speed the 10 boundary points (fewer
/// when unavailable); with no usable timestamps the speed line is omitted
/// rather than fabricated. `road_names` supplies snapped road labels for
/// the narrative (before: [start road, gap-side road]; after: [onward road]).
inline ContextSummary build_context_summary(const TimedPath& points, ContextSide side,
                                            Activity activity = Activity::Unknown,
                                            const std::vector<std::string>& road_names = {}) {
  if (points.size() < 2) throw EmptyTrace("context summary needs at least 2 points");
  ContextSummary out;
  out.side = side;

  const std::size_t n = points.size();
  const GeoPoint& h1 = side == ContextSide::Before ? points[n - 2].point : points[0].point;
  const GeoPoint& h2 = side == ContextSide::Before ? points[n - 1].point : points[1].point;
  if (!(h1 == h2)) out.heading = cardinal_8(initial_bearing(h1, h2));

  const std::size_t window = std::min<std::size_t>(10, n);
  const std::size_t lo = side == ContextSide::Before ? n - window : 0;
  const std::size_t hi = lo + window - 1;  // inclusive
  if (points[lo].time && points[hi].time && *points[hi].time > *points[lo].time) {
    Polyline seg;
    for (std::size_t i = lo; i <= hi; ++i) seg.points.push_back(points[i].point);
    out.avg_speed_mps =
        path_length(seg) / static_cast<double>(*points[hi].time - *points[lo].time);
  }

  const std::string gerund = detail::activity_gerund(activity);
  std::string text;
  if (side == ContextSide::Before) {
    if (road_names.size() >= 2 && road_names[0] != road_names[1])
      text += "- Starting near " + road_names[0] + ", continuing along " + road_names[1] + "\n";
    else if (!road_names.empty())
      text += "- Travelling along " + road_names[0] + "\n";
    if (out.heading)
      text += "- The traveler was heading " + std::string(cardinal_plain(*out.heading)) +
              " before entering the masked segment\n";
    if (out.avg_speed_mps)
      text += "- Average speed: " + format_fixed(*out.avg_speed_mps, 1) + " m/s (steady " + gerund + ")\n";
    if (text.empty()) text = "- No movement context available\n";
  } else {
    const std::string onward = road_names.empty() ? "the onward route" : road_names[0];
    if (out.heading)
      text += "Route narrative: Traveler continues " + std::string(cardinal_plain(*out.heading)) +
              " and will connect to " + onward + ".\n";
    else
      text += "Route narrative: Traveler will connect to " + onward + ".\n";
    if (out.avg_speed_mps)
      text += "Movement: Expected speed steady at ~" + format_fixed(*out.avg_speed_mps, 0) + " m/s.\n";
    text += "Behavioral interpretation: Still " + gerund + " straight, no significant detours.\n";
  }
  out.narrative = text;
  return out;
}

/// Snap analysis of one masked-segment endpoint as shown to the planner.
struct EndpointAnalysis {
  SnapResult snap;
  std::string road_display;        // e.g. "unnamed cycleway" or "Landover Road"
  std::int64_t nearest_node = 0;   // candidate/junction anchor on the snapped road
};

inline std::string endpoint_road_display(const Road& road) {
  return road.name ? *road.name : "unnamed " + road.highway_type;
}

/// Stage-1 planning prompt. Byte-deterministic given identical inputs:
/// endpoints at 7 decimals, activity upper-cased, integer meter distance,
/// and a step budget tied to the gap kind.
inline std::string build_stage1_prompt(const MaskedTask& task, const ContextSummary& before,
                                       const ContextSummary& after, const EndpointAnalysis& start,
                                       const EndpointAnalysis& end, const std::string& network_text,
                                       int step_cap) {
  const long long dist = std::llround(haversine_distance(task.p_s, task.p_e));
  std::string p;
  p += "You are a navigation expert. Create a connected path from start to end point.\n\n";
  p += "Start: [" + coord7(task.p_s.lat) + ", " + coord7(task.p_s.lon) + "]\n";
  p += "End: [" + coord7(task.p_e.lat) + ", " + coord7(task.p_e.lon) + "]\n";
  p += "Activity: " + to_upper(activity_name(task.activity)) + "\n";
  p += "Distance: " + std::to_string(dist) + "m\n\n";
  p += "--- CONTEXT BEFORE ---\n" + before.narrative + "\n";
  p += "--- CONTEXT AFTER ---\n" + after.narrative + "\n";
  p += "--- START POINT ANALYSIS ---\n";
  p += "Snapped to: " + start.road_display + " (id=" + std::to_string(start.snap.road_id) +
       "), confidence = " + format_fixed(start.snap.confidence, 2) + "\n";
  p += "Bearing at entry: ~" + format_fixed(start.snap.entry_bearing, 1) + "° (" +
       cardinal_word(cardinal_8(start.snap.entry_bearing)) + ")\n";
  p += "Next candidate node: (node_id_original=" + std::to_string(start.nearest_node) + ")\n\n";
  p += "--- END POINT ANALYSIS ---\n";
  p += "Snapped to: " + end.road_display + " (id=" + std::to_string(end.snap.road_id) +
       "), confidence = " + format_fixed(end.snap.confidence, 2) + "\n";
  p += "Required approach bearing: ~" + format_fixed(end.snap.entry_bearing, 0) + "°\n";
  p += "Nearest junction: (node_id_original=" + std::to_string(end.nearest_node) + ")\n\n";
  p += network_text;
  if (!network_text.empty() && network_text.back() != '\n') p += "\n";
  p += "\n--- TASK ---\n";
  p += "Choose a logical path from start to end point based on the activity and distance.\n";
  p += "Output step-by-step navigation with road names, IDs, and intersections.\n\n";
  p += "--- EVALUATION REQUIREMENTS ---\n";
  p += "1. Path must be physically connected via shared intersections.\n";
  p += "2. Max " + std::to_string(step_cap) + " steps (distance = " + std::to_string(dist) + "m).\n";
  p += "3. Each step must include:\n";
  p += "   • Direction (e.g., east, southeast).\n";
  p += "   • Road name + ID (e.g., cycleway (id=1347175623)).\n";
  p += "   • Target intersection ID (node_id_original=XXXX).\n";
  p += "4. Prefer \"continue straight\" over turns.\n";
  p += "5. Do not include coordinate lists in step descriptions.\n\n";
  p += "--- OUTPUT FORMAT ---\n";
  p += "REASONING: Justification for path choice.\n";
  p += "STEP-BY-STEP NAVIGATION: Structured steps following schema.\n";
  return p;
}

/// The geometry shown to Stage 2 for one step: the step's road, its target
/// intersection, and the next road in the plan.
struct GeometrySlice {
  struct Entry {
    std::int64_t id = 0;
    std::string name;
    Polyline geometry;
  };
  struct Node {
    std::int64_t id = 0;
    GeoPoint location;
  };
  std::vector<Entry> roads;
  std::vector<Node> intersections;

  std::vector<GeoPoint> vertices() const {
    std::vector<GeoPoint> out;
    for (const auto& r : roads) out.insert(out.end(), r.geometry.points.begin(), r.geometry.points.end());
    for (const auto& n : intersections) out.push_back(n.location);
    return out;
  }
};

inline GeometrySlice slice_for_step(const RoadNetwork& net, const NavStep& step,
                                    std::optional<std::int64_t> next_road_id) {
  GeometrySlice slice;
  const auto add_road = [&](std::int64_t rid) {
    const auto it = net.roads.find(rid);
    if (it == net.roads.end()) return;
    for (const auto& e : slice.roads)
      if (e.id == rid) return;
    slice.roads.push_back({rid, it->second.name.value_or("unnamed"), it->second.geometry});
  };
  add_road(step.road_id);
  if (next_road_id) add_road(*next_road_id);
  if (step.target_intersection_id) {
    const auto it = net.intersections.find(*step.target_intersection_id);
    if (it != net.intersections.end())
      slice.intersections.push_back({it->first, it->second.location});
  }
  return slice;
}

/// Stage-2 coordinate-generation prompt: the step text verbatim, the slice
/// geometry at 7 decimals, and the chained starting coordinate.
inline std::string build_stage2_prompt(const NavStep& step, const GeometrySlice& slice,
                                       const GeoPoint& start_coordinate) {
  std::string p;
  p += "**TASK:** Generate coordinates for step_" + std::to_string(step.index) +
       " from the geometry below.\n\n";
  p += "**STEP_" + std::to_string(step.index) + " DESCRIPTION:**\n";
  p += step.text + "\n\n";
  p += "**GEOMETRY (excerpt):**\n";
  p += "{\n \"roads\": [\n";
  for (std::size_t i = 0; i < slice.roads.size(); ++i) {
    const auto& r = slice.roads[i];
    p += "   {\n";
    p += "     \"id\": " + std::to_string(r.id) + ",\n";
    p += "     \"name\": \"" + r.name + "\",\n";
    p += "     \"geometry\": [\n";
    for (std::size_t j = 0; j < r.geometry.size(); ++j) {
      p += "       [" + coord7(r.geometry[j].lat) + ", " + coord7(r.geometry[j].lon) + "]";
      p += j + 1 < r.geometry.size() ? ",\n" : "\n";
    }
    p += "     ]\n   }";
    p += i + 1 < slice.roads.size() ? ",\n" : "\n";
  }
  p += " ],\n \"intersections\": [\n";
  for (std::size_t i = 0; i < slice.intersections.size(); ++i) {
    const auto& x = slice.intersections[i];
    p += "   {\"id\": " + std::to_string(x.id) + ", \"lat\": " + coord7(x.location.lat) +
         ", \"lon\": " + coord7(x.location.lon) + "}";
    p += i + 1 < slice.intersections.size() ? ",\n" : "\n";
  }
  p += " ]\n}\n\n";
  p += "Starting coordinate: [" + coord7(start_coordinate.lat) + ", " + coord7(start_coordinate.lon) + "] ";
  p += step.index == 1 ? "(from start point)\n\n" : "(from step_" + std::to_string(step.index - 1) + ")\n\n";
  p += "**GENERATE ONLY THE CONTINUATION OF THIS LIST, STARTING WITH A COMMA:**\n";
  return p;
}

// ---------------------------------------------------------------------------
// Preference-aware planning prompt
// ---------------------------------------------------------------------------

struct PreferenceProfile {
  std::string name;
  std::string description;
  std::vector<std::string> priorities;  // ordered
};

/// Target length band relative to the direct distance.
inline constexpr double kPreferenceBandLow = 0.95;
inline constexpr double kPreferenceBandHigh = 1.45;
inline constexpr double kAnchorRadiusM = 60.0;
inline constexpr double kAnchorHardCapM = 100.0;
inline constexpr int kPreferenceStepCap = 10;

struct AnchorSuggestion {
  std::string road_display;
  std::int64_t road_id = 0;
  double distance_m = 0.0;
};

/// Planning prompt for preference-aware routing: profile, ordered
/// priorities, a ceil-rounded length band, 60 m endpoint anchoring, and a
/// POI-annotated network rendering.
inline std::string build_preference_prompt(const GeoPoint& start, const GeoPoint& end,
                                           Activity activity, const PreferenceProfile& profile,
                                           const std::string& network_text_with_pois,
                                           double direct_distance_m,
                                           const std::optional<AnchorSuggestion>& start_anchor = {},
                                           const std::optional<AnchorSuggestion>& end_anchor = {}) {
  const long long lo = static_cast<long long>(std::ceil(kPreferenceBandLow * direct_distance_m));
  const long long hi = static_cast<long long>(std::ceil(kPreferenceBandHigh * direct_distance_m));
  std::string p;
  p += "PREFERENCE-AWARE CONTEXT (for planning):\n\n";
  p += "USER PROFILE: " + profile.name + "\n";
  p += "Description: " + profile.description + "\n\n";
  p += "ROUTING PRIORITIES (ordered):\n";
  for (const auto& pr : profile.priorities) p += "- " + pr + "\n";
  p += "\n\n";
  p += "ROUTE LENGTH + EFFORT CONSTRAINTS:\n";
  p += "- Direct distance: ~" + std::to_string(std::llround(direct_distance_m)) + " m\n";
  p += "- Target total length: " + std::to_string(lo) + "-" + std::to_string(hi) +
       " m (hard max: " + std::to_string(hi) + " m)\n";
  p += "- Maintain balance between exploration and effort: avoid unnecessary detours, "
       "backtracking, or loops\n";
  p += "- Prefer corridor-aligned POIs and short deviations only when warranted by preferences\n";
  p += "- Do not exceed " + std::to_string(kPreferenceStepCap) + " steps; typical is 3-7\n\n";
  p += "ANCHORING CONSTRAINTS:\n";
  p += "- step_1 MUST begin on a road within " + std::to_string(std::llround(kAnchorRadiusM)) +
       " m of the start coordinate.\n";
  if (start_anchor)
    p += "  * Prefer starting on: " + start_anchor->road_display + " (id=" +
         std::to_string(start_anchor->road_id) + "), distance=" +
         std::to_string(std::llround(start_anchor->distance_m)) + "m\n";
  p += "- The final step MUST end within " + std::to_string(std::llround(kAnchorRadiusM)) +
       " m of the destination.\n";
  if (end_anchor)
    p += "  * Prefer finishing on: " + end_anchor->road_display + " (id=" +
         std::to_string(end_anchor->road_id) + "), distance=" +
         std::to_string(std::llround(end_anchor->distance_m)) + "m\n";
  p += "- Rules: Do not start step_1 on any road farther than " +
       std::to_string(std::llround(kAnchorHardCapM)) + " m from the start.\n";
  p += "  Do not overshoot the destination; ensure the final coordinates end exactly at the "
       "destination point.\n\n";
  p += "Start: [" + coord7(start.lat) + ", " + coord7(start.lon) + "]\n";
  p += "End: [" + coord7(end.lat) + ", " + coord7(end.lon) + "]\n";
  p += "Activity: " + to_upper(activity_name(activity)) + "\n\n";
  p += network_text_with_pois;
  if (!network_text_with_pois.empty() && network_text_with_pois.back() != '\n') p += "\n";
  return p;
}

/// Point of interest attachable to nearby roads in the preference render.
struct Poi {
  std::string id;
  std::string name;
  std::string category;
  GeoPoint location;
};

/// Compact JSON network render for preference prompts: id, name, type,
/// connections, and the POIs within `poi_radius_m` of each road.
inline std::string render_preference_network(const RoadNetwork& net, const std::vector<Poi>& pois,
                                             double poi_radius_m = 100.0) {
  std::string out = "--- ROAD NETWORK ---\n{";
  bool first = true;
  for (const auto& [rid, road] : net.roads) {
    if (!first) out += ",";
    first = false;
    out += "\"" + std::to_string(rid) + "\":{\"id\":" + std::to_string(rid) + ",\"name\":\"" +
           road.display_name() + "\",\"type\":\"" + road.highway_type + "\",\"connects_to\":[";
    bool first_conn = true;
    const auto adj = net.adjacency.find(rid);
    if (adj != net.adjacency.end())
      for (const auto& [nbr, node] : adj->second) {
        if (!first_conn) out += ",";
        first_conn = false;
        out += "{\"road_id\":" + std::to_string(nbr) + ",\"intersection_id\":" + std::to_string(node) + "}";
      }
    out += "]";
    std::string poi_text;
    bool first_poi = true;
    for (const auto& poi : pois) {
      if (min_segment_distance(poi.location, road.geometry) > poi_radius_m) continue;
      if (!first_poi) poi_text += ",";
      first_poi = false;
      poi_text += "{\"id\":\"" + poi.id + "\",\"name\":\"" + poi.name + "\",\"category\":\"" +
                  poi.category + "\"}";
    }
    if (!poi_text.empty()) out += ",\"nearby_pois\":[" + poi_text + "]";
    out += "}";
  }
  out += "}\n";
  return out;
}

}  // namespace trajrec
