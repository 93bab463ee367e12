#pragma once

// Shared test fixtures: hand-built road networks, scripted two-stage model
// output, lattice networks, and a synthetic GPX corpus. Everything here is
// deterministic; file-writing helpers take explicit directories.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajrec/geo.hpp"
#include "trajrec/gpx.hpp"
#include "trajrec/overpass.hpp"
#include "trajrec/road_network.hpp"
#include "trajrec/trace.hpp"
#include "trajrec/util.hpp"

namespace fixtures {

using trajrec::GeoPoint;

// ---------------------------------------------------------------------------
// Overpass payload construction
// ---------------------------------------------------------------------------

struct WaySpec {
  std::int64_t id = 0;
  std::vector<std::int64_t> nodes;
  std::vector<GeoPoint> geometry;
  std::map<std::string, std::string> tags;
};

struct NodeSpec {
  std::int64_t id = 0;
  GeoPoint location;
  std::map<std::string, std::string> tags;
};

inline std::string overpass_payload(const std::vector<WaySpec>& ways,
                                    const std::vector<NodeSpec>& nodes = {}) {
  nlohmann::json doc;
  doc["version"] = 0.6;
  doc["generator"] = "fixture";
  doc["elements"] = nlohmann::json::array();
  for (const auto& w : ways) {
    nlohmann::json el;
    el["type"] = "way";
    el["id"] = w.id;
    el["nodes"] = w.nodes;
    el["geometry"] = nlohmann::json::array();
    for (const auto& p : w.geometry) el["geometry"].push_back({{"lat", p.lat}, {"lon", p.lon}});
    if (!w.tags.empty()) el["tags"] = w.tags;
    doc["elements"].push_back(std::move(el));
  }
  for (const auto& n : nodes) {
    nlohmann::json el;
    el["type"] = "node";
    el["id"] = n.id;
    el["lat"] = n.location.lat;
    el["lon"] = n.location.lon;
    el["tags"] = n.tags;
    doc["elements"].push_back(std::move(el));
  }
  return doc.dump();
}

// ---------------------------------------------------------------------------
// Cycleway corridor walked by the scripted planner below. Road 1347174722
// continues into 1347175623 at node ...443; 623 meets 1347176650 at node
// ...106; 650 reaches Landover Road at node ...891. The corridor start sits
// 0.44 m off road 722, the end is a Landover Road vertex.
// ---------------------------------------------------------------------------

inline const GeoPoint kCorridorStart{-37.6015900, 145.0244730};
inline const GeoPoint kCorridorEnd{-37.6024230, 145.0274570};

inline std::vector<GeoPoint> corridor_geom_722() {
  return {{-37.6015803, 145.0243000}, {-37.6016014, 145.0245667}, {-37.6016000, 145.0246000}};
}

inline std::vector<GeoPoint> corridor_geom_623() {
  return {{-37.6016014, 145.0245667},
          {-37.6016227, 145.0247631},
          {-37.6015604, 145.0248218},
          {-37.6015206, 145.0248792},
          {-37.6015129, 145.0249834}};
}

inline std::vector<GeoPoint> corridor_geom_650() {
  return {{-37.6015129, 145.0249834}, {-37.6015000, 145.0250000}, {-37.6015257, 145.0250507},
          {-37.6015590, 145.0251463}, {-37.6015986, 145.0251966}, {-37.6016346, 145.0252310},
          {-37.6016781, 145.0252713}, {-37.6020000, 145.0265000}};
}

inline std::vector<GeoPoint> corridor_geom_landover() {
  return {{-37.6020000, 145.0265000}, {-37.6024230, 145.0274570}, {-37.6028000, 145.0280000}};
}

inline std::vector<WaySpec> corridor_ways() {
  std::vector<WaySpec> ways;
  ways.push_back({1347174722,
                  {12461706440, 12461706443, 12461706447},
                  corridor_geom_722(),
                  {{"highway", "cycleway"}}});
  ways.push_back({1347175623,
                  {12461706443, 12461734101, 12461734102, 12461734103, 12461734106},
                  corridor_geom_623(),
                  {{"highway", "cycleway"}}});
  ways.push_back({1347176650,
                  {12461734106, 12461729290, 12461729291, 12461729292, 12461729293, 12461729294,
                   12461729295, 12461663891},
                  corridor_geom_650(),
                  {{"highway", "cycleway"}}});
  ways.push_back({1155201336,
                  {12461663891, 12461663900, 12461663901},
                  corridor_geom_landover(),
                  {{"highway", "residential"}, {"name", "Landover Road"}}});
  return ways;
}

inline std::string corridor_payload() { return overpass_payload(corridor_ways()); }

inline trajrec::RoadNetwork corridor_network() { return trajrec::build_graph(corridor_payload()); }

// Junction view around node ...290: road 623 ends there and two branch ways
// leave it. Exercises multi-connection rendering with three neighbours.
inline std::vector<WaySpec> corridor_branch_ways() {
  std::vector<WaySpec> ways;
  ways.push_back({1347174722,
                  {12461706440, 12461706443},
                  {{-37.6015803, 145.0243000}, {-37.6016014, 145.0245667}},
                  {{"highway", "cycleway"}}});
  ways.push_back({1347175623,
                  {12461706443, 12461734101, 12461734102, 12461734103, 12461729290},
                  corridor_geom_623(),
                  {{"highway", "cycleway"}}});
  ways.push_back({1347176804,
                  {12461729290, 12461729296},
                  {{-37.6015129, 145.0249834}, {-37.6011000, 145.0257000}},
                  {{"highway", "cycleway"}}});
  ways.push_back({1377168420,
                  {12461729290, 12461729297},
                  {{-37.6015129, 145.0249834}, {-37.6019000, 145.0256000}},
                  {{"highway", "cycleway"}}});
  return ways;
}

inline trajrec::RoadNetwork corridor_branch_network() {
  return trajrec::build_graph(overpass_payload(corridor_branch_ways()));
}

// ---------------------------------------------------------------------------
// Scripted model output for the corridor. Wrapped lines carry a trailing
// space and 8-space continuation indents, mirroring real completions.
// ---------------------------------------------------------------------------

inline std::string scripted_plan_text() {
  std::string s;
  s += "**REASONING:**\n";
  s += "The start point is on cycleway (id=1347174722), heading east, \n";
  s += "consistent with pre-segment direction (~95). \n";
  s += "The direct continuation is via cycleway (id=1347175623), \n";
  s += "then southeast via cycleway (id=1347176650), \n";
  s += "leading to the endpoint on Landover Road (id=1155201336). \n";
  s += "This minimizes turns and keeps within cycleway infrastructure.\n";
  s += "\n";
  s += "**STEP-BY-STEP NAVIGATION:**\n";
  s += "\n";
  s += "step_1: From start point, travel east along cycleway (id=1347174722) \n";
  s += "        until reaching intersection with cycleway (id=1347175623) \n";
  s += "        (node_id_original=12461706443)\n";
  s += "\n";
  s += "step_2: Continue straight east onto cycleway (id=1347175623) \n";
  s += "        until intersection with cycleway (id=1347176650) \n";
  s += "        (node_id_original=12461734106)\n";
  s += "\n";
  s += "step_3: Continue southeast onto cycleway (id=1347176650) \n";
  s += "        until reaching endpoint on Landover Road (id=1155201336) \n";
  s += "        (node_id_original=12461663891)\n";
  s += "\n";
  s += "**VALIDATION:**\n";
  s += "- Step count = 3 (within 3-step limit).\n";
  s += "- Each step includes direction, road name + ID, and intersection anchor.\n";
  s += "- All roads are connected via listed node IDs.\n";
  s += "- No coordinates included in step descriptions.\n";
  s += "- Endpoint matches required destination on Landover Road.\n";
  return s;
}

inline std::string scripted_step_text() {
  std::string s;
  s += "step_2: Continue straight east onto connecting cycleway (id=1347175623) \n";
  s += "until intersection with cycleway (id=1347176650) (node_id_original=12461729290) \n";
  s += "- [[-37.6016000, 145.0246000],\n";
  s += "  [-37.6016014, 145.0245667],\n";
  s += "  [-37.6016227, 145.0247631],\n";
  s += "  [-37.6015604, 145.0248218],\n";
  s += "  [-37.6015206, 145.0248792],\n";
  s += "  [-37.6015129, 145.0249834],\n";
  s += "  [-37.6015000, 145.0250000]]\n";
  return s;
}

// The 7 coordinates inside scripted_step_text, in order.
inline std::vector<GeoPoint> scripted_step_points() {
  return {{-37.6016000, 145.0246000}, {-37.6016014, 145.0245667}, {-37.6016227, 145.0247631},
          {-37.6015604, 145.0248218}, {-37.6015206, 145.0248792}, {-37.6015129, 145.0249834},
          {-37.6015000, 145.0250000}};
}

/// Masked task whose endpoints and activity fit the corridor. Prefix and
/// suffix carry 5 timed points each so context summaries are computable.
inline trajrec::MaskedTask corridor_task() {
  using namespace trajrec;
  MaskedTask t;
  t.task_id = "corridor-small";
  t.trace_id = "corridor";
  t.gap_kind = GapKind::Small;
  t.activity = Activity::Cycling;
  t.region = "metro";
  t.p_s = kCorridorStart;
  t.p_e = kCorridorEnd;

  std::int64_t ts = 1717200000;
  const double step_lat = 25.0 * std::cos(deg2rad(95.7)) / kMetersPerDegreeLat;
  const double step_lon =
      25.0 * std::sin(deg2rad(95.7)) / (kMetersPerDegreeLat * std::cos(deg2rad(kCorridorStart.lat)));
  for (int i = 4; i >= 0; --i) {
    t.prefix.push_back({GeoPoint(kCorridorStart.lat - i * step_lat, kCorridorStart.lon - i * step_lon),
                        ts});
    ts += 3;
  }
  t.prefix.back().point = kCorridorStart;

  for (const auto& p : corridor_geom_650()) {
    t.ground_truth.push_back({p, ts});
    ts += 3;
  }

  const GeoPoint far{-37.6028000, 145.0280000};
  for (int i = 0; i < 5; ++i) {
    t.suffix.push_back({lerp(kCorridorEnd, far, i * 0.2), ts});
    ts += 3;
  }
  t.suffix.front().point = kCorridorEnd;
  t.masked_length_m = path_length(to_polyline(t.ground_truth));
  return t;
}

// ---------------------------------------------------------------------------
// Lattice networks
// ---------------------------------------------------------------------------

// Just under 100 m of latitude per step.
inline constexpr double kGridStepDeg = 0.0008993;

inline std::int64_t grid_node_id(int r, int c) { return 1000 + r * 1000 + c; }
inline std::int64_t grid_hway_id(int r, int c) { return 7000000 + r * 1000 + c; }
inline std::int64_t grid_vway_id(int r, int c) { return 8000000 + r * 1000 + c; }

/// rows x cols lattice anchored at (lat0, lon0); every block edge is its own
/// two-node way, so every lattice node shared by >= 2 ways is an intersection.
inline std::string grid_payload(int rows, int cols, double lat0, double lon0,
                                const std::string& highway = "residential") {
  const auto node_pt = [&](int r, int c) {
    return GeoPoint(lat0 + r * kGridStepDeg, lon0 + c * kGridStepDeg);
  };
  std::vector<WaySpec> ways;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c)
      ways.push_back({grid_hway_id(r, c),
                      {grid_node_id(r, c), grid_node_id(r, c + 1)},
                      {node_pt(r, c), node_pt(r, c + 1)},
                      {{"highway", highway}}});
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c < cols; ++c)
      ways.push_back({grid_vway_id(r, c),
                      {grid_node_id(r, c), grid_node_id(r + 1, c)},
                      {node_pt(r, c), node_pt(r + 1, c)},
                      {{"highway", highway}}});
  return overpass_payload(ways);
}

inline trajrec::RoadNetwork grid_network(int rows, int cols, double lat0, double lon0) {
  return trajrec::build_graph(grid_payload(rows, cols, lat0, lon0));
}

// ---------------------------------------------------------------------------
// Task network caches
// ---------------------------------------------------------------------------

inline std::string task_cache_path(const trajrec::MaskedTask& task, const std::string& cache_dir) {
  const trajrec::BBox box =
      trajrec::expanded_bbox(task.p_s, task.p_e, trajrec::gap_buffer_m(task.gap_kind));
  const std::string query = trajrec::overpass_query(task.activity, box);
  return trajrec::OverpassClient(trajrec::kDefaultOverpassEndpoint, cache_dir).cache_path(query);
}

inline void write_task_cache(const trajrec::MaskedTask& task, const std::string& cache_dir,
                             const std::string& payload) {
  std::filesystem::create_directories(cache_dir);
  trajrec::write_file(task_cache_path(task, cache_dir), payload);
}

/// Caches a lattice spanning the task's endpoints plus a 3-block margin, so
/// snapping and stub routing stay inside the network.
inline void write_task_grid_cache(const trajrec::MaskedTask& task, const std::string& cache_dir) {
  const double margin = 3.0 * kGridStepDeg;
  const double south = std::min(task.p_s.lat, task.p_e.lat) - margin;
  const double west = std::min(task.p_s.lon, task.p_e.lon) - margin;
  const double north = std::max(task.p_s.lat, task.p_e.lat) + margin;
  const double east = std::max(task.p_s.lon, task.p_e.lon) + margin;
  const int rows =
      std::max(2, std::min(40, static_cast<int>(std::ceil((north - south) / kGridStepDeg)) + 1));
  const int cols =
      std::max(2, std::min(40, static_cast<int>(std::ceil((east - west) / kGridStepDeg)) + 1));
  write_task_cache(task, cache_dir, grid_payload(rows, cols, south, west));
}

// ---------------------------------------------------------------------------
// Synthetic GPX corpus: piecewise-straight legs joined by mostly-gentle turns
// with occasional sharp ones, approximating road-following movement. Short
// masked runs tend to stay on one leg while long ones span several turns.
// Deterministic under the seed via the library's own RNG helpers.
// ---------------------------------------------------------------------------

inline double gaussian(std::mt19937_64& rng, double sigma) {
  const double u1 = 1.0 - trajrec::uniform01(rng);  // (0, 1]
  const double u2 = trajrec::uniform01(rng);
  return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline trajrec::RawTrace synthetic_trace(int index, std::uint64_t seed) {
  using namespace trajrec;
  std::mt19937_64 rng(seed ^ fnv1a64("trace-" + std::to_string(index)));

  static const char* kNames[] = {
      "Morning cycling loop",  "River cycle commute", "Evening walking route",
      "Ridge trekking day",    "Suburb driving log",  "Foothills MTB session",
  };
  RawTrace raw;
  char id[16];
  std::snprintf(id, sizeof id, "trace_%03d", index);
  raw.id = id;
  raw.name = std::string(kNames[index % 6]) + " " + std::to_string(index);
  raw.description = "synthetic corpus";
  raw.upload_date = "2024-04-15";
  raw.region = index % 2 == 0 ? "plains" : "hills";

  double lat = -37.80 + (index % 10) * 0.018;
  double lon = 144.95 + (index / 10) * 0.020;
  double heading = uniform_range(rng, 0.0, 360.0);
  const double total = uniform_range(rng, 2600.0, 5200.0);
  std::int64_t ts = days_from_civil(2024, 3, 1) * 86400 + 6 * 3600 + index * 86400;

  raw.points.push_back({GeoPoint(lat, lon), ts});
  double walked = 0.0;
  while (walked < total) {
    double leg = std::min(total - walked, uniform_range(rng, 320.0, 1100.0));
    for (double s = 0.0; s + 25.0 <= leg; s += 25.0) {
      lat += 25.0 * std::cos(deg2rad(heading)) / kMetersPerDegreeLat;
      lon += 25.0 * std::sin(deg2rad(heading)) / (kMetersPerDegreeLat * std::cos(deg2rad(lat)));
      ts += 10;
      raw.points.push_back({GeoPoint(lat, lon), ts});
    }
    walked += leg;
    const bool sharp = uniform01(rng) < 0.3;
    const double turn = sharp ? uniform_range(rng, 45.0, 100.0) : uniform_range(rng, 5.0, 28.0);
    heading += uniform01(rng) < 0.5 ? -turn : turn;
  }
  return raw;
}

/// Writes `count` GPX files plus a region map into `dir`.
inline void write_gpx_corpus(const std::string& dir, int count, std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::string region_map = "{";
  for (int i = 0; i < count; ++i) {
    const trajrec::RawTrace raw = synthetic_trace(i, seed);
    trajrec::write_file(dir + "/" + raw.id + ".gpx", trajrec::serialize_gpx(raw));
    if (i > 0) region_map += ",";
    region_map += "\"" + raw.id + "\":\"" + raw.region + "\"";
  }
  region_map += "}";
  trajrec::write_file(dir + "/region_map.json", region_map);
}

// Fresh scratch directory under the system temp root; wiped if it exists.
inline std::string temp_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / ("trajrec_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

}  // namespace fixtures
