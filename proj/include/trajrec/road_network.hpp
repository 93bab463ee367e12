#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajrec/errors.hpp"
#include "trajrec/geo.hpp"
#include "trajrec/trace.hpp"
#include "trajrec/util.hpp"

namespace trajrec {

struct Road {
  std::int64_t id = 0;
  std::optional<std::string> name;
  std::string highway_type = "unknown";
  bool oneway = false;
  Polyline geometry;
  std::vector<std::int64_t> node_ids;  // aligned: node_ids[i] <-> geometry[i]
  std::map<std::string, std::string> tags;

  std::string display_name() const { return name ? *name : "Road " + std::to_string(id); }
};

struct Intersection {
  std::int64_t node_id = 0;
  GeoPoint location;
  std::set<std::int64_t> incident_roads;  // size >= 2
};

struct RoadNetwork {
  std::map<std::int64_t, Road> roads;
  std::map<std::int64_t, Intersection> intersections;
  // road id -> sorted (neighbor road id, shared intersection node id)
  std::map<std::int64_t, std::vector<std::pair<std::int64_t, std::int64_t>>> adjacency;

  bool empty() const { return roads.empty(); }

  bool adjacent(std::int64_t a, std::int64_t b) const {
    auto it = adjacency.find(a);
    if (it == adjacency.end()) return false;
    for (const auto& [nbr, node] : it->second)
      if (nbr == b) return true;
    return false;
  }
};

struct SnapResult {
  std::int64_t road_id = 0;
  GeoPoint snapped_point;
  double distance_m = 0.0;
  double confidence = 1.0;          // exp(-d/30), 2 decimals, floor 0.01
  double entry_bearing = 0.0;       // bearing of the matched geometry segment
  std::size_t segment_index = 0;    // geometry[i..i+1] that won
  double segment_t = 0.0;           // parametric position on that segment
};

enum class Representation { RawJson, AdjacencyList, TopologyOnly, TopologyDirection };

inline const char* representation_name(Representation r) {
  switch (r) {
    case Representation::RawJson: return "raw_json";
    case Representation::AdjacencyList: return "adjacency_list";
    case Representation::TopologyOnly: return "topology_only";
    case Representation::TopologyDirection: return "topology_direction";
  }
  return "unknown";
}

inline Representation representation_from_name(const std::string& name) {
  const std::string n = to_lower(trim(name));
  if (n == "raw_json") return Representation::RawJson;
  if (n == "adjacency_list") return Representation::AdjacencyList;
  if (n == "topology_only") return Representation::TopologyOnly;
  if (n == "topology_direction") return Representation::TopologyDirection;
  throw Error("unknown network representation: " + name);
}

// ---------------------------------------------------------------------------
// Graph construction from an out:geom payload
// ---------------------------------------------------------------------------

namespace detail {

/// Tags that mark a node element as a transit station / platform feature.
inline bool is_station_node(const nlohmann::json& tags) {
  const auto has = [&](const char* k, const char* v) {
    auto it = tags.find(k);
    return it != tags.end() && it->is_string() && it->get<std::string>() == v;
  };
  return has("public_transport", "station") || has("railway", "station") ||
         has("railway", "subway_entrance") || has("public_transport", "platform") ||
         has("public_transport", "stop_position");
}

}  // namespace detail

/// Maximum distance at which a station point feature is stitched into a
/// nearby way so it participates in the graph.
inline constexpr double kStationConnectRadiusM = 50.0;

/// Builds the road graph from a raw Overpass out:geom JSON response.
/// Intersections are nodes shared by at least two ways. Ways repeated in
/// the payload keep their first occurrence; ways without usable geometry
/// are skipped. Station/platform node elements become single-point roads
/// stitched into the nearest way within 50 m (the stitch inserts the
/// station node into that way so the shared-node invariant holds).
inline RoadNetwork build_graph(const std::string& raw_response) {
  nlohmann::json doc = nlohmann::json::parse(raw_response, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("elements") ||
      !doc["elements"].is_array())
    throw ParseError("not an Overpass JSON payload");

  RoadNetwork net;
  std::vector<Road> station_points;

  for (const auto& el : doc["elements"]) {
    if (!el.is_object() || !el.contains("type")) continue;
    const std::string type = el["type"].get<std::string>();
    if (type == "way") {
      if (!el.contains("id") || !el.contains("geometry") || !el["geometry"].is_array()) continue;
      Road road;
      road.id = el["id"].get<std::int64_t>();
      if (net.roads.count(road.id)) continue;  // dedupe, first wins
      try {
        for (const auto& g : el["geometry"])
          road.geometry.points.push_back(GeoPoint(g.at("lat").get<double>(), g.at("lon").get<double>()));
      } catch (const nlohmann::json::exception&) {
        throw ParseError("way " + std::to_string(road.id) + " has malformed geometry");
      } catch (const InvalidCoordinate&) {
        throw ParseError("way " + std::to_string(road.id) + " has out-of-range coordinates");
      }
      if (el.contains("nodes") && el["nodes"].is_array())
        for (const auto& n : el["nodes"]) road.node_ids.push_back(n.get<std::int64_t>());
      if (road.geometry.empty() || road.node_ids.size() != road.geometry.size()) continue;
      if (el.contains("tags") && el["tags"].is_object()) {
        for (const auto& [k, v] : el["tags"].items())
          if (v.is_string()) road.tags[k] = v.get<std::string>();
        if (road.tags.count("name")) road.name = road.tags["name"];
        if (road.tags.count("highway")) road.highway_type = road.tags["highway"];
        else if (road.tags.count("railway")) road.highway_type = road.tags["railway"];
        const auto ow = road.tags.find("oneway");
        road.oneway = ow != road.tags.end() && (ow->second == "yes" || ow->second == "true" || ow->second == "1");
      }
      net.roads.emplace(road.id, std::move(road));
    } else if (type == "node") {
      if (!el.contains("id") || !el.contains("lat") || !el.contains("lon")) continue;
      if (!el.contains("tags") || !detail::is_station_node(el["tags"])) continue;
      Road station;
      station.id = el["id"].get<std::int64_t>();
      try {
        station.geometry.points.push_back(GeoPoint(el["lat"].get<double>(), el["lon"].get<double>()));
      } catch (const InvalidCoordinate&) {
        continue;
      }
      station.node_ids.push_back(station.id);
      for (const auto& [k, v] : el["tags"].items())
        if (v.is_string()) station.tags[k] = v.get<std::string>();
      if (station.tags.count("name")) station.name = station.tags["name"];
      station.highway_type = station.tags.count("railway") ? station.tags["railway"]
                                                           : station.tags["public_transport"];
      station_points.push_back(std::move(station));
    }
  }

  // Stitch station points into the nearest way within range: the station
  // node id (and its location) is inserted into that way's node list, which
  // creates a shared node and therefore an intersection below.
  for (auto& station : station_points) {
    if (net.roads.count(station.id)) continue;
    const GeoPoint& loc = station.geometry[0];
    std::int64_t best_road = 0;
    double best_dist = kStationConnectRadiusM;
    std::size_t best_seg = 0;
    for (const auto& [rid, road] : net.roads) {
      if (road.geometry.size() < 2) continue;
      for (std::size_t i = 0; i + 1 < road.geometry.size(); ++i) {
        const double d = point_to_segment_distance(loc, road.geometry[i], road.geometry[i + 1]);
        if (d < best_dist) {
          best_dist = d;
          best_road = rid;
          best_seg = i;
        }
      }
    }
    if (best_road != 0) {
      Road& host = net.roads[best_road];
      host.geometry.points.insert(host.geometry.points.begin() + static_cast<std::ptrdiff_t>(best_seg + 1), loc);
      host.node_ids.insert(host.node_ids.begin() + static_cast<std::ptrdiff_t>(best_seg + 1), station.id);
    }
    net.roads.emplace(station.id, std::move(station));
  }

  // Shared nodes across >= 2 distinct ways become intersections.
  std::map<std::int64_t, std::set<std::int64_t>> node_ways;
  std::map<std::int64_t, GeoPoint> node_loc;
  for (const auto& [rid, road] : net.roads)
    for (std::size_t i = 0; i < road.node_ids.size(); ++i) {
      node_ways[road.node_ids[i]].insert(rid);
      node_loc.emplace(road.node_ids[i], road.geometry[i]);
    }
  for (const auto& [node, ways] : node_ways) {
    if (ways.size() < 2) continue;
    Intersection x;
    x.node_id = node;
    x.location = node_loc[node];
    x.incident_roads = ways;
    for (auto a : ways)
      for (auto b : ways)
        if (a != b) net.adjacency[a].emplace_back(b, node);
    net.intersections.emplace(node, std::move(x));
  }
  for (auto& [rid, lst] : net.adjacency) {
    std::sort(lst.begin(), lst.end());
    lst.erase(std::unique(lst.begin(), lst.end()), lst.end());
  }
  return net;
}

// ---------------------------------------------------------------------------
// Snapping
// ---------------------------------------------------------------------------

namespace detail {

struct SegmentProjection {
  GeoPoint closest;
  double distance_m = 0.0;
  double t = 0.0;
};

inline SegmentProjection project_to_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  SegmentProjection out;
  if (a == b) {
    out.closest = a;
    out.distance_m = haversine_distance(p, a);
    return out;
  }
  const double lat0 = (a.lat + b.lat) / 2.0;
  const double k = std::cos(deg2rad(lat0));
  const double ax = (a.lon - p.lon) * k, ay = a.lat - p.lat;
  const double bx = (b.lon - p.lon) * k, by = b.lat - p.lat;
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? -(ax * dx + ay * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  out.t = t;
  out.closest.lat = a.lat + t * (b.lat - a.lat);
  out.closest.lon = a.lon + t * (b.lon - a.lon);
  out.distance_m = haversine_distance(p, out.closest);
  return out;
}

}  // namespace detail

/// Nearest road by segment distance over the whole network; ties go to the
/// lower road id (strict improvement required, ids scanned in order).
inline SnapResult snap_point(const RoadNetwork& net, const GeoPoint& p) {
  if (net.roads.empty()) throw NoRoads("cannot snap against an empty network");
  SnapResult best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& [rid, road] : net.roads) {
    if (road.geometry.empty()) continue;
    if (road.geometry.size() == 1) {
      const double d = haversine_distance(p, road.geometry[0]);
      if (d < best_dist) {
        best_dist = d;
        best = SnapResult{rid, road.geometry[0], d, 0.0, 0.0, 0, 0.0};
      }
      continue;
    }
    for (std::size_t i = 0; i + 1 < road.geometry.size(); ++i) {
      const auto proj = detail::project_to_segment(p, road.geometry[i], road.geometry[i + 1]);
      if (proj.distance_m < best_dist) {
        best_dist = proj.distance_m;
        best = SnapResult{rid, proj.closest, proj.distance_m, 0.0, 0.0, i, proj.t};
      }
    }
  }
  if (!std::isfinite(best_dist)) throw NoRoads("network has no usable geometry");
  const Road& road = net.roads.at(best.road_id);
  if (road.geometry.size() >= 2) {
    const GeoPoint& a = road.geometry[best.segment_index];
    const GeoPoint& b = road.geometry[best.segment_index + 1];
    if (!(a == b)) best.entry_bearing = initial_bearing(a, b);
  }
  best.confidence = std::max(0.01, std::round(std::exp(-best.distance_m / 30.0) * 100.0) / 100.0);
  return best;
}

/// Cardinal direction of a road from its first to last geometry point.
/// Closed loops fall back to the first-to-middle bearing.
inline Cardinal road_direction(const Road& road) {
  if (road.geometry.size() < 2)
    throw DegenerateBearing("road " + std::to_string(road.id) + " has single-point geometry");
  const GeoPoint& first = road.geometry[0];
  GeoPoint last = road.geometry[road.geometry.size() - 1];
  if (first == last) last = road.geometry[road.geometry.size() / 2];
  if (first == last)
    throw DegenerateBearing("road " + std::to_string(road.id) + " collapses to a point");
  return cardinal_8(initial_bearing(first, last));
}

/// Intersection on `road_id` nearest to `p`; 0 when the road has none.
inline std::int64_t nearest_intersection_on_road(const RoadNetwork& net, std::int64_t road_id,
                                                 const GeoPoint& p) {
  std::int64_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  auto it = net.adjacency.find(road_id);
  if (it == net.adjacency.end()) return 0;
  for (const auto& [nbr, node] : it->second) {
    const auto x = net.intersections.find(node);
    if (x == net.intersections.end()) continue;
    const double d = haversine_distance(p, x->second.location);
    if (d < best_dist) {
      best_dist = d;
      best = node;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Context rendering
// ---------------------------------------------------------------------------

namespace detail {

/// One way element in the shape the Overpass API emits for `out geom`.
inline nlohmann::ordered_json way_raw_json(const Road& road) {
  nlohmann::ordered_json j;
  j["type"] = "way";
  j["id"] = road.id;
  if (!road.geometry.empty()) {
    double minlat = road.geometry[0].lat, maxlat = minlat;
    double minlon = road.geometry[0].lon, maxlon = minlon;
    for (const auto& p : road.geometry.points) {
      minlat = std::min(minlat, p.lat);
      maxlat = std::max(maxlat, p.lat);
      minlon = std::min(minlon, p.lon);
      maxlon = std::max(maxlon, p.lon);
    }
    nlohmann::ordered_json bounds;
    bounds["minlat"] = minlat;
    bounds["minlon"] = minlon;
    bounds["maxlat"] = maxlat;
    bounds["maxlon"] = maxlon;
    j["bounds"] = std::move(bounds);
  }
  j["nodes"] = road.node_ids;
  auto geom = nlohmann::ordered_json::array();
  for (const auto& p : road.geometry.points) {
    nlohmann::ordered_json pt;
    pt["lat"] = p.lat;
    pt["lon"] = p.lon;
    geom.push_back(std::move(pt));
  }
  j["geometry"] = std::move(geom);
  j["tags"] = road.tags;
  return j;
}

inline std::string render_raw_json(const RoadNetwork& net) {
  nlohmann::ordered_json root;
  root["version"] = 0.6;
  root["generator"] = "Overpass API";
  auto elements = nlohmann::ordered_json::array();
  for (const auto& [rid, road] : net.roads) elements.push_back(way_raw_json(road));
  root["elements"] = std::move(elements);
  std::string out = "--- RAW ROAD NETWORK DATA ---\n";
  out += "Raw Road Network Data (Full OSM JSON):\n\n";
  out += root.dump(2);
  out += "\n";
  return out;
}

inline std::string render_adjacency(const RoadNetwork& net, bool with_geometry) {
  std::string out;
  if (with_geometry) {
    out += "--- ROAD NETWORK (ADJACENCY LIST) ---\n";
    out += "Road Network (Adjacency List with Full Geometry):\n\n";
  } else {
    out += "--- ROAD NETWORK (TOPOLOGY ONLY) ---\n";
    out += "Road Network (Topology Only - No Geometry):\n\n";
  }
  for (const auto& [rid, road] : net.roads) {
    out += "Road: " + road.display_name() + " (ID: " + std::to_string(rid) + ", Type: " +
           road.highway_type + ")\n";
    out += "  Connects to:\n";
    auto adj = net.adjacency.find(rid);
    if (adj != net.adjacency.end())
      for (const auto& [nbr, node] : adj->second) {
        out += "    -> Road " + std::to_string(nbr) + " at intersection " + std::to_string(node);
        if (with_geometry) {
          const GeoPoint& loc = net.intersections.at(node).location;
          out += " ([" + coord7(loc.lat) + ", " + coord7(loc.lon) + "])";
        }
        out += "\n";
      }
    if (with_geometry) {
      out += "  Full Geometry (" + std::to_string(road.geometry.size()) + " points): ";
      for (std::size_t i = 0; i < road.geometry.size(); ++i) {
        if (i) out += " -> ";
        out += "[" + coord7(road.geometry[i].lat) + ", " + coord7(road.geometry[i].lon) + "]";
      }
      out += "\n";
    }
    out += "\n";
  }
  return out;
}

inline std::string render_topology_direction(const RoadNetwork& net, const GeoPoint& destination) {
  std::string out = "--- ROAD NETWORK ---\n";
  out += "{\"roads\": {\n";
  bool first_road = true;
  for (const auto& [rid, road] : net.roads) {
    if (!first_road) out += ",\n";
    first_road = false;
    out += "  \"" + std::to_string(rid) + "\": {\"type\":\"" + road.highway_type +
           "\",\"connects_to\":[";
    auto adj = net.adjacency.find(rid);
    bool first_conn = true;
    if (adj != net.adjacency.end())
      for (const auto& [nbr, node] : adj->second) {
        out += first_conn ? "\n" : ",\n";
        first_conn = false;
        const GeoPoint& loc = net.intersections.at(node).location;
        double bearing = 0.0;
        if (!(loc == destination)) bearing = initial_bearing(loc, destination);
        out += "    {\"road_id\":\"" + std::to_string(nbr) + "\",\"intersection_id\":\"" +
               std::to_string(node) + "\",\n";
        out += "     \"coords\":[" + coord6(loc.lat) + "," + coord6(loc.lon) +
               "],\"bearing_to_dest\":" + coord1(bearing) + "}";
      }
    out += "],\n";
    std::string dir = "null";
    try {
      dir = "\"" + std::string(cardinal_letter(road_direction(road))) + "\"";
    } catch (const DegenerateBearing&) {
    }
    out += "    \"direction\":" + dir + "}";
  }
  out += "\n}}\n";
  return out;
}

}  // namespace detail

/// Renders the network in one of the four context formats. Output is
/// byte-deterministic: all maps iterate in id order.
inline std::string render_context(const RoadNetwork& net, Representation repr,
                                  const GeoPoint& destination) {
  switch (repr) {
    case Representation::RawJson: return detail::render_raw_json(net);
    case Representation::AdjacencyList: return detail::render_adjacency(net, true);
    case Representation::TopologyOnly: return detail::render_adjacency(net, false);
    case Representation::TopologyDirection: return detail::render_topology_direction(net, destination);
  }
  throw Error("unreachable representation");
}

}  // namespace trajrec
