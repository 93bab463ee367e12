#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "support/fixtures.hpp"
#include "trajrec/overpass.hpp"
#include "trajrec/road_network.hpp"

using namespace trajrec;
namespace fs = std::filesystem;

TEST_CASE("graph construction finds shared-node intersections", "[roadnet]") {
  const RoadNetwork net = fixtures::corridor_network();
  REQUIRE(net.roads.size() == 4);
  CHECK(net.roads.count(1347174722));
  CHECK(net.roads.count(1347175623));
  CHECK(net.roads.count(1347176650));
  CHECK(net.roads.count(1155201336));

  CHECK(net.roads.at(1155201336).display_name() == "Landover Road");
  CHECK(net.roads.at(1155201336).highway_type == "residential");
  CHECK(net.roads.at(1347175623).display_name() == "Road 1347175623");
  CHECK(net.roads.at(1347175623).highway_type == "cycleway");
  CHECK_FALSE(net.roads.at(1347175623).oneway);

  REQUIRE(net.intersections.size() == 3);
  CHECK(net.intersections.count(12461706443));
  CHECK(net.intersections.count(12461734106));
  CHECK(net.intersections.count(12461663891));
  const Intersection& x = net.intersections.at(12461706443);
  CHECK(x.incident_roads == std::set<std::int64_t>{1347174722, 1347175623});
  CHECK(x.location == GeoPoint{-37.6016014, 145.0245667});

  const auto& adj623 = net.adjacency.at(1347175623);
  REQUIRE(adj623.size() == 2);
  CHECK(adj623[0] == std::make_pair<std::int64_t, std::int64_t>(1347174722, 12461706443));
  CHECK(adj623[1] == std::make_pair<std::int64_t, std::int64_t>(1347176650, 12461734106));
  CHECK(net.adjacent(1347175623, 1347174722));
  CHECK(net.adjacent(1347174722, 1347175623));
  CHECK_FALSE(net.adjacent(1347174722, 1347176650));
}

TEST_CASE("graph construction skips unusable ways and dedupes by id", "[roadnet]") {
  std::vector<fixtures::WaySpec> ways;
  // Node list shorter than geometry: dropped.
  ways.push_back({10, {1, 2}, {{0.0, 0.0}, {0.001, 0.0}, {0.002, 0.0}}, {{"highway", "path"}}});
  ways.push_back({11, {3, 4}, {{0.0, 0.001}, {0.001, 0.001}}, {{"highway", "path"}, {"name", "First"}}});
  // Repeated id keeps the first occurrence.
  ways.push_back({11, {3, 4}, {{0.0, 0.001}, {0.001, 0.001}}, {{"highway", "path"}, {"name", "Second"}}});
  const RoadNetwork net = build_graph(fixtures::overpass_payload(ways));
  REQUIRE(net.roads.size() == 1);
  CHECK(net.roads.at(11).display_name() == "First");

  CHECK_THROWS_AS(build_graph("not json at all"), ParseError);
  CHECK_THROWS_AS(build_graph("{}"), ParseError);
  CHECK_THROWS_AS(build_graph(R"({"elements": 3})"), ParseError);
  CHECK(build_graph(R"({"elements": []})").empty());
}

TEST_CASE("station nodes are stitched into a nearby way", "[roadnet]") {
  std::vector<fixtures::WaySpec> ways;
  ways.push_back({100,
                  {1, 2, 3},
                  {{0.0, 0.0}, {0.001, 0.0}, {0.002, 0.0}},
                  {{"railway", "rail"}}});
  // ~20 m east of the way's first segment: stitched.
  std::vector<fixtures::NodeSpec> nodes;
  nodes.push_back({500, {0.0005, 20.0 / kMetersPerDegreeLat}, {{"railway", "station"}, {"name", "Central"}}});
  // ~300 m away: kept as an isolated point feature.
  nodes.push_back({501, {0.0005, 300.0 / kMetersPerDegreeLat}, {{"public_transport", "station"}}});

  const RoadNetwork net = build_graph(fixtures::overpass_payload(ways, nodes));
  REQUIRE(net.roads.size() == 3);
  CHECK(net.roads.at(500).display_name() == "Central");
  CHECK(net.roads.at(500).highway_type == "station");
  CHECK(net.roads.at(500).geometry.size() == 1);

  // The host way gained the station node between its first two vertices.
  const Road& host = net.roads.at(100);
  REQUIRE(host.node_ids.size() == 4);
  CHECK(host.node_ids[1] == 500);
  CHECK(host.geometry.size() == 4);

  // Shared node -> intersection between way and station.
  REQUIRE(net.intersections.count(500));
  CHECK(net.intersections.at(500).incident_roads == std::set<std::int64_t>{100, 500});
  CHECK(net.adjacent(100, 500));

  // The distant node is a road but participates in no intersection.
  CHECK(net.roads.count(501));
  CHECK_FALSE(net.intersections.count(501));
}

TEST_CASE("snapping picks the nearest segment with rounded confidence", "[roadnet]") {
  const RoadNetwork net = fixtures::corridor_network();
  const SnapResult snap = snap_point(net, fixtures::kCorridorStart);
  CHECK(snap.road_id == 1347174722);
  CHECK(snap.distance_m == Catch::Approx(0.441).margin(0.005));
  CHECK(snap.confidence == Catch::Approx(0.99));
  CHECK(snap.segment_index == 0);
  CHECK(snap.entry_bearing == Catch::Approx(95.70264351247863).margin(1e-6));

  // A point exactly on a vertex snaps with zero distance and full confidence.
  const SnapResult on = snap_point(net, GeoPoint{-37.6024230, 145.0274570});
  CHECK(on.road_id == 1155201336);
  CHECK(on.distance_m == Catch::Approx(0.0).margin(1e-6));
  CHECK(on.confidence == Catch::Approx(1.0));

  CHECK_THROWS_AS(snap_point(RoadNetwork{}, fixtures::kCorridorStart), NoRoads);
}

TEST_CASE("snapping ties break toward the lower road id", "[roadnet]") {
  std::vector<fixtures::WaySpec> ways;
  const std::vector<GeoPoint> geom{{0.0, 0.0}, {0.001, 0.0}};
  ways.push_back({20, {1, 2}, geom, {{"highway", "path"}}});
  ways.push_back({7, {3, 4}, geom, {{"highway", "path"}}});
  const RoadNetwork net = build_graph(fixtures::overpass_payload(ways));
  CHECK(snap_point(net, GeoPoint{0.0005, 0.0001}).road_id == 7);
}

TEST_CASE("road direction uses first-to-last bearing with a loop fallback", "[roadnet]") {
  const RoadNetwork net = fixtures::corridor_network();
  CHECK(road_direction(net.roads.at(1347174722)) == Cardinal::E);
  CHECK(road_direction(net.roads.at(1347175623)) == Cardinal::E);
  CHECK(road_direction(net.roads.at(1347176650)) == Cardinal::E);
  CHECK(road_direction(net.roads.at(1155201336)) == Cardinal::SE);

  Road loop;
  loop.id = 1;
  loop.geometry.points = {{0.0, 0.0}, {0.001, 0.0}, {0.001, 0.001}, {0.0, 0.001}, {0.0, 0.0}};
  CHECK(road_direction(loop) == Cardinal::NE);  // first -> middle vertex

  Road dot;
  dot.id = 2;
  dot.geometry.points = {{0.0, 0.0}};
  CHECK_THROWS_AS(road_direction(dot), DegenerateBearing);
  dot.geometry.points = {{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(road_direction(dot), DegenerateBearing);
}

TEST_CASE("nearest intersection on a road", "[roadnet]") {
  const RoadNetwork net = fixtures::corridor_network();
  CHECK(nearest_intersection_on_road(net, 1347176650, fixtures::kCorridorEnd) == 12461663891);
  CHECK(nearest_intersection_on_road(net, 1347176650, fixtures::kCorridorStart) == 12461734106);

  std::vector<fixtures::WaySpec> ways;
  ways.push_back({30, {1, 2}, {{0.0, 0.0}, {0.001, 0.0}}, {{"highway", "path"}}});
  const RoadNetwork isolated = build_graph(fixtures::overpass_payload(ways));
  CHECK(nearest_intersection_on_road(isolated, 30, GeoPoint{0.0, 0.0}) == 0);
}

TEST_CASE("topology-direction rendering is byte-stable", "[roadnet]") {
  const RoadNetwork net = fixtures::corridor_branch_network();
  const std::string text = render_context(net, Representation::TopologyDirection, fixtures::kCorridorEnd);

  CHECK(text.rfind("--- ROAD NETWORK ---\n", 0) == 0);
  const std::string expected =
      "{\"roads\": {\n"
      "  \"1347174722\": {\"type\":\"cycleway\",\"connects_to\":[\n"
      "    {\"road_id\":\"1347175623\",\"intersection_id\":\"12461706443\",\n"
      "     \"coords\":[-37.601601,145.024567],\"bearing_to_dest\":109.7}],\n"
      "    \"direction\":\"E\"},\n"
      "  \"1347175623\": {\"type\":\"cycleway\",\"connects_to\":[\n"
      "    {\"road_id\":\"1347174722\",\"intersection_id\":\"12461706443\",\n"
      "     \"coords\":[-37.601601,145.024567],\"bearing_to_dest\":109.7},\n"
      "    {\"road_id\":\"1347176804\",\"intersection_id\":\"12461729290\",\n"
      "     \"coords\":[-37.601513,145.024983],\"bearing_to_dest\":114.9},\n"
      "    {\"road_id\":\"1377168420\",\"intersection_id\":\"12461729290\",\n"
      "     \"coords\":[-37.601513,145.024983],\"bearing_to_dest\":114.9}],\n"
      "    \"direction\":\"E\"},";
  INFO(text);
  CHECK(text.find(expected) != std::string::npos);
  CHECK(text.substr(text.size() - 5) == "}\n}}\n");
}

TEST_CASE("raw and adjacency renderings carry the expected structure", "[roadnet]") {
  const RoadNetwork net = fixtures::corridor_network();

  const std::string raw = render_context(net, Representation::RawJson, fixtures::kCorridorEnd);
  CHECK(raw.rfind("--- RAW ROAD NETWORK DATA ---\n", 0) == 0);
  CHECK(raw.find("\"type\": \"way\"") != std::string::npos);
  CHECK(raw.find("\"id\": 1155201336") != std::string::npos);
  CHECK(raw.find("\"nodes\"") != std::string::npos);
  CHECK(raw.find("\"minlat\"") != std::string::npos);
  CHECK(raw.find("\"name\": \"Landover Road\"") != std::string::npos);
  CHECK(raw.find("\"highway\": \"cycleway\"") != std::string::npos);

  const std::string adj = render_context(net, Representation::AdjacencyList, fixtures::kCorridorEnd);
  CHECK(adj.rfind("--- ROAD NETWORK (ADJACENCY LIST) ---\n", 0) == 0);
  CHECK(adj.find("Road: Landover Road (ID: 1155201336, Type: residential)") != std::string::npos);
  CHECK(adj.find("-> Road 1347176650 at intersection 12461663891") != std::string::npos);
  CHECK(adj.find("Full Geometry (8 points):") != std::string::npos);

  const std::string topo = render_context(net, Representation::TopologyOnly, fixtures::kCorridorEnd);
  CHECK(topo.rfind("--- ROAD NETWORK (TOPOLOGY ONLY) ---\n", 0) == 0);
  CHECK(topo.find("Full Geometry") == std::string::npos);
  CHECK(topo.find("[") == std::string::npos);

  // Dense detail for the model drops monotonically across the formats.
  CHECK(raw.size() > adj.size());
  CHECK(adj.size() > topo.size());
}

TEST_CASE("overpass query templates", "[roadnet]") {
  const BBox box{-37.6100, 145.0200, -37.6000, 145.0300};
  const std::string cyc = overpass_query(Activity::Cycling, box);
  CHECK(cyc.rfind("[out:json][timeout:30];\n(\n", 0) == 0);
  CHECK(cyc.find("way\n    [highway~\"cycleway|path|living_street|track|residential|service|"
                 "unclassified|tertiary|tertiary_link|secondary|secondary_link|primary|"
                 "primary_link\"]\n      (-37.6100,145.0200,-37.6000,145.0300);\n") !=
        std::string::npos);
  CHECK(cyc.find(");\nout geom;\n") != std::string::npos);
  CHECK(cyc.find("trunk") == std::string::npos);

  const std::string walk = overpass_query(Activity::Walking, box);
  CHECK(walk.find("footway|pedestrian|path|steps") != std::string::npos);
  CHECK(walk.find("trunk|trunk_link") != std::string::npos);
  CHECK(overpass_query(Activity::Hiking, box) == walk);

  const std::string drive = overpass_query(Activity::Driving, box);
  CHECK(drive.find("motorway|motorway_link") != std::string::npos);
  CHECK(drive.find("footway") == std::string::npos);
  CHECK(overpass_query(Activity::Bus, box) == drive);

  const std::string train = overpass_query(Activity::Train, box);
  CHECK(train.find("node[public_transport=station](-37.6100,145.0200,-37.6000,145.0300);") !=
        std::string::npos);
  CHECK(train.find("node[railway=subway_entrance]") != std::string::npos);
  CHECK(train.find("highway") == std::string::npos);

  const std::string fly = overpass_query(Activity::Flying, box);
  CHECK(fly.find("way\n      (-37.6100,145.0200,-37.6000,145.0300);") != std::string::npos);
  CHECK(fly.find("highway~") == std::string::npos);
}

TEST_CASE("overpass cache serves without touching the network", "[roadnet]") {
  const std::string dir = fixtures::temp_dir("overpass_cache");
  // Endpoint that cannot accept connections; any real fetch would fail.
  OverpassClient client("http://127.0.0.1:9/api/interpreter", dir);
  client.max_retries = 1;
  client.backoff_base_s = 0.0;
  client.sleep_fn = [](double) {};

  const std::string query = overpass_query(Activity::Cycling, BBox{-37.61, 145.02, -37.60, 145.03});
  const std::string path = client.cache_path(query);
  CHECK(path == dir + "/overpass_" + hex64(fnv1a64(query)) + ".json");

  write_file(path, fixtures::corridor_payload());
  CHECK(client.fetch(query) == fixtures::corridor_payload());

  // Corrupt cache forces a refetch, which fails against the dead endpoint
  // after the full backoff ladder.
  write_file(path, "<<not json>>");
  std::vector<double> sleeps;
  client.max_retries = 4;
  client.backoff_base_s = 2.0;
  client.sleep_fn = [&](double s) { sleeps.push_back(s); };
  CHECK_THROWS_AS(client.fetch(query), FetchError);
  CHECK(sleeps == std::vector<double>{2.0, 4.0, 8.0, 16.0});
  fs::remove_all(dir);
}

TEST_CASE("cache keys use the 64-bit FNV-1a hash", "[roadnet]") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  OverpassClient client("http://x.invalid/", "cache");
  CHECK(client.cache_path("") == "cache/overpass_cbf29ce484222325.json");
  CHECK(client.cache_path("a") == "cache/overpass_af63dc4c8601ec8c.json");
}
