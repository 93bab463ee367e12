#include <catch2/catch_amalgamated.hpp>

#include "support/fixtures.hpp"
#include "trajrec/metrics.hpp"
#include "trajrec/trace.hpp"

using namespace trajrec;

namespace {

Polyline poly(std::vector<GeoPoint> pts) {
  Polyline line;
  line.points = std::move(pts);
  return line;
}

// Meridian pair 20 m apart: same latitudes, longitude offset at the equator.
constexpr double kOffset20mDeg = 20.0 / kMetersPerDegreeLat;

Polyline meridian(double lon) {
  return poly({{0.0, lon}, {0.001, lon}, {0.002, lon}});
}

}  // namespace

TEST_CASE("coordinate matching is a per-axis degree tolerance", "[metrics]") {
  const GeoPoint base{1.0, 2.0};
  CHECK(coords_match(base, {1.0 + 9.9e-7, 2.0}));
  CHECK(coords_match(base, {1.0 + 9.9e-7, 2.0 - 9.9e-7}));
  CHECK_FALSE(coords_match(base, {1.0 + 1.1e-6, 2.0}));
  CHECK_FALSE(coords_match(base, {1.0, 2.0 + 1.1e-6}));
}

TEST_CASE("deviation percentage against a hand-computed case", "[metrics]") {
  const GeoPoint a{0.0, 0.0};
  const GeoPoint b{0.001, 0.0};
  const Polyline g = poly({a, b});

  // Reconstruction collapsed onto one endpoint: one zero term plus one
  // full-length term over 2*L gives exactly half the masked length.
  CHECK(mae_gr(g, poly({a})) == 50.0);
  CHECK(mae_gr(g, poly({b})) == 50.0);
  CHECK(mae_gr(g, g) == 0.0);

  CHECK_THROWS_AS(mae_rg(poly({a}), g), DegenerateGroundTruth);  // zero-length R
  CHECK_THROWS_AS(mae_gr(poly({}), g), DegenerateGroundTruth);
  CHECK_THROWS_AS(mae_gr(g, poly({})), DegenerateGroundTruth);
  CHECK_THROWS_AS(mae_gr(poly({a, a}), g), DegenerateGroundTruth);  // zero-length G
}

TEST_CASE("deviation normalizes by point count and masked length", "[metrics]") {
  const Polyline g = meridian(0.0);
  const Polyline r = meridian(kOffset20mDeg);

  double expected = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) expected += haversine_distance(g[i], r[i]);
  expected = expected * 100.0 / (3.0 * path_length(g));

  CHECK(mae_gr(g, r) == Catch::Approx(expected).epsilon(1e-12));
  CHECK(mae_rg(r, g) == Catch::Approx(expected).epsilon(1e-12));  // symmetric layout
}

TEST_CASE("points-on-track counts hits within tau of the other curve", "[metrics]") {
  const GeoPoint a{0.0, 0.0};
  const GeoPoint b{0.001, 0.0};
  const GeoPoint c{0.002, 0.0};
  const Polyline g = poly({a, b, c});
  const Polyline r = poly({a, b});

  CHECK(pot_gr(g, r, 10.0) == Catch::Approx(2.0 / 3.0 * 100.0));  // c is ~111 m past b
  CHECK(pot_rg(r, g, 10.0) == 100.0);
  CHECK(pot_f1(pot_gr(g, r, 10.0), pot_rg(r, g, 10.0)) == Catch::Approx(80.0));

  CHECK_THROWS_AS(pot_gr(poly({}), r, 10.0), DegenerateGroundTruth);
  CHECK_THROWS_AS(pot_gr(g, poly({}), 10.0), DegenerateGroundTruth);
}

TEST_CASE("the 20 m offset pair separates tau=10 from tau=25", "[metrics]") {
  const Polyline g = meridian(0.0);
  const Polyline r = meridian(kOffset20mDeg);
  CHECK(pot_gr(g, r, 10.0) == 0.0);
  CHECK(pot_gr(g, r, 25.0) == 100.0);
  CHECK(pot_rg(r, g, 10.0) == 0.0);
  CHECK(pot_f1(0.0, 100.0) == 0.0);
}

TEST_CASE("identity reconstructions score perfectly on corpus geometry", "[metrics]") {
  std::vector<Polyline> shapes;
  shapes.push_back(poly(fixtures::corridor_geom_722()));
  shapes.push_back(poly(fixtures::corridor_geom_623()));
  shapes.push_back(poly(fixtures::corridor_geom_650()));
  shapes.push_back(poly(fixtures::corridor_geom_landover()));
  shapes.push_back(to_polyline(fixtures::corridor_task().ground_truth));

  for (const auto& g : shapes) {
    CHECK(pot_gr(g, g, 10.0) == 100.0);
    CHECK(pot_f1(pot_gr(g, g, 10.0), pot_rg(g, g, 10.0)) == 100.0);
    CHECK(mae_gr(g, g) == 0.0);
    CHECK(mae_f1(mae_gr(g, g), mae_rg(g, g)) == 0.0);
  }
}

TEST_CASE("harmonic mean conventions", "[metrics]") {
  CHECK(harmonic_mean(0.0, 0.0) == 0.0);
  CHECK(harmonic_mean(100.0, 100.0) == 100.0);
  CHECK(harmonic_mean(50.0, 100.0) == Catch::Approx(200.0 / 3.0));
  CHECK(harmonic_mean(0.0, 100.0) == 0.0);
  CHECK_THROWS_AS(harmonic_mean(-1.0, 50.0), Error);
  CHECK_THROWS_AS(harmonic_mean(50.0, -0.5), Error);
}

TEST_CASE("plan connectivity over shared intersections", "[metrics]") {
  const RoadNetwork net = fixtures::corridor_network();

  CHECK(plan_connectivity({1347174722, 1347175623, 1347176650}, net) == 100.0);
  CHECK(plan_connectivity({1347174722, 1347174722, 1347175623}, net) == 100.0);  // dup skipped
  CHECK(plan_connectivity({1347174722, 1347176650}, net) == 0.0);  // no shared node
  CHECK(plan_connectivity({1347174722, 1347175623, 1347175623, 1155201336}, net) == 50.0);
  CHECK(plan_connectivity({1347174722}, net) == 100.0);  // no pairs to test
  CHECK(plan_connectivity({}, net) == 100.0);
}

TEST_CASE("network adherence pools road and intersection ids", "[metrics]") {
  const RoadNetwork net = fixtures::corridor_network();
  CHECK(network_adherence({1347174722, 999}, {12461706443, 777}, net) == 50.0);
  CHECK(network_adherence({1347174722, 1347175623}, {12461734106}, net) == 100.0);
  CHECK(network_adherence({999}, {}, net) == 0.0);
  CHECK(network_adherence({}, {}, net) == 100.0);
}

TEST_CASE("geometry adherence checks raw points against vertices and anchors", "[metrics]") {
  const auto verts = fixtures::corridor_geom_623();
  const GeoPoint v = verts[1];

  CHECK(geometry_adherence({poly({verts[0], verts[1]})}, verts, {}) == 100.0);
  CHECK(geometry_adherence({poly({verts[0], {0.0, 0.0}, verts[2]})}, verts, {}) ==
        Catch::Approx(2.0 / 3.0 * 100.0));

  // Tolerance boundary, per axis.
  CHECK(geometry_adherence({poly({{v.lat + 9.9e-7, v.lon}})}, verts, {}) == 100.0);
  CHECK(geometry_adherence({poly({{v.lat + 1.1e-6, v.lon}, v})}, verts, {}) == 50.0);

  // Anchors count as valid targets too, and empty input is vacuously clean.
  const GeoPoint anchor{10.0, 20.0};
  CHECK(geometry_adherence({poly({anchor})}, verts, {anchor}) == 100.0);
  CHECK(geometry_adherence({}, verts, {}) == 100.0);
  CHECK(geometry_adherence({poly({})}, verts, {}) == 100.0);
}

TEST_CASE("bearing error compares stated cardinals with realized bearings", "[metrics]") {
  const auto g722 = fixtures::corridor_geom_722();
  const double seg_bearing = initial_bearing(g722[0], g722[1]);
  CHECK(seg_bearing == Catch::Approx(95.70264351247863).margin(1e-9));

  SECTION("single step, exact axis") {
    const auto res = bearing_error({{Cardinal::E, {0.0, 0.0}, {0.0, 0.001}}});
    REQUIRE(res.mean_deg.has_value());
    CHECK(*res.mean_deg == 0.0);
    CHECK(res.scored == 1);
    CHECK(res.skipped == 0);
  }
  SECTION("stated east against the corridor entry segment") {
    const auto res = bearing_error({{Cardinal::E, g722[0], g722[1]}});
    REQUIRE(res.mean_deg.has_value());
    CHECK(*res.mean_deg == Catch::Approx(5.70264351247863).margin(1e-9));
  }
  SECTION("wraparound through north and mean over steps") {
    // Stated NW (315) against a due-north step: circular error 45.
    const auto res = bearing_error({{Cardinal::E, g722[0], g722[1]},
                                    {Cardinal::NW, {0.0, 0.0}, {0.001, 0.0}}});
    REQUIRE(res.mean_deg.has_value());
    CHECK(*res.mean_deg == Catch::Approx((5.70264351247863 + 45.0) / 2.0).margin(1e-9));
    CHECK(res.scored == 2);
  }
  SECTION("coincident endpoints are skipped, not scored") {
    const GeoPoint x{1.0, 1.0};
    const auto res = bearing_error({{Cardinal::N, x, x}, {Cardinal::E, {0.0, 0.0}, {0.0, 0.001}}});
    CHECK(res.skipped == 1);
    CHECK(res.scored == 1);
    CHECK(*res.mean_deg == 0.0);

    const auto none = bearing_error({{Cardinal::N, x, x}});
    CHECK_FALSE(none.mean_deg.has_value());
    CHECK(none.skipped == 1);
  }
}

TEST_CASE("step gap statistics count strict exceedances between steps", "[metrics]") {
  const double d199 = 199.9 / kMetersPerDegreeLat;
  const double d201 = 200.1 / kMetersPerDegreeLat;
  const Polyline s1 = poly({{0.0, 0.0}, {0.0005, 0.0}});

  SECTION("contiguous steps") {
    const Polyline s2 = poly({{0.0005, 0.0}, {0.001, 0.0}});
    const auto stats = step_gap_stats({s1, s2}, 200.0);
    CHECK(stats.num_steps == 2);
    CHECK(stats.num_large_gaps == 0);
  }
  SECTION("threshold is strict") {
    const Polyline near = poly({{0.0005 + d199, 0.0}});
    const Polyline far = poly({{0.0005 + d201, 0.0}});
    CHECK(step_gap_stats({s1, near}, 200.0).num_large_gaps == 0);
    CHECK(step_gap_stats({s1, far}, 200.0).num_large_gaps == 1);
  }
  SECTION("empty steps are bridged, not reset") {
    const Polyline far = poly({{0.0005 + d201, 0.0}});
    const auto stats = step_gap_stats({s1, poly({}), far}, 200.0);
    CHECK(stats.num_steps == 3);
    CHECK(stats.num_large_gaps == 1);
  }
  SECTION("no steps") {
    const auto stats = step_gap_stats({}, 200.0);
    CHECK(stats.num_steps == 0);
    CHECK(stats.num_large_gaps == 0);
  }
}

TEST_CASE("aggregation groups scored records and appends an overall row", "[metrics]") {
  std::vector<EvalRecord> records(4);
  records[0].task_id = "t1";
  records[0].method = "linear";
  records[0].gap_kind = GapKind::Small;
  records[0].activity = Activity::Cycling;
  records[0].region = "metro";
  records[0].pot_gr = 70.0;
  records[0].pot_f1 = 80.0;
  records[0].mae_f1 = 2.0;

  records[1].task_id = "t2";
  records[1].method = "linear";
  records[1].gap_kind = GapKind::Large;
  records[1].activity = Activity::Hiking;
  records[1].region = "alps";
  records[1].pot_gr = 30.0;
  records[1].pot_f1 = 40.0;
  records[1].mae_f1 = 6.0;
  records[1].fallback = true;

  records[2].task_id = "t3";
  records[2].method = "llm:stub";
  records[2].gap_kind = GapKind::Small;
  records[2].activity = Activity::Cycling;
  records[2].region = "metro";
  records[2].pot_gr = 95.0;
  records[2].pot_f1 = 90.0;
  records[2].mae_f1 = 1.0;
  records[2].connectivity = 100.0;
  records[2].network_adherence = 50.0;
  records[2].bearing_error_mean = 5.7;
  records[2].num_steps = 3;
  records[2].num_large_gaps = 1;

  records[3].task_id = "t4";
  records[3].method = "linear";
  records[3].missing = true;  // never reconstructed: excluded everywhere
  records[3].pot_f1 = 12345.0;

  SECTION("by method") {
    const auto rows = aggregate(records, GroupBy::Method);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].group == "linear");
    CHECK(rows[0].count == 2);
    CHECK(rows[0].pot_f1 == 60.0);
    CHECK(rows[0].pot_gr == 50.0);
    CHECK(rows[0].mae_f1 == 4.0);
    CHECK(rows[0].fallbacks == 1);
    CHECK_FALSE(rows[0].connectivity.has_value());

    CHECK(rows[1].group == "llm:stub");
    CHECK(rows[1].count == 1);
    CHECK(rows[1].pot_f1 == 90.0);
    CHECK(rows[1].connectivity == 100.0);
    CHECK(rows[1].network_adherence == 50.0);
    CHECK(rows[1].avg_steps == 3.0);
    CHECK(rows[1].avg_large_gaps == 1.0);

    CHECK(rows[2].group == "overall");
    CHECK(rows[2].count == 3);
    CHECK(rows[2].pot_f1 == 70.0);
    CHECK(rows[2].connectivity == 100.0);  // mean over the records that have one
    CHECK(rows[2].bearing_error_mean == 5.7);
    CHECK(rows[2].fallbacks == 1);
  }
  SECTION("by gap kind") {
    const auto rows = aggregate(records, GroupBy::Gap);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].group == "large");
    CHECK(rows[0].count == 1);
    CHECK(rows[1].group == "small");
    CHECK(rows[1].count == 2);
    CHECK(rows[1].pot_f1 == 85.0);
    CHECK(rows[2].group == "overall");
  }
  SECTION("by region and activity") {
    const auto by_region = aggregate(records, GroupBy::Region);
    REQUIRE(by_region.size() == 3);
    CHECK(by_region[0].group == "alps");
    CHECK(by_region[1].group == "metro");

    const auto by_activity = aggregate(records, GroupBy::ActivityType);
    REQUIRE(by_activity.size() == 3);
    CHECK(by_activity[0].group == "cycling");
    CHECK(by_activity[1].group == "hiking");
  }
  SECTION("all records missing yields no rows") {
    std::vector<EvalRecord> gone(2);
    gone[0].missing = true;
    gone[1].missing = true;
    CHECK(aggregate(gone, GroupBy::Method).empty());
  }
}

TEST_CASE("metric defaults", "[metrics]") {
  const MetricsConfig cfg;
  CHECK(cfg.tau == 10.0);
  CHECK(cfg.large_gap_threshold == 200.0);
}
