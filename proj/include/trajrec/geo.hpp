#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "trajrec/errors.hpp"
#include "trajrec/util.hpp"

namespace trajrec {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kPi = 3.14159265358979323846;

/// Meters per degree of latitude on the spherical model (pi * R / 180).
inline constexpr double kMetersPerDegreeLat = kPi * kEarthRadiusM / 180.0;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  GeoPoint() = default;
  GeoPoint(double lat_, double lon_) : lat(lat_), lon(lon_) {
    if (!(lat >= -90.0 && lat <= 90.0))
      throw InvalidCoordinate("latitude out of range: " + format_fixed(lat_, 7));
    if (!(lon >= -180.0 && lon <= 180.0))
      throw InvalidCoordinate("longitude out of range: " + format_fixed(lon_, 7));
  }

  bool operator==(const GeoPoint&) const = default;
};

struct Polyline {
  std::vector<GeoPoint> points;

  Polyline() = default;
  explicit Polyline(std::vector<GeoPoint> pts) : points(std::move(pts)) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const GeoPoint& operator[](std::size_t i) const { return points[i]; }
  GeoPoint& operator[](std::size_t i) { return points[i]; }

  bool operator==(const Polyline&) const = default;
};

/// Axis-aligned box in degrees: south <= north, west <= east.
struct BBox {
  double south = 0.0, west = 0.0, north = 0.0, east = 0.0;

  BBox() = default;
  BBox(double s, double w, double n, double e) : south(s), west(w), north(n), east(e) {
    if (!(south <= north) || !(west <= east))
      throw UnsupportedRegion("inverted bounding box");
  }

  bool contains(const GeoPoint& p) const {
    return p.lat >= south && p.lat <= north && p.lon >= west && p.lon <= east;
  }
};

/// Great-circle distance in meters on a sphere of radius 6,371,000 m.
inline double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = deg2rad(a.lat), phi2 = deg2rad(b.lat);
  const double dphi = deg2rad(b.lat - a.lat);
  const double dlam = deg2rad(b.lon - a.lon);
  const double s1 = std::sin(dphi / 2.0), s2 = std::sin(dlam / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

/// Forward azimuth from `a` to `b` in degrees, normalized to [0, 360).
/// Coincident endpoints have no defined bearing.
inline double initial_bearing(const GeoPoint& a, const GeoPoint& b) {
  if (a == b) throw DegenerateBearing("bearing undefined for coincident points");
  const double phi1 = deg2rad(a.lat), phi2 = deg2rad(b.lat);
  const double dlam = deg2rad(b.lon - a.lon);
  const double y = std::sin(dlam) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlam);
  double deg = rad2deg(std::atan2(y, x));
  deg = std::fmod(deg + 360.0, 360.0);
  if (deg >= 360.0) deg = 0.0;
  return deg;
}

/// Distance in meters from `p` to the segment [a, b]. The segment is treated
/// as a straight line in a local equirectangular projection centered on it,
/// which is accurate at street scale; the final distance back to `p` is
/// haversine so it degrades gracefully for far-away points.
inline double point_to_segment_distance(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  if (a == b) return haversine_distance(p, a);
  const double lat0 = (a.lat + b.lat) / 2.0;
  const double k = std::cos(deg2rad(lat0));
  const double ax = (a.lon - p.lon) * k, ay = a.lat - p.lat;
  const double bx = (b.lon - p.lon) * k, by = b.lat - p.lat;
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? -(ax * dx + ay * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  GeoPoint closest;
  closest.lat = a.lat + t * (b.lat - a.lat);
  closest.lon = a.lon + t * (b.lon - a.lon);
  return haversine_distance(p, closest);
}

/// Minimum distance from `p` to any vertex of `line`.
inline double min_point_distance(const GeoPoint& p, const Polyline& line) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : line.points) best = std::min(best, haversine_distance(p, q));
  return best;
}

/// Minimum distance from `p` to the piecewise-linear curve through `line`.
inline double min_segment_distance(const GeoPoint& p, const Polyline& line) {
  if (line.empty()) return std::numeric_limits<double>::infinity();
  if (line.size() == 1) return haversine_distance(p, line[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i)
    best = std::min(best, point_to_segment_distance(p, line[i], line[i + 1]));
  return best;
}

inline double path_length(const Polyline& line) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i)
    total += haversine_distance(line[i], line[i + 1]);
  return total;
}

// ---------------------------------------------------------------------------
// Cardinal directions
// ---------------------------------------------------------------------------

enum class Cardinal { N = 0, NE, E, SE, S, SW, W, NW };

inline const char* cardinal_letter(Cardinal c) {
  static const char* names[] = {"N", "NE", "E", "SE", "S", "SW", "W", "NW"};
  return names[static_cast<int>(c)];
}

inline const char* cardinal_word(Cardinal c) {
  static const char* names[] = {"northward", "northeastward", "eastward",  "southeastward",
                                "southward", "southwestward", "westward",  "northwestward"};
  return names[static_cast<int>(c)];
}

/// Bare compass noun: "north", "southeast", ...
inline const char* cardinal_plain(Cardinal c) {
  static const char* names[] = {"north", "northeast", "east", "southeast",
                                "south", "southwest", "west", "northwest"};
  return names[static_cast<int>(c)];
}

inline double cardinal_center(Cardinal c) { return 45.0 * static_cast<int>(c); }

/// Nearest of 8 compass sectors; sector i covers (45i - 22.5, 45i + 22.5]
/// wrapped around north, so exact midpoints (22.5, 67.5, ...) resolve to
/// the lower-index sector.
inline Cardinal cardinal_8(double bearing) {
  double b = std::fmod(bearing, 360.0);
  if (b < 0.0) b += 360.0;
  const double q = b / 45.0;
  const int lo = static_cast<int>(std::floor(q));
  const double frac = q - lo;
  const int idx = (frac <= 0.5 ? lo : lo + 1) % 8;
  return static_cast<Cardinal>(idx);
}

/// Smaller of the two arcs between bearings, in [0, 180].
inline double circular_angle_error(double expected, double actual) {
  double diff = std::fabs(expected - actual);
  diff = std::fmod(diff, 360.0);
  return std::min(diff, 360.0 - diff);
}

// ---------------------------------------------------------------------------
// Bounding boxes
// ---------------------------------------------------------------------------

/// Box around the two endpoints, padded by `buffer_m` meters on every side.
/// The longitude pad uses the cosine of the mean latitude of the unpadded box.
/// Regions that would cross the antimeridian or reach a pole are rejected.
inline BBox expanded_bbox(const GeoPoint& a, const GeoPoint& b, double buffer_m) {
  if (buffer_m < 0.0) throw UnsupportedRegion("negative buffer");
  const double south0 = std::min(a.lat, b.lat), north0 = std::max(a.lat, b.lat);
  const double west0 = std::min(a.lon, b.lon), east0 = std::max(a.lon, b.lon);
  if (east0 - west0 > 180.0)
    throw UnsupportedRegion("bounding box would span the antimeridian");
  const double mean_lat = (south0 + north0) / 2.0;
  const double cos_lat = std::cos(deg2rad(mean_lat));
  const double dlat = buffer_m / kMetersPerDegreeLat;
  if (cos_lat <= 1e-9) throw UnsupportedRegion("region too close to a pole");
  const double dlon = buffer_m / (kMetersPerDegreeLat * cos_lat);
  const double south = south0 - dlat, north = north0 + dlat;
  const double west = west0 - dlon, east = east0 + dlon;
  if (south < -90.0 || north > 90.0) throw UnsupportedRegion("padded box reaches a pole");
  if (west < -180.0 || east > 180.0)
    throw UnsupportedRegion("padded box crosses the antimeridian");
  return BBox(south, west, north, east);
}

/// Linear interpolation between two points in coordinate space.
inline GeoPoint lerp(const GeoPoint& a, const GeoPoint& b, double t) {
  GeoPoint p;
  p.lat = a.lat + t * (b.lat - a.lat);
  p.lon = a.lon + t * (b.lon - a.lon);
  return p;
}

}  // namespace trajrec
