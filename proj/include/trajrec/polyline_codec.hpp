#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "trajrec/errors.hpp"
#include "trajrec/geo.hpp"

namespace trajrec {

namespace detail {

inline void encode_polyline_value(std::int64_t value, std::string& out) {
  std::uint64_t v = value < 0 ? ~(static_cast<std::uint64_t>(value) << 1)
                              : static_cast<std::uint64_t>(value) << 1;
  while (v >= 0x20) {
    out.push_back(static_cast<char>((0x20 | (v & 0x1f)) + 63));
    v >>= 5;
  }
  out.push_back(static_cast<char>(v + 63));
}

inline std::int64_t decode_polyline_value(const std::string& s, std::size_t& pos) {
  std::uint64_t result = 0;
  int shift = 0;
  while (true) {
    if (pos >= s.size()) throw ParseError("truncated polyline chunk");
    const int c = static_cast<unsigned char>(s[pos++]) - 63;
    if (c < 0 || c > 63) throw ParseError("polyline character out of range");
    result |= static_cast<std::uint64_t>(c & 0x1f) << shift;
    shift += 5;
    if (c < 0x20) break;
    if (shift > 60) throw ParseError("polyline value overflow");
  }
  const bool negative = (result & 1) != 0;
  const std::int64_t magnitude = static_cast<std::int64_t>(result >> 1);
  return negative ? ~magnitude : magnitude;
}

}  // namespace detail

/// Encodes a polyline with the 5-bit chunked delta format used by mapping
/// APIs, at the standard 1e-5 degree precision.
inline std::string encode_polyline(const Polyline& line) {
  std::string out;
  std::int64_t prev_lat = 0, prev_lon = 0;
  for (const auto& p : line.points) {
    const std::int64_t lat = std::llround(p.lat * 1e5);
    const std::int64_t lon = std::llround(p.lon * 1e5);
    detail::encode_polyline_value(lat - prev_lat, out);
    detail::encode_polyline_value(lon - prev_lon, out);
    prev_lat = lat;
    prev_lon = lon;
  }
  return out;
}

/// Inverse of encode_polyline. The empty string decodes to an empty polyline;
/// truncated chunk sequences and out-of-range characters are rejected.
inline Polyline decode_polyline(const std::string& encoded) {
  Polyline line;
  std::size_t pos = 0;
  std::int64_t lat = 0, lon = 0;
  while (pos < encoded.size()) {
    lat += detail::decode_polyline_value(encoded, pos);
    if (pos >= encoded.size()) throw ParseError("polyline ends after latitude delta");
    lon += detail::decode_polyline_value(encoded, pos);
    // Division gives the correctly rounded double, so decimal-parsed inputs
    // (JSON readers use correctly rounded conversion too) round-trip bitwise.
    line.points.push_back(GeoPoint(static_cast<double>(lat) / 1e5,
                                   static_cast<double>(lon) / 1e5));
  }
  return line;
}

}  // namespace trajrec
