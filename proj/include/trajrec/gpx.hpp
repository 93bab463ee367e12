#pragma once

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <sstream>
#include <string>

#include "trajrec/errors.hpp"
#include "trajrec/trace.hpp"
#include "trajrec/util.hpp"

namespace trajrec {

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

/// Parses a GPX 1.1 document. Track points from all <trk>/<trkseg> elements
/// are flattened in document order. The upload date comes from
/// <metadata><time>, falling back to the first timestamped point. Timestamps
/// must be non-decreasing; GPX with clock jumps is rejected as malformed.
inline RawTrace parse_gpx(const std::string& bytes, const std::string& trace_id = "",
                          const std::string& region = "") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(bytes);
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(std::string("malformed GPX: ") + e.what());
  }

  const auto gpx = tree.get_child_optional("gpx");
  if (!gpx) throw ParseError("not a GPX document (no <gpx> root)");

  RawTrace raw;
  raw.id = trace_id;
  raw.region = region;
  raw.name = gpx->get<std::string>("metadata.name", "");
  raw.description = gpx->get<std::string>("metadata.desc", "");
  const std::string meta_time = gpx->get<std::string>("metadata.time", "");
  std::int64_t meta_unix = 0;
  if (!meta_time.empty() && parse_iso8601(meta_time, meta_unix))
    raw.upload_date = civil_date(meta_unix);

  std::optional<std::int64_t> prev_time;
  try {
    for (const auto& [trk_key, trk] : *gpx) {
      if (trk_key != "trk") continue;
      if (raw.name.empty()) raw.name = trk.get<std::string>("name", "");
      if (raw.description.empty()) raw.description = trk.get<std::string>("desc", "");
      for (const auto& [seg_key, seg] : trk) {
        if (seg_key != "trkseg") continue;
        for (const auto& [pt_key, trkpt] : seg) {
          if (pt_key != "trkpt") continue;
          TimedPoint tp;
          tp.point = GeoPoint(trkpt.get<double>("<xmlattr>.lat"), trkpt.get<double>("<xmlattr>.lon"));
          const std::string time_str = trkpt.get<std::string>("time", "");
          if (!time_str.empty()) {
            std::int64_t t = 0;
            if (!parse_iso8601(time_str, t)) throw ParseError("bad <time> value: " + time_str);
            if (prev_time && t < *prev_time)
              throw ParseError("track timestamps decrease at " + time_str);
            prev_time = t;
            tp.time = t;
          }
          raw.points.push_back(tp);
        }
      }
    }
  } catch (const pt::ptree_error& e) {
    throw ParseError(std::string("malformed GPX: ") + e.what());
  }

  if (raw.points.empty()) throw EmptyTrace("GPX has no track points");
  if (raw.upload_date.empty())
    for (const auto& p : raw.points)
      if (p.time) {
        raw.upload_date = civil_date(*p.time);
        break;
      }
  return raw;
}

/// Writes a GPX 1.1 document with one track segment. Coordinates carry
/// 7 decimals so a parse/serialize round trip is lossless at that precision.
inline std::string serialize_gpx(const RawTrace& raw) {
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<gpx version=\"1.1\" creator=\"trajrec\" xmlns=\"http://www.topografix.com/GPX/1/1\">\n";
  out += "  <metadata>\n";
  out += "    <name>" + detail::xml_escape(raw.name) + "</name>\n";
  out += "    <desc>" + detail::xml_escape(raw.description) + "</desc>\n";
  if (!raw.upload_date.empty())
    out += "    <time>" + raw.upload_date + "T00:00:00Z</time>\n";
  out += "  </metadata>\n";
  out += "  <trk>\n    <trkseg>\n";
  for (const auto& tp : raw.points) {
    out += "      <trkpt lat=\"" + coord7(tp.point.lat) + "\" lon=\"" + coord7(tp.point.lon) + "\">";
    if (tp.time) out += "<time>" + format_iso8601(*tp.time) + "</time>";
    out += "</trkpt>\n";
  }
  out += "    </trkseg>\n  </trk>\n</gpx>\n";
  return out;
}

}  // namespace trajrec
