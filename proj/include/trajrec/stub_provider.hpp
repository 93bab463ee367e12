#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajrec/geo.hpp"
#include "trajrec/provider.hpp"
#include "trajrec/util.hpp"

namespace trajrec {

namespace detail {

inline std::optional<std::int64_t> id_after(const std::string& text, const std::string& section,
                                            const std::string& marker) {
  auto pos = section.empty() ? 0 : text.find(section);
  if (pos == std::string::npos) return std::nullopt;
  pos = text.find(marker, pos);
  if (pos == std::string::npos) return std::nullopt;
  pos += marker.size();
  std::int64_t value = 0;
  bool any = false;
  while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
    value = value * 10 + (text[pos] - '0');
    ++pos;
    any = true;
  }
  if (!any) return std::nullopt;
  return value;
}

inline std::int64_t json_to_i64(const nlohmann::json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_string()) return std::stoll(v.get<std::string>());
  return 0;
}

inline std::string direction_word_from_letter(const std::string& letter) {
  static const std::map<std::string, std::string> words = {
      {"N", "north"}, {"NE", "northeast"}, {"E", "east"}, {"SE", "southeast"},
      {"S", "south"}, {"SW", "southwest"}, {"W", "west"}, {"NW", "northwest"}};
  const auto it = words.find(letter);
  return it == words.end() ? std::string() : it->second;
}

struct StubRoadInfo {
  std::string type = "road";
  std::string direction;  // plain word, may be empty
  std::vector<std::pair<std::int64_t, std::int64_t>> connects;  // (road, intersection)
};

/// Adjacency recovered from the JSON network block of a planning prompt.
inline std::map<std::int64_t, StubRoadInfo> parse_prompt_network(const std::string& prompt) {
  std::map<std::int64_t, StubRoadInfo> out;
  auto head = prompt.find("--- ROAD NETWORK ---");
  if (head == std::string::npos) return out;
  auto open = prompt.find('{', head);
  if (open == std::string::npos) return out;
  auto stop = prompt.find("--- TASK ---", open);
  auto close = prompt.rfind('}', stop == std::string::npos ? std::string::npos : stop);
  if (close == std::string::npos || close <= open) return out;
  const auto parsed = nlohmann::json::parse(prompt.substr(open, close - open + 1), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) return out;
  const nlohmann::json& roads =
      parsed.contains("roads") && parsed["roads"].is_object() ? parsed["roads"] : parsed;
  for (const auto& [key, entry] : roads.items()) {
    if (!entry.is_object()) continue;
    std::int64_t rid = 0;
    try {
      rid = entry.contains("id") ? json_to_i64(entry["id"]) : std::stoll(key);
    } catch (const std::exception&) {
      continue;
    }
    StubRoadInfo info;
    if (entry.contains("type") && entry["type"].is_string()) info.type = entry["type"];
    if (entry.contains("direction") && entry["direction"].is_string())
      info.direction = direction_word_from_letter(entry["direction"].get<std::string>());
    if (entry.contains("connects_to") && entry["connects_to"].is_array())
      for (const auto& conn : entry["connects_to"]) {
        if (!conn.is_object() || !conn.contains("road_id")) continue;
        const std::int64_t nbr = json_to_i64(conn["road_id"]);
        const std::int64_t node =
            conn.contains("intersection_id") ? json_to_i64(conn["intersection_id"]) : 0;
        info.connects.emplace_back(nbr, node);
      }
    out[rid] = info;
  }
  return out;
}

/// Road path from `from` to `to`; each element after the first carries the
/// intersection crossed to reach it. Empty when unreachable.
inline std::vector<std::pair<std::int64_t, std::int64_t>> bfs_road_path(
    const std::map<std::int64_t, StubRoadInfo>& net, std::int64_t from, std::int64_t to) {
  std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> pred;  // road -> (prev, via node)
  std::set<std::int64_t> seen = {from};
  std::deque<std::int64_t> queue = {from};
  while (!queue.empty()) {
    const std::int64_t cur = queue.front();
    queue.pop_front();
    if (cur == to) break;
    const auto it = net.find(cur);
    if (it == net.end()) continue;
    for (const auto& [nbr, node] : it->second.connects) {
      if (seen.count(nbr)) continue;
      seen.insert(nbr);
      pred[nbr] = {cur, node};
      queue.push_back(nbr);
    }
  }
  if (from != to && !pred.count(to)) return {};
  std::vector<std::pair<std::int64_t, std::int64_t>> path = {{to, 0}};
  for (std::int64_t cur = to; cur != from;) {
    const auto& [prev, node] = pred.at(cur);
    path.back().second = node;
    path.push_back({prev, 0});
    cur = prev;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

/// Deterministic stand-in for a hosted model. Reads the structured parts of
/// each prompt and answers with schema-conformant text: a connected
/// step-by-step plan for planning prompts, a coordinate list traced from the
/// supplied geometry for coordinate prompts.
class OfflineStubProvider : public ChatProvider {
 public:
  std::string name() const override { return "stub"; }

  std::string chat(const std::string& prompt, ChatUsage* usage = nullptr) override {
    if (usage != nullptr) *usage = ChatUsage{};
    if (starts_with(prompt, "**TASK:** Generate coordinates")) return stage2(prompt);
    if (starts_with(prompt, "PREFERENCE-AWARE CONTEXT")) return preference(prompt);
    return stage1(prompt);
  }

 private:
  static std::string road_label(const std::map<std::int64_t, detail::StubRoadInfo>& net,
                                std::int64_t rid) {
    const auto it = net.find(rid);
    const std::string type = it == net.end() || it->second.type.empty() ? "road" : it->second.type;
    return type + " (id=" + std::to_string(rid) + ")";
  }

  static std::string plan_text(const std::map<std::int64_t, detail::StubRoadInfo>& net,
                               std::int64_t start_road, std::int64_t end_road,
                               std::int64_t end_junction) {
    std::string out;
    out += "**REASONING:**\n";
    out += "Followed shared intersections from the start road toward the end road, keeping the "
           "most direct connected sequence.\n\n";
    out += "**STEP-BY-STEP NAVIGATION:**\n\n";
    auto path = detail::bfs_road_path(net, start_road, end_road);
    if (path.empty()) path = {{start_road, 0}};
    int index = 1;
    for (std::size_t i = 0; i < path.size(); ++i, ++index) {
      const std::int64_t rid = path[i].first;
      const auto it = net.find(rid);
      std::string dir = it == net.end() ? std::string() : it->second.direction;
      const std::string verb = i == 0 ? "Head" : "Continue";
      out += "step_" + std::to_string(index) + ": " + verb;
      if (!dir.empty()) out += " " + dir;
      out += " along " + road_label(net, rid);
      if (i + 1 < path.size()) {
        out += "\n        until reaching intersection with " + road_label(net, path[i + 1].first);
        out += "\n        (node_id_original=" + std::to_string(path[i + 1].second) + ")";
      } else {
        out += " toward the endpoint";
        if (end_junction != 0)
          out += "\n        (node_id_original=" + std::to_string(end_junction) + ")";
      }
      out += "\n\n";
    }
    out += "**VALIDATION:**\n";
    out += "All steps connect through shared intersection identifiers.\n";
    return out;
  }

  std::string stage1(const std::string& prompt) const {
    const auto start_road = detail::id_after(prompt, "--- START POINT ANALYSIS ---", "(id=");
    const auto end_road = detail::id_after(prompt, "--- END POINT ANALYSIS ---", "(id=");
    const auto end_junction =
        detail::id_after(prompt, "--- END POINT ANALYSIS ---", "(node_id_original=");
    const auto net = detail::parse_prompt_network(prompt);
    if (!start_road || !end_road)
      return "**REASONING:**\nEndpoints could not be identified.\n\n"
             "**STEP-BY-STEP NAVIGATION:**\n\nstep_1: Continue along road (id=0)\n";
    return plan_text(net, *start_road, *end_road, end_junction.value_or(0));
  }

  std::string preference(const std::string& prompt) const {
    const auto start_road = detail::id_after(prompt, "Prefer starting on:", "(id=");
    const auto end_road = detail::id_after(prompt, "Prefer finishing on:", "(id=");
    const auto net = detail::parse_prompt_network(prompt);
    std::int64_t from = start_road.value_or(net.empty() ? 0 : net.begin()->first);
    std::int64_t to = end_road.value_or(from);
    return plan_text(net, from, to, 0);
  }

  std::string stage2(const std::string& prompt) const {
    const auto index = detail::id_after(prompt, "", "for step_");
    // Geometry block sits between the GEOMETRY header and the chained start.
    GeoPoint start(0.0, 0.0);
    bool have_start = false;
    const auto start_pos = prompt.find("Starting coordinate: [");
    if (start_pos != std::string::npos) {
      double lat = 0.0, lon = 0.0;
      if (std::sscanf(prompt.c_str() + start_pos + 21, "[ %lf , %lf", &lat, &lon) == 2) {
        start = GeoPoint(lat, lon);
        have_start = true;
      }
    }
    std::vector<GeoPoint> points;
    const auto geom_head = prompt.find("**GEOMETRY (excerpt):**");
    if (geom_head != std::string::npos) {
      const auto open = prompt.find('{', geom_head);
      const auto close = prompt.rfind('}', start_pos == std::string::npos ? std::string::npos : start_pos);
      if (open != std::string::npos && close != std::string::npos && close > open) {
        const auto parsed =
            nlohmann::json::parse(prompt.substr(open, close - open + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.contains("roads") && parsed["roads"].is_array() &&
            !parsed["roads"].empty()) {
          const auto& geom = parsed["roads"][0]["geometry"];
          for (const auto& pair : geom)
            if (pair.is_array() && pair.size() == 2)
              points.emplace_back(pair[0].get<double>(), pair[1].get<double>());
          if (have_start && points.size() >= 2 &&
              haversine_distance(points.back(), start) < haversine_distance(points.front(), start))
            std::reverse(points.begin(), points.end());
          if (parsed.contains("intersections") && parsed["intersections"].is_array() &&
              !parsed["intersections"].empty()) {
            const auto& node = parsed["intersections"][0];
            if (node.contains("lat") && node.contains("lon"))
              points.emplace_back(node["lat"].get<double>(), node["lon"].get<double>());
          }
        }
      }
    }
    std::string out = "step_" + std::to_string(index.value_or(1)) + ": traced from geometry\n";
    out += "- [";
    bool first = true;
    if (have_start) {
      out += "[" + coord7(start.lat) + ", " + coord7(start.lon) + "]";
      first = false;
    }
    for (const auto& p : points) {
      if (!first) out += ",\n  ";
      out += "[" + coord7(p.lat) + ", " + coord7(p.lon) + "]";
      first = false;
    }
    if (first) out += "[0.0000000, 0.0000000]";
    out += "]\n";
    return out;
  }
};

}  // namespace trajrec
