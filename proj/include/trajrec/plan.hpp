#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trajrec/errors.hpp"
#include "trajrec/geo.hpp"
#include "trajrec/metrics.hpp"
#include "trajrec/util.hpp"

namespace trajrec {

struct NavStep {
  int index = 1;  // contiguous from 1
  std::string direction;  // plain cardinal word ("east"); empty when unstated
  std::string road_name;
  std::int64_t road_id = 0;                       // first "(id=N)" = traversed road
  std::vector<std::int64_t> mentioned_road_ids;   // every "(id=N)" in order
  std::optional<std::int64_t> target_intersection_id;  // last "(node_id_original=N)"
  std::string text;  // the step line, whitespace-normalized
};

struct NavigationPlan {
  std::string reasoning;
  std::vector<NavStep> steps;

  std::vector<std::int64_t> road_mentions() const {
    std::vector<std::int64_t> out;
    for (const auto& s : steps) out.insert(out.end(), s.mentioned_road_ids.begin(), s.mentioned_road_ids.end());
    return out;
  }

  std::vector<std::int64_t> intersection_mentions() const {
    std::vector<std::int64_t> out;
    for (const auto& s : steps)
      if (s.target_intersection_id) out.push_back(*s.target_intersection_id);
    return out;
  }
};

namespace detail {

inline std::vector<std::int64_t> extract_marked_ids(const std::string& text, const std::string& marker) {
  std::vector<std::int64_t> out;
  std::size_t pos = 0;
  while ((pos = text.find(marker, pos)) != std::string::npos) {
    pos += marker.size();
    std::size_t end = pos;
    while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
    if (end > pos && end < text.size() && text[end] == ')')
      out.push_back(std::stoll(text.substr(pos, end - pos)));
    pos = end;
  }
  return out;
}

/// Earliest direction keyword by position; on a shared start position the
/// longer keyword wins, so "northeast" beats its embedded "east".
inline std::optional<Cardinal> extract_direction(const std::string& lower_text) {
  static const std::pair<const char*, Cardinal> keywords[] = {
      {"northeast", Cardinal::NE}, {"northwest", Cardinal::NW}, {"southeast", Cardinal::SE},
      {"southwest", Cardinal::SW}, {"north", Cardinal::N},      {"south", Cardinal::S},
      {"east", Cardinal::E},       {"west", Cardinal::W},
  };
  std::size_t best_pos = std::string::npos;
  std::size_t best_len = 0;
  Cardinal best = Cardinal::N;
  for (const auto& [kw, dir] : keywords) {
    const std::size_t pos = lower_text.find(kw);
    if (pos == std::string::npos) continue;
    const std::size_t len = std::string(kw).size();
    if (pos < best_pos || (pos == best_pos && len > best_len)) {
      best_pos = pos;
      best_len = len;
      best = dir;
    }
  }
  if (best_pos == std::string::npos) return std::nullopt;
  return best;
}

/// Trailing words before the first "(id=" marker, after the last travel
/// preposition; best-effort label for logs and stage-2 prompts.
inline std::string extract_road_name(const std::string& text) {
  const std::size_t id_pos = text.find("(id=");
  if (id_pos == std::string::npos) return "";
  std::string head = trim(text.substr(0, id_pos));
  for (const char* prep : {" along ", " onto ", " with ", " over ", " on ", " via ", " to "}) {
    const std::size_t p = head.rfind(prep);
    if (p != std::string::npos) head = trim(head.substr(p + std::string(prep).size()));
  }
  return head;
}

inline bool is_step_line(const std::string& line, int& number, std::size_t& colon) {
  const std::string t = trim(line);
  std::string lower = to_lower(t);
  if (!starts_with(lower, "step_")) return false;
  std::size_t pos = 5;
  std::size_t digits = 0;
  while (pos < lower.size() && std::isdigit(static_cast<unsigned char>(lower[pos]))) {
    ++pos;
    ++digits;
  }
  if (digits == 0 || pos >= lower.size() || lower[pos] != ':') return false;
  number = std::stoi(lower.substr(5, digits));
  colon = pos;
  return true;
}

inline std::string normalize_ws(const std::string& s) {
  std::string out;
  bool in_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// Parses a Stage-1 completion into an ordered plan. Step lines start with
/// "step_N:"; wrapped continuation lines are joined until a blank line, the
/// next step, or a "**" section header. A step must reference at least one
/// road via "(id=N)" to count. Directions come from cardinal keywords;
/// "continue straight" (or no keyword) inherits the previous direction.
inline NavigationPlan parse_plan(const std::string& completion) {
  NavigationPlan plan;
  const auto lines = split_lines(completion);

  // Reasoning: text between the REASONING header and the next section.
  std::string reasoning;
  bool in_reasoning = false;
  for (const auto& line : lines) {
    const std::string t = trim(line);
    const std::string upper = to_upper(t);
    if (upper.find("REASONING") != std::string::npos) {
      in_reasoning = true;
      const std::size_t colon = t.find(':');
      if (colon != std::string::npos) {
        const std::string tail = trim(t.substr(colon + 1));
        if (!tail.empty() && tail != "**") reasoning += tail + " ";
      }
      continue;
    }
    if (in_reasoning) {
      int n;
      std::size_t c;
      if (t.empty() || detail::is_step_line(t, n, c) || upper.find("STEP-BY-STEP") != std::string::npos ||
          starts_with(t, "**")) {
        in_reasoning = false;
        continue;
      }
      reasoning += t + " ";
    }
  }
  plan.reasoning = trim(reasoning);

  // Steps with wrapped-line joining.
  std::vector<std::string> step_texts;
  std::string current;
  const auto flush = [&]() {
    if (!current.empty()) step_texts.push_back(detail::normalize_ws(current));
    current.clear();
  };
  for (const auto& line : lines) {
    const std::string t = trim(line);
    int n;
    std::size_t c;
    if (detail::is_step_line(t, n, c)) {
      flush();
      current = t;
      continue;
    }
    if (current.empty()) continue;
    if (t.empty() || starts_with(t, "**") || starts_with(t, "---")) {
      flush();
      continue;
    }
    current += " " + t;
  }
  flush();

  std::string prev_dir;
  for (const auto& text : step_texts) {
    NavStep step;
    step.text = text;
    step.mentioned_road_ids = detail::extract_marked_ids(text, "(id=");
    if (step.mentioned_road_ids.empty()) continue;  // not a usable step
    step.road_id = step.mentioned_road_ids.front();
    const auto anchors = detail::extract_marked_ids(text, "(node_id_original=");
    if (!anchors.empty()) step.target_intersection_id = anchors.back();
    const std::string lower = to_lower(text);
    const auto dir = detail::extract_direction(lower);
    if (dir)
      step.direction = cardinal_plain(*dir);
    else
      step.direction = prev_dir;  // "continue straight" and friends
    if (!step.direction.empty()) prev_dir = step.direction;
    step.road_name = detail::extract_road_name(text);
    step.index = static_cast<int>(plan.steps.size()) + 1;
    plan.steps.push_back(std::move(step));
  }

  if (plan.steps.empty()) throw PlanParseError("no parseable steps in completion");
  return plan;
}

/// Extracts every "[lat, lon]" pair from a Stage-2 completion, in order.
/// Out-of-range pairs are dropped (counted); an empty result is an error.
inline std::vector<GeoPoint> parse_step_coordinates(const std::string& completion,
                                                    std::size_t* dropped_out = nullptr) {
  std::vector<GeoPoint> out;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < completion.size(); ++i) {
    if (completion[i] != '[') continue;
    double lat, lon;
    int consumed = 0;
    if (std::sscanf(completion.c_str() + i + 1, " %lf , %lf %n", &lat, &lon, &consumed) != 2)
      continue;
    const std::size_t close = i + 1 + static_cast<std::size_t>(consumed);
    if (close >= completion.size() || completion[close] != ']') continue;
    try {
      out.push_back(GeoPoint(lat, lon));
    } catch (const InvalidCoordinate&) {
      ++dropped;
    }
    i = close;
  }
  if (dropped_out) *dropped_out = dropped;
  if (out.empty()) throw CoordParseError("no coordinate list in completion");
  return out;
}

/// Snaps raw coordinates onto the provided geometry: a point already on a
/// vertex (1e-6 deg/axis) is canonicalized to that vertex; a point equal to
/// an anchor keeps the anchor's exact value; anything else moves to the
/// nearest vertex when within replace_radius_m, or is dropped. Consecutive
/// duplicates collapse.
inline std::vector<GeoPoint> ground_coordinates(const std::vector<GeoPoint>& points,
                                                const std::vector<GeoPoint>& vertices,
                                                const std::vector<GeoPoint>& anchors,
                                                double replace_radius_m = 25.0) {
  if (vertices.empty() && anchors.empty()) throw Error("grounding needs a geometry slice");
  std::vector<GeoPoint> out;
  const auto push = [&](const GeoPoint& p) {
    if (out.empty() || !(out.back() == p)) out.push_back(p);
  };
  for (const auto& p : points) {
    bool handled = false;
    for (const auto& a : anchors)
      if (coords_match(p, a)) {
        push(a);
        handled = true;
        break;
      }
    if (handled) continue;
    for (const auto& v : vertices)
      if (coords_match(p, v)) {
        push(v);
        handled = true;
        break;
      }
    if (handled) continue;
    const GeoPoint* nearest = nullptr;
    double best = replace_radius_m;
    for (const auto& v : vertices) {
      const double d = haversine_distance(p, v);
      if (d <= best) {
        best = d;
        nearest = &v;
      }
    }
    if (nearest) push(*nearest);
    // else dropped
  }
  return out;
}

}  // namespace trajrec
