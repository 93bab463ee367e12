#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajrec/errors.hpp"
#include "trajrec/geo.hpp"
#include "trajrec/metrics.hpp"
#include "trajrec/pipeline.hpp"
#include "trajrec/plan.hpp"
#include "trajrec/road_network.hpp"
#include "trajrec/trace.hpp"
#include "trajrec/util.hpp"

namespace trajrec {

// Result files must be byte-stable across runs with the same seed, so every
// writer here formats numbers with fixed precision and emits keys in a fixed
// order. nlohmann is used for reading only (and for string escaping, which
// is deterministic).

inline std::string json_escape(const std::string& s) { return nlohmann::json(s).dump(); }

inline std::string point_json(const GeoPoint& p) {
  return "[" + coord7(p.lat) + "," + coord7(p.lon) + "]";
}

inline std::string polyline_json(const std::vector<GeoPoint>& points) {
  std::string out = "[";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) out += ",";
    out += point_json(points[i]);
  }
  return out + "]";
}

inline std::string polyline_json(const Polyline& line) { return polyline_json(line.points); }

inline std::string timed_path_json(const TimedPath& path) {
  std::string out = "[";
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += ",";
    out += "[" + coord7(path[i].point.lat) + "," + coord7(path[i].point.lon);
    if (path[i].time) out += "," + std::to_string(*path[i].time);
    out += "]";
  }
  return out + "]";
}

namespace detail {

inline GeoPoint parse_point(const nlohmann::json& v) {
  if (!v.is_array() || v.size() < 2) throw ParseError("coordinate pair expected");
  return GeoPoint(v[0].get<double>(), v[1].get<double>());
}

inline TimedPath parse_timed_path(const nlohmann::json& v) {
  TimedPath out;
  for (const auto& e : v) {
    TimedPoint tp{parse_point(e), std::nullopt};
    if (e.size() >= 3) tp.time = e[2].get<std::int64_t>();
    out.push_back(tp);
  }
  return out;
}

inline std::vector<GeoPoint> parse_point_list(const nlohmann::json& v) {
  std::vector<GeoPoint> out;
  for (const auto& e : v) out.push_back(parse_point(e));
  return out;
}

inline std::string opt_metric(const std::optional<double>& v) {
  return v ? format_fixed(*v, 6) : "null";
}

}  // namespace detail

// --- trajectories ----------------------------------------------------------

inline std::string trajectory_json_line(const Trajectory& t) {
  std::string out = "{";
  out += "\"trace_id\":" + json_escape(t.trace_id);
  out += ",\"activity\":" + json_escape(activity_name(t.activity));
  out += ",\"region\":" + json_escape(t.region);
  out += ",\"upload_date\":" + json_escape(t.upload_date);
  out += ",\"total_length_m\":" + format_fixed(t.total_length_m, 3);
  out += ",\"points\":" + timed_path_json(t.points);
  return out + "}";
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
  Trajectory t;
  t.trace_id = j.at("trace_id").get<std::string>();
  t.activity = activity_from_name(j.at("activity").get<std::string>());
  t.region = j.at("region").get<std::string>();
  t.upload_date = j.at("upload_date").get<std::string>();
  t.total_length_m = j.at("total_length_m").get<double>();
  t.points = detail::parse_timed_path(j.at("points"));
  return t;
}

// --- masked tasks -----------------------------------------------------------

inline std::string task_json_line(const MaskedTask& t) {
  std::string out = "{";
  out += "\"task_id\":" + json_escape(t.task_id);
  out += ",\"trace_id\":" + json_escape(t.trace_id);
  out += ",\"gap_kind\":" + json_escape(gap_kind_name(t.gap_kind));
  out += ",\"activity\":" + json_escape(activity_name(t.activity));
  out += ",\"region\":" + json_escape(t.region);
  out += ",\"p_s\":" + point_json(t.p_s);
  out += ",\"p_e\":" + point_json(t.p_e);
  out += ",\"masked_length_m\":" + format_fixed(t.masked_length_m, 3);
  out += ",\"prefix\":" + timed_path_json(t.prefix);
  out += ",\"ground_truth\":" + timed_path_json(t.ground_truth);
  out += ",\"suffix\":" + timed_path_json(t.suffix);
  return out + "}";
}

inline MaskedTask task_from_json(const nlohmann::json& j) {
  MaskedTask t;
  t.task_id = j.at("task_id").get<std::string>();
  t.trace_id = j.at("trace_id").get<std::string>();
  t.gap_kind = gap_kind_from_name(j.at("gap_kind").get<std::string>());
  t.activity = activity_from_name(j.at("activity").get<std::string>());
  t.region = j.at("region").get<std::string>();
  t.p_s = detail::parse_point(j.at("p_s"));
  t.p_e = detail::parse_point(j.at("p_e"));
  t.masked_length_m = j.at("masked_length_m").get<double>();
  t.prefix = detail::parse_timed_path(j.at("prefix"));
  t.ground_truth = detail::parse_timed_path(j.at("ground_truth"));
  t.suffix = detail::parse_timed_path(j.at("suffix"));
  return t;
}

// --- reconstructions --------------------------------------------------------

inline std::string snap_json(const SnapResult& s) {
  std::string out = "{";
  out += "\"road_id\":" + std::to_string(s.road_id);
  out += ",\"point\":" + point_json(s.snapped_point);
  out += ",\"distance_m\":" + format_fixed(s.distance_m, 3);
  out += ",\"confidence\":" + format_fixed(s.confidence, 2);
  out += ",\"entry_bearing\":" + format_fixed(s.entry_bearing, 1);
  return out + "}";
}

inline SnapResult snap_from_json(const nlohmann::json& j) {
  SnapResult s;
  s.road_id = j.at("road_id").get<std::int64_t>();
  s.snapped_point = detail::parse_point(j.at("point"));
  s.distance_m = j.at("distance_m").get<double>();
  s.confidence = j.at("confidence").get<double>();
  s.entry_bearing = j.at("entry_bearing").get<double>();
  return s;
}

inline std::string plan_json(const NavigationPlan& plan) {
  std::string out = "{";
  out += "\"reasoning\":" + json_escape(plan.reasoning);
  out += ",\"steps\":[";
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const NavStep& s = plan.steps[i];
    if (i) out += ",";
    out += "{\"index\":" + std::to_string(s.index);
    out += ",\"direction\":" + (s.direction.empty() ? "null" : json_escape(s.direction));
    out += ",\"road_name\":" + json_escape(s.road_name);
    out += ",\"road_id\":" + std::to_string(s.road_id);
    out += ",\"mentioned_road_ids\":[";
    for (std::size_t k = 0; k < s.mentioned_road_ids.size(); ++k) {
      if (k) out += ",";
      out += std::to_string(s.mentioned_road_ids[k]);
    }
    out += "]";
    out += ",\"target_intersection_id\":" +
           (s.target_intersection_id ? std::to_string(*s.target_intersection_id) : "null");
    out += ",\"text\":" + json_escape(s.text);
    out += "}";
  }
  return out + "]}";
}

inline NavigationPlan plan_from_json(const nlohmann::json& j) {
  NavigationPlan plan;
  plan.reasoning = j.at("reasoning").get<std::string>();
  for (const auto& e : j.at("steps")) {
    NavStep s;
    s.index = e.at("index").get<int>();
    if (e.contains("direction") && e["direction"].is_string())
      s.direction = e["direction"].get<std::string>();
    s.road_name = e.at("road_name").get<std::string>();
    s.road_id = e.at("road_id").get<std::int64_t>();
    for (const auto& id : e.at("mentioned_road_ids")) s.mentioned_road_ids.push_back(id.get<std::int64_t>());
    if (e.contains("target_intersection_id") && e["target_intersection_id"].is_number())
      s.target_intersection_id = e["target_intersection_id"].get<std::int64_t>();
    s.text = e.at("text").get<std::string>();
    plan.steps.push_back(s);
  }
  return plan;
}

/// Result line for one reconstructed task. Prompt exchanges are deliberately
/// absent; they carry latencies and belong to the audit file.
inline std::string reconstruction_json_line(const Reconstruction& r) {
  std::string out = "{";
  out += "\"task_id\":" + json_escape(r.task_id);
  out += ",\"method\":" + json_escape(r.method);
  out += ",\"fallback\":" + std::string(r.fallback ? "true" : "false");
  out += ",\"points\":" + polyline_json(r.points);
  out += ",\"per_step_points\":[";
  for (std::size_t i = 0; i < r.per_step_points.size(); ++i) {
    if (i) out += ",";
    out += polyline_json(r.per_step_points[i]);
  }
  out += "]";
  out += ",\"raw_step_points\":[";
  for (std::size_t i = 0; i < r.raw_step_points.size(); ++i) {
    if (i) out += ",";
    out += polyline_json(r.raw_step_points[i]);
  }
  out += "]";
  out += ",\"step_start_anchors\":" + polyline_json(r.step_start_anchors);
  out += ",\"plan\":" + (r.plan ? plan_json(*r.plan) : "null");
  out += ",\"start_snap\":" + (r.start_snap ? snap_json(*r.start_snap) : "null");
  out += ",\"end_snap\":" + (r.end_snap ? snap_json(*r.end_snap) : "null");
  out += ",\"prompt_tokens\":" + std::to_string(r.prompt_tokens);
  out += ",\"completion_tokens\":" + std::to_string(r.completion_tokens);
  return out + "}";
}

inline Reconstruction reconstruction_from_json(const nlohmann::json& j) {
  Reconstruction r;
  r.task_id = j.at("task_id").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.fallback = j.at("fallback").get<bool>();
  r.points.points = detail::parse_point_list(j.at("points"));
  for (const auto& e : j.at("per_step_points")) {
    Polyline line;
    line.points = detail::parse_point_list(e);
    r.per_step_points.push_back(line);
  }
  for (const auto& e : j.at("raw_step_points"))
    r.raw_step_points.push_back(detail::parse_point_list(e));
  r.step_start_anchors = detail::parse_point_list(j.at("step_start_anchors"));
  if (j.contains("plan") && j["plan"].is_object()) r.plan = plan_from_json(j["plan"]);
  if (j.contains("start_snap") && j["start_snap"].is_object())
    r.start_snap = snap_from_json(j["start_snap"]);
  if (j.contains("end_snap") && j["end_snap"].is_object()) r.end_snap = snap_from_json(j["end_snap"]);
  r.prompt_tokens = j.value("prompt_tokens", 0LL);
  r.completion_tokens = j.value("completion_tokens", 0LL);
  return r;
}

/// Audit line for one prompt exchange: the only place latency is recorded.
inline std::string audit_json_line(const std::string& task_id, const PromptExchange& x) {
  std::string out = "{";
  out += "\"task_id\":" + json_escape(task_id);
  out += ",\"stage\":" + std::to_string(x.stage);
  out += ",\"step_index\":" + std::to_string(x.step_index);
  out += ",\"latency_ms\":" + std::to_string(x.latency_ms);
  out += ",\"prompt\":" + json_escape(x.prompt);
  out += ",\"completion\":" + json_escape(x.completion);
  return out + "}";
}

// --- evaluation records -----------------------------------------------------

inline std::string record_json_line(const EvalRecord& r) {
  std::string out = "{";
  out += "\"task_id\":" + json_escape(r.task_id);
  out += ",\"method\":" + json_escape(r.method);
  out += ",\"gap_kind\":" + json_escape(gap_kind_name(r.gap_kind));
  out += ",\"activity\":" + json_escape(activity_name(r.activity));
  out += ",\"region\":" + json_escape(r.region);
  out += ",\"missing\":" + std::string(r.missing ? "true" : "false");
  out += ",\"fallback\":" + std::string(r.fallback ? "true" : "false");
  out += ",\"pot_gr\":" + format_fixed(r.pot_gr, 6);
  out += ",\"pot_rg\":" + format_fixed(r.pot_rg, 6);
  out += ",\"pot_f1\":" + format_fixed(r.pot_f1, 6);
  out += ",\"mae_gr\":" + format_fixed(r.mae_gr, 6);
  out += ",\"mae_rg\":" + format_fixed(r.mae_rg, 6);
  out += ",\"mae_f1\":" + format_fixed(r.mae_f1, 6);
  out += ",\"connectivity\":" + detail::opt_metric(r.connectivity);
  out += ",\"network_adherence\":" + detail::opt_metric(r.network_adherence);
  out += ",\"geometry_adherence\":" + detail::opt_metric(r.geometry_adherence);
  out += ",\"bearing_error_mean\":" + detail::opt_metric(r.bearing_error_mean);
  out += ",\"bearing_steps_skipped\":" + std::to_string(r.bearing_steps_skipped);
  out += ",\"num_steps\":" + std::to_string(r.num_steps);
  out += ",\"num_large_gaps\":" + std::to_string(r.num_large_gaps);
  return out + "}";
}

inline EvalRecord record_from_json(const nlohmann::json& j) {
  EvalRecord r;
  r.task_id = j.at("task_id").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.gap_kind = gap_kind_from_name(j.at("gap_kind").get<std::string>());
  r.activity = activity_from_name(j.at("activity").get<std::string>());
  r.region = j.at("region").get<std::string>();
  r.missing = j.value("missing", false);
  r.fallback = j.value("fallback", false);
  r.pot_gr = j.at("pot_gr").get<double>();
  r.pot_rg = j.at("pot_rg").get<double>();
  r.pot_f1 = j.at("pot_f1").get<double>();
  r.mae_gr = j.at("mae_gr").get<double>();
  r.mae_rg = j.at("mae_rg").get<double>();
  r.mae_f1 = j.at("mae_f1").get<double>();
  const auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || !j[key].is_number()) return std::nullopt;
    return j[key].get<double>();
  };
  r.connectivity = opt("connectivity");
  r.network_adherence = opt("network_adherence");
  r.geometry_adherence = opt("geometry_adherence");
  r.bearing_error_mean = opt("bearing_error_mean");
  r.bearing_steps_skipped = j.value("bearing_steps_skipped", 0);
  r.num_steps = j.value("num_steps", 0);
  r.num_large_gaps = j.value("num_large_gaps", 0);
  return r;
}

// --- line-oriented file access ------------------------------------------------

template <typename T, typename Fn>
std::vector<T> read_jsonl(const std::string& path, Fn&& from_json) {
  std::vector<T> out;
  const std::string body = read_file(path);
  std::size_t line_no = 0;
  for (const auto& line : split_lines(body)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto parsed = nlohmann::json::parse(line, nullptr, false);
    if (parsed.is_discarded())
      throw ParseError(path + ":" + std::to_string(line_no) + ": invalid JSON");
    out.push_back(from_json(parsed));
  }
  return out;
}

inline std::vector<Trajectory> read_dataset_jsonl(const std::string& path) {
  return read_jsonl<Trajectory>(path, trajectory_from_json);
}

inline std::vector<MaskedTask> read_tasks_jsonl(const std::string& path) {
  return read_jsonl<MaskedTask>(path, task_from_json);
}

inline std::vector<Reconstruction> read_reconstructions_jsonl(const std::string& path) {
  return read_jsonl<Reconstruction>(path, reconstruction_from_json);
}

inline std::vector<EvalRecord> read_records_jsonl(const std::string& path) {
  return read_jsonl<EvalRecord>(path, record_from_json);
}

// --- aggregates and reports ---------------------------------------------------

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string out =
      "group,count,pot_gr,pot_rg,pot_f1,mae_gr,mae_rg,mae_f1,"
      "connectivity,network_adherence,geometry_adherence,bearing_error_mean\n";
  const auto cell = [](const std::optional<double>& v) {
    return v ? format_fixed(*v, 6) : std::string();
  };
  for (const auto& r : rows) {
    out += r.group + "," + std::to_string(r.count) + ",";
    out += format_fixed(r.pot_gr, 6) + "," + format_fixed(r.pot_rg, 6) + "," +
           format_fixed(r.pot_f1, 6) + ",";
    out += format_fixed(r.mae_gr, 6) + "," + format_fixed(r.mae_rg, 6) + "," +
           format_fixed(r.mae_f1, 6) + ",";
    out += cell(r.connectivity) + "," + cell(r.network_adherence) + "," +
           cell(r.geometry_adherence) + "," + cell(r.bearing_error_mean) + "\n";
  }
  return out;
}

/// Map view of one task: ground truth, reconstruction, and the two gap
/// endpoints. GeoJSON wants [lon, lat] order.
inline std::string task_geojson(const MaskedTask& task, const Reconstruction& rec) {
  const auto coords_of = [](const std::vector<GeoPoint>& pts) {
    std::string out = "[";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) out += ",";
      out += "[" + coord7(pts[i].lon) + "," + coord7(pts[i].lat) + "]";
    }
    return out + "]";
  };
  const auto line_feature = [&](const std::string& label, const std::vector<GeoPoint>& pts) {
    if (pts.size() < 2) return std::string();
    return "{\"type\":\"Feature\",\"properties\":{\"layer\":" + json_escape(label) +
           "},\"geometry\":{\"type\":\"LineString\",\"coordinates\":" + coords_of(pts) + "}}";
  };
  const auto point_feature = [&](const std::string& label, const GeoPoint& p) {
    return "{\"type\":\"Feature\",\"properties\":{\"layer\":" + json_escape(label) +
           "},\"geometry\":{\"type\":\"Point\",\"coordinates\":[" + coord7(p.lon) + "," +
           coord7(p.lat) + "]}}";
  };
  std::vector<GeoPoint> truth;
  for (const auto& tp : task.ground_truth) truth.push_back(tp.point);
  std::vector<std::string> features;
  const std::string truth_f = line_feature("ground_truth", truth);
  if (!truth_f.empty()) features.push_back(truth_f);
  const std::string rec_f = line_feature("reconstruction", rec.points.points);
  if (!rec_f.empty()) features.push_back(rec_f);
  features.push_back(point_feature("gap_start", task.p_s));
  features.push_back(point_feature("gap_end", task.p_e));
  std::string out = "{\"type\":\"FeatureCollection\",\"features\":[";
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (i) out += ",";
    out += features[i];
  }
  return out + "]}\n";
}

}  // namespace trajrec
