#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trajrec/baselines.hpp"
#include "trajrec/errors.hpp"
#include "trajrec/geo.hpp"
#include "trajrec/plan.hpp"
#include "trajrec/prompt.hpp"
#include "trajrec/provider.hpp"
#include "trajrec/road_network.hpp"
#include "trajrec/trace.hpp"
#include "trajrec/util.hpp"

namespace trajrec {

/// One prompt/completion round trip. Latency is wall-clock and belongs in
/// the audit log only; nothing derived from it may reach result files.
struct PromptExchange {
  int stage = 1;
  int step_index = 0;  // 0 for stage 1
  std::string prompt;
  std::string completion;
  long long latency_ms = 0;
};

struct Reconstruction {
  std::string task_id;
  std::string method;
  Polyline points;
  std::vector<Polyline> per_step_points;            // grounded, anchor-prefixed
  std::vector<std::vector<GeoPoint>> raw_step_points;  // as parsed, pre-grounding
  std::vector<GeoPoint> step_start_anchors;
  std::optional<NavigationPlan> plan;
  bool fallback = false;
  std::optional<SnapResult> start_snap;
  std::optional<SnapResult> end_snap;
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  std::vector<PromptExchange> exchanges;
};

struct TwoStageOptions {
  Representation representation = Representation::TopologyDirection;
  double ground_replace_m = 25.0;
  double fallback_spacing_m = kInterpolationSpacingM;
};

namespace detail {

inline void append_collapsed(Polyline& line, const GeoPoint& p) {
  if (line.empty() || !(line.points.back() == p)) line.points.push_back(p);
}

}  // namespace detail

/// Plan-then-trace reconstruction. Any stage failure (provider, plan parse,
/// coordinate parse, unusable network) degrades to straight-line
/// interpolation with the fallback flag set; partial prompt exchanges are
/// kept for the audit trail either way.
inline Reconstruction run_two_stage(const MaskedTask& task, const RoadNetwork& net,
                                    ChatProvider& provider, const TwoStageOptions& opt = {}) {
  Reconstruction rec;
  rec.task_id = task.task_id;
  rec.method = "llm:" + provider.name();

  const auto timed_chat = [&](const std::string& prompt, int stage, int step_index) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string completion = provider.chat(prompt);
    const auto t1 = std::chrono::steady_clock::now();
    rec.exchanges.push_back(
        {stage, step_index, prompt, completion,
         std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()});
    rec.prompt_tokens += count_tokens(prompt);
    rec.completion_tokens += count_tokens(completion);
    return completion;
  };

  const auto fall_back = [&]() {
    rec.points = linear_interpolate(task.p_s, task.p_e, opt.fallback_spacing_m);
    rec.per_step_points.clear();
    rec.raw_step_points.clear();
    rec.step_start_anchors.clear();
    rec.fallback = true;
    return rec;
  };

  try {
    const SnapResult start_snap = snap_point(net, task.p_s);
    const SnapResult end_snap = snap_point(net, task.p_e);
    rec.start_snap = start_snap;
    rec.end_snap = end_snap;

    EndpointAnalysis start{start_snap, endpoint_road_display(net.roads.at(start_snap.road_id)),
                           nearest_intersection_on_road(net, start_snap.road_id,
                                                        start_snap.snapped_point)};
    EndpointAnalysis end{end_snap, endpoint_road_display(net.roads.at(end_snap.road_id)),
                         nearest_intersection_on_road(net, end_snap.road_id,
                                                      end_snap.snapped_point)};

    std::vector<std::string> before_roads;
    if (!task.prefix.empty()) {
      try {
        const SnapResult entry = snap_point(net, task.prefix.front().point);
        before_roads.push_back(endpoint_road_display(net.roads.at(entry.road_id)));
      } catch (const NoRoads&) {
      }
    }
    before_roads.push_back(start.road_display);
    const ContextSummary before =
        build_context_summary(task.prefix, ContextSide::Before, task.activity, before_roads);
    const ContextSummary after =
        build_context_summary(task.suffix, ContextSide::After, task.activity, {end.road_display});

    const std::string network_text = render_context(net, opt.representation, task.p_e);
    const std::string stage1_prompt = build_stage1_prompt(
        task, before, after, start, end, network_text, step_cap_for(task.gap_kind));
    const std::string stage1_reply = timed_chat(stage1_prompt, 1, 0);
    NavigationPlan plan = parse_plan(stage1_reply);
    rec.plan = plan;

    std::vector<GeoPoint> anchors = {task.p_s, task.p_e, start_snap.snapped_point,
                                     end_snap.snapped_point};
    GeoPoint chain = task.p_s;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
      const NavStep& step = plan.steps[i];
      const std::optional<std::int64_t> next_road =
          i + 1 < plan.steps.size() ? std::optional<std::int64_t>(plan.steps[i + 1].road_id)
                                    : std::optional<std::int64_t>(end_snap.road_id);
      const GeometrySlice slice = slice_for_step(net, step, next_road);
      const std::string stage2_prompt = build_stage2_prompt(step, slice, chain);
      const std::string stage2_reply = timed_chat(stage2_prompt, 2, step.index);
      const std::vector<GeoPoint> raw = parse_step_coordinates(stage2_reply);
      const std::vector<GeoPoint> grounded =
          ground_coordinates(raw, slice.vertices(), anchors, opt.ground_replace_m);

      rec.raw_step_points.push_back(raw);
      rec.step_start_anchors.push_back(chain);
      Polyline step_line;
      step_line.points.push_back(chain);
      for (const auto& p : grounded) detail::append_collapsed(step_line, p);
      rec.per_step_points.push_back(step_line);

      chain = step_line.points.back();
      anchors.push_back(chain);
    }

    for (const auto& step_line : rec.per_step_points)
      for (const auto& p : step_line.points) detail::append_collapsed(rec.points, p);
    if (rec.points.empty() || !(rec.points.points.back() == task.p_e))
      rec.points.points.push_back(task.p_e);
    if (!rec.per_step_points.empty() &&
        !(rec.per_step_points.back().points.back() == task.p_e))
      rec.per_step_points.back().points.push_back(task.p_e);
    return rec;
  } catch (const Error&) {
    return fall_back();
  }
}

}  // namespace trajrec
