#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trajrec/errors.hpp"
#include "trajrec/geo.hpp"
#include "trajrec/util.hpp"

namespace trajrec {

struct TimedPoint {
  GeoPoint point;
  std::optional<std::int64_t> time;  // seconds since epoch

  bool operator==(const TimedPoint&) const = default;
};

using TimedPath = std::vector<TimedPoint>;

inline Polyline to_polyline(const TimedPath& path) {
  Polyline line;
  line.points.reserve(path.size());
  for (const auto& tp : path) line.points.push_back(tp.point);
  return line;
}

inline double path_length(const TimedPath& path) { return path_length(to_polyline(path)); }

enum class Activity { Hiking, Driving, Walking, Cycling, Bus, Train, Boat, Flying, Unknown };

inline const char* activity_name(Activity a) {
  switch (a) {
    case Activity::Hiking: return "hiking";
    case Activity::Driving: return "driving";
    case Activity::Walking: return "walking";
    case Activity::Cycling: return "cycling";
    case Activity::Bus: return "bus";
    case Activity::Train: return "train";
    case Activity::Boat: return "boat";
    case Activity::Flying: return "flying";
    case Activity::Unknown: break;
  }
  return "unknown";
}

inline Activity activity_from_name(const std::string& name) {
  const std::string n = to_lower(trim(name));
  if (n == "hiking") return Activity::Hiking;
  if (n == "driving") return Activity::Driving;
  if (n == "walking") return Activity::Walking;
  if (n == "cycling") return Activity::Cycling;
  if (n == "bus") return Activity::Bus;
  if (n == "train") return Activity::Train;
  if (n == "boat") return Activity::Boat;
  if (n == "flying") return Activity::Flying;
  return Activity::Unknown;
}

struct RawTrace {
  std::string id;
  std::string name;
  std::string description;
  std::string upload_date;  // "YYYY-MM-DD"; empty when the source has no date
  std::string region;
  TimedPath points;
};

struct Trajectory {
  std::string trace_id;
  Activity activity = Activity::Unknown;
  std::string region;
  std::string upload_date;
  TimedPath points;
  double total_length_m = 0.0;
};

enum class GapKind { Small, Large };

inline const char* gap_kind_name(GapKind k) { return k == GapKind::Small ? "small" : "large"; }

inline GapKind gap_kind_from_name(const std::string& name) {
  const std::string n = to_lower(trim(name));
  if (n == "small") return GapKind::Small;
  if (n == "large") return GapKind::Large;
  throw ParseError("unknown gap kind: " + name);
}

/// Masked-gap length window in meters for each gap kind.
inline constexpr double kSmallGapMinM = 200.0, kSmallGapMaxM = 500.0;
inline constexpr double kLargeGapMinM = 500.0, kLargeGapMaxM = 2900.0;

/// Accepted trace length window in meters.
inline constexpr double kMinTraceLengthM = 500.0, kMaxTraceLengthM = 30000.0;

/// Oldest accepted upload date.
inline constexpr const char* kMinUploadDate = "2024-01-01";

/// A reconstruction task: the trajectory with a hidden contiguous run.
/// p_s is the last visible point before the gap, p_e the first after it.
struct MaskedTask {
  std::string task_id;
  std::string trace_id;
  GapKind gap_kind = GapKind::Small;
  Activity activity = Activity::Unknown;
  std::string region;
  TimedPath prefix;
  TimedPath ground_truth;
  TimedPath suffix;
  GeoPoint p_s;
  GeoPoint p_e;
  double masked_length_m = 0.0;
};

struct DatasetSplit {
  std::string name;  // "train", "dev", "test"
  std::vector<std::string> task_ids;
};

// ---------------------------------------------------------------------------
// Activity classification
// ---------------------------------------------------------------------------

/// Keyword table for activity tagging. A deliberately small, documented
/// fixture; callers that need better coverage install a classifier hook.
inline const std::vector<std::pair<std::string, Activity>>& activity_keywords() {
  static const std::vector<std::pair<std::string, Activity>> table = {
      {"bike", Activity::Cycling},    {"biking", Activity::Cycling},
      {"cycling", Activity::Cycling}, {"cycle", Activity::Cycling},
      {"mtb", Activity::Cycling},     {"bicycle", Activity::Cycling},
      {"hike", Activity::Hiking},     {"hiking", Activity::Hiking},
      {"trail", Activity::Hiking},    {"trek", Activity::Hiking},
      {"trekking", Activity::Hiking}, {"drive", Activity::Driving},
      {"driving", Activity::Driving}, {"car", Activity::Driving},
      {"bus", Activity::Bus},         {"train", Activity::Train},
      {"railway", Activity::Train},   {"rail", Activity::Train},
      {"walk", Activity::Walking},    {"walking", Activity::Walking},
      {"stroll", Activity::Walking},  {"boat", Activity::Boat},
      {"ferry", Activity::Boat},      {"sail", Activity::Boat},
      {"sailing", Activity::Boat},    {"flight", Activity::Flying},
      {"fly", Activity::Flying},      {"flying", Activity::Flying},
      {"plane", Activity::Flying},
  };
  return table;
}

using ActivityClassifierHook = Activity (*)(const std::string& name, const std::string& description);

/// Case-insensitive whole-word keyword match over name then description;
/// the first matching token in text order wins. An optional hook resolves
/// traces the table cannot.
inline Activity classify_activity(const std::string& name, const std::string& description,
                                  ActivityClassifierHook hook = nullptr) {
  const std::string text = to_lower(name + " " + description);
  std::string token;
  auto lookup = [](const std::string& tok) {
    for (const auto& [kw, act] : activity_keywords())
      if (tok == kw) return act;
    return Activity::Unknown;
  };
  for (std::size_t i = 0; i <= text.size(); ++i) {
    const bool alpha = i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]));
    if (alpha) {
      token.push_back(text[i]);
      continue;
    }
    if (!token.empty()) {
      const Activity a = lookup(token);
      if (a != Activity::Unknown) return a;
      token.clear();
    }
  }
  if (hook) return hook(name, description);
  return Activity::Unknown;
}

// ---------------------------------------------------------------------------
// Filtering
// ---------------------------------------------------------------------------

enum class RejectReason { None, TooShort, TooLong, TooOld, UnknownActivity };

inline const char* reject_reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::None: return "none";
    case RejectReason::TooShort: return "too_short";
    case RejectReason::TooLong: return "too_long";
    case RejectReason::TooOld: return "too_old";
    case RejectReason::UnknownActivity: return "unknown_activity";
  }
  return "none";
}

struct FilterResult {
  std::optional<Trajectory> trajectory;
  RejectReason reject = RejectReason::None;

  bool accepted() const { return trajectory.has_value(); }
};

/// Applies the corpus admission rules: path length inside [500 m, 30 km],
/// upload date on or after 2024-01-01, and a resolvable activity tag.
/// A missing upload date cannot satisfy the date floor and counts as old.
inline FilterResult filter_trace(const RawTrace& raw, ActivityClassifierHook hook = nullptr) {
  FilterResult res;
  if (raw.points.empty()) {
    res.reject = RejectReason::TooShort;
    return res;
  }
  const double length = path_length(raw.points);
  if (length < kMinTraceLengthM) {
    res.reject = RejectReason::TooShort;
    return res;
  }
  if (length > kMaxTraceLengthM) {
    res.reject = RejectReason::TooLong;
    return res;
  }
  if (raw.upload_date.empty() || raw.upload_date < kMinUploadDate) {
    res.reject = RejectReason::TooOld;
    return res;
  }
  const Activity activity = classify_activity(raw.name, raw.description, hook);
  if (activity == Activity::Unknown) {
    res.reject = RejectReason::UnknownActivity;
    return res;
  }
  Trajectory traj;
  traj.trace_id = raw.id;
  traj.activity = activity;
  traj.region = raw.region;
  traj.upload_date = raw.upload_date;
  traj.points = raw.points;
  traj.total_length_m = length;
  res.trajectory = std::move(traj);
  return res;
}

/// Re-admission check for an already accepted trajectory (idempotence of the
/// filter): only the length window and date floor apply, the activity is known.
inline bool filter_accepts(const Trajectory& traj) {
  return traj.total_length_m >= kMinTraceLengthM && traj.total_length_m <= kMaxTraceLengthM &&
         !traj.upload_date.empty() && traj.upload_date >= kMinUploadDate &&
         traj.activity != Activity::Unknown;
}

// ---------------------------------------------------------------------------
// Masking
// ---------------------------------------------------------------------------

/// Cumulative path length per point; cum[j] - cum[i] is the length of the
/// run points[i..j].
inline std::vector<double> cumulative_lengths(const TimedPath& points) {
  std::vector<double> cum(points.size(), 0.0);
  for (std::size_t i = 1; i < points.size(); ++i)
    cum[i] = cum[i - 1] + haversine_distance(points[i - 1].point, points[i].point);
  return cum;
}

inline void gap_range(GapKind kind, double& lo, double& hi) {
  if (kind == GapKind::Small) {
    lo = kSmallGapMinM;
    hi = kSmallGapMaxM;
  } else {
    lo = kLargeGapMinM;
    hi = kLargeGapMaxM;
  }
}

/// Hides the contiguous run whose path length is closest to a target drawn
/// uniformly from the kind's window. The prefix and suffix each keep at
/// least 5 points and 100 m of path so context remains computable. Ties on
/// |length - target| break toward the lowest start index.
inline MaskedTask make_masked_task(const Trajectory& traj, GapKind kind, std::uint64_t seed) {
  const std::size_t n = traj.points.size();
  constexpr std::size_t kEdgePoints = 5;
  constexpr double kEdgeLengthM = 100.0;
  double lo = 0.0, hi = 0.0;
  gap_range(kind, lo, hi);
  if (n < 2 * kEdgePoints + 2) throw InfeasibleMask("trajectory too short to mask: " + traj.trace_id);

  std::mt19937_64 rng(seed ^ fnv1a64(traj.trace_id) ^
                      (kind == GapKind::Small ? 0x736d616c6cull : 0x6c61726765ull));
  const double target = uniform_range(rng, lo, hi);

  const std::vector<double> cum = cumulative_lengths(traj.points);
  const double total = cum.back();

  // Hidden run is points[i..j]; prefix = [0, i), suffix = (j, n).
  std::size_t best_i = 0, best_j = 0;
  double best_diff = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = kEdgePoints; i + kEdgePoints + 1 < n; ++i) {
    if (cum[i - 1] < kEdgeLengthM) continue;  // prefix path too short
    for (std::size_t j = i; j + kEdgePoints < n; ++j) {
      const double len = cum[j] - cum[i];
      if (len > hi && len - target > best_diff) break;
      if (total - cum[j + 1] < kEdgeLengthM) continue;  // suffix path too short
      if (len < lo || len > hi) continue;
      const double diff = std::fabs(len - target);
      if (diff < best_diff) {
        best_diff = diff;
        best_i = i;
        best_j = j;
        found = true;
      }
    }
  }
  if (!found) throw InfeasibleMask("no valid gap placement for " + traj.trace_id + " (" +
                                   gap_kind_name(kind) + ")");

  MaskedTask task;
  task.task_id = traj.trace_id + "-" + gap_kind_name(kind);
  task.trace_id = traj.trace_id;
  task.gap_kind = kind;
  task.activity = traj.activity;
  task.region = traj.region;
  task.prefix.assign(traj.points.begin(), traj.points.begin() + static_cast<std::ptrdiff_t>(best_i));
  task.ground_truth.assign(traj.points.begin() + static_cast<std::ptrdiff_t>(best_i),
                           traj.points.begin() + static_cast<std::ptrdiff_t>(best_j + 1));
  task.suffix.assign(traj.points.begin() + static_cast<std::ptrdiff_t>(best_j + 1),
                     traj.points.end());
  task.p_s = task.prefix.back().point;
  task.p_e = task.suffix.front().point;
  task.masked_length_m = cum[best_j] - cum[best_i];
  return task;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

/// Partitions tasks into train/dev/test. Within each (activity, region)
/// stratum, tasks are grouped by trace so both masked variants of a trace
/// land in the same split, the groups are shuffled under the seed, and the
/// splits are cut at cumulative task-count boundaries.
inline std::vector<DatasetSplit> stratified_split(const std::vector<MaskedTask>& tasks,
                                                  double train_ratio, double dev_ratio,
                                                  double test_ratio, std::uint64_t seed) {
  if (std::fabs(train_ratio + dev_ratio + test_ratio - 1.0) > 1e-9)
    throw Error("split ratios must sum to 1");

  std::vector<DatasetSplit> splits(3);
  splits[0].name = "train";
  splits[1].name = "dev";
  splits[2].name = "test";

  // stratum key -> trace id -> task ids (std::map everywhere for determinism)
  std::map<std::string, std::map<std::string, std::vector<std::string>>> strata;
  for (const auto& t : tasks)
    strata[std::string(activity_name(t.activity)) + "|" + t.region][t.trace_id].push_back(t.task_id);

  for (auto& [key, groups] : strata) {
    std::size_t n_tasks = 0;
    std::vector<std::pair<std::string, std::vector<std::string>>> order;
    for (auto& [trace_id, ids] : groups) {
      std::sort(ids.begin(), ids.end());
      n_tasks += ids.size();
      order.emplace_back(trace_id, ids);
    }
    std::mt19937_64 rng(seed ^ fnv1a64(key));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1))]);

    const auto c1 = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(n_tasks)));
    const auto c2 = static_cast<std::size_t>(std::llround((train_ratio + dev_ratio) * static_cast<double>(n_tasks)));
    std::size_t assigned = 0;
    for (auto& [trace_id, ids] : order) {
      DatasetSplit& dst = assigned < c1 ? splits[0] : (assigned < c2 ? splits[1] : splits[2]);
      for (auto& id : ids) dst.task_ids.push_back(id);
      assigned += ids.size();
    }
  }
  for (auto& s : splits) std::sort(s.task_ids.begin(), s.task_ids.end());
  return splits;
}

}  // namespace trajrec
