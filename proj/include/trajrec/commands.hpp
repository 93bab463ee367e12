#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajrec/baselines.hpp"
#include "trajrec/errors.hpp"
#include "trajrec/gpx.hpp"
#include "trajrec/io.hpp"
#include "trajrec/metrics.hpp"
#include "trajrec/overpass.hpp"
#include "trajrec/pipeline.hpp"
#include "trajrec/polyline_codec.hpp"
#include "trajrec/provider.hpp"
#include "trajrec/road_network.hpp"
#include "trajrec/stub_provider.hpp"
#include "trajrec/trace.hpp"
#include "trajrec/util.hpp"

namespace trajrec {

/// Everything a `run` invocation needs; mirrors the CLI flags.
struct RunConfig {
  std::string tasks_path;
  std::string method = "linear";
  std::string config_path;  // provider registry (JSON); llm methods only
  std::string cache_dir = "cache";
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  double tau = 10.0;
  int parallelism = 1;
  bool resume = false;
  Representation representation = Representation::TopologyDirection;
  std::string overpass_endpoint = kDefaultOverpassEndpoint;
};

inline std::map<std::string, ProviderConfig> load_provider_registry(const std::string& path) {
  const auto doc = nlohmann::json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw ParseError("provider registry is not a JSON object: " + path);
  const nlohmann::json& providers =
      doc.contains("providers") && doc["providers"].is_object() ? doc["providers"] : doc;
  std::map<std::string, ProviderConfig> out;
  for (const auto& [name, e] : providers.items()) {
    if (!e.is_object()) continue;
    ProviderConfig c;
    c.name = name;
    c.endpoint = e.value("endpoint", c.endpoint);
    c.model = e.value("model", std::string());
    c.temperature = e.value("temperature", 0.0);
    c.max_output_tokens = e.value("max_output_tokens", 4096);
    c.timeout_seconds = e.value("timeout_seconds", 120);
    c.api_key_env = e.value("api_key_env", std::string());
    c.max_parallel_requests = e.value("max_parallel_requests", 1);
    out[name] = c;
  }
  return out;
}

// --- ingest -------------------------------------------------------------------

struct IngestStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t unreadable = 0;
};

/// Reads every .gpx file under `gpx_dir` (sorted by name for stable output),
/// applies the admission rules, and writes accepted trajectories as JSONL.
/// Unreadable or rejected inputs are logged and skipped, never fatal.
inline IngestStats cmd_ingest(const std::string& gpx_dir, const std::string& region_map_path,
                              const std::string& out_dataset, const std::string& out_rejects,
                              ActivityClassifierHook hook = nullptr) {
  namespace fs = std::filesystem;
  std::map<std::string, std::string> regions;
  if (!region_map_path.empty()) {
    const auto doc = nlohmann::json::parse(read_file(region_map_path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
      throw ParseError("region map is not a JSON object: " + region_map_path);
    for (const auto& [k, v] : doc.items())
      if (v.is_string()) regions[k] = v.get<std::string>();
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(gpx_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".gpx") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  IngestStats stats;
  std::string dataset, rejects;
  for (const auto& path : files) {
    const std::string trace_id = path.stem().string();
    std::string region = "unspecified";
    auto rit = regions.find(path.filename().string());
    if (rit == regions.end()) rit = regions.find(trace_id);
    if (rit != regions.end()) region = rit->second;
    try {
      const RawTrace raw = parse_gpx(read_file(path.string()), trace_id, region);
      const FilterResult res = filter_trace(raw, hook);
      if (res.trajectory) {
        dataset += trajectory_json_line(*res.trajectory) + "\n";
        ++stats.accepted;
      } else {
        rejects += "{\"trace_id\":" + json_escape(trace_id) +
                   ",\"reason\":" + json_escape(reject_reason_name(res.reject)) + "}\n";
        ++stats.rejected;
      }
    } catch (const Error& e) {
      rejects += "{\"trace_id\":" + json_escape(trace_id) +
                 ",\"reason\":\"unreadable\",\"detail\":" + json_escape(e.what()) + "}\n";
      ++stats.unreadable;
    }
  }
  write_file(out_dataset, dataset);
  if (!out_rejects.empty()) write_file(out_rejects, rejects);
  return stats;
}

// --- mask ---------------------------------------------------------------------

struct MaskStats {
  std::size_t tasks = 0;
  std::size_t infeasible = 0;
};

/// Derives one small-gap and one large-gap task per trajectory. Placement
/// failures are logged per (trace, kind) and do not abort the batch.
inline MaskStats cmd_mask(const std::string& dataset_path, const std::string& out_tasks,
                          const std::string& out_failures, std::uint64_t seed) {
  const auto dataset = read_dataset_jsonl(dataset_path);
  MaskStats stats;
  std::string tasks, failures;
  for (const auto& traj : dataset)
    for (const GapKind kind : {GapKind::Small, GapKind::Large}) {
      try {
        tasks += task_json_line(make_masked_task(traj, kind, seed)) + "\n";
        ++stats.tasks;
      } catch (const InfeasibleMask& e) {
        failures += "{\"trace_id\":" + json_escape(traj.trace_id) +
                    ",\"gap_kind\":" + json_escape(gap_kind_name(kind)) +
                    ",\"reason\":" + json_escape(e.what()) + "}\n";
        ++stats.infeasible;
      }
    }
  write_file(out_tasks, tasks);
  if (!out_failures.empty()) write_file(out_failures, failures);
  return stats;
}

// --- fetch-net ----------------------------------------------------------------

struct FetchStats {
  std::size_t fetched = 0;
  std::size_t failed = 0;
};

/// Populates the query cache for every task. The cache is the resume state:
/// already-cached responses are not refetched, so rerunning after a partial
/// failure only issues the missing queries.
inline FetchStats cmd_fetch_net(const std::string& tasks_path, const std::string& cache_dir,
                                const std::string& endpoint, const std::string& out_log) {
  const auto tasks = read_tasks_jsonl(tasks_path);
  std::filesystem::create_directories(cache_dir);
  OverpassClient client(endpoint, cache_dir);
  FetchStats stats;
  std::string log;
  for (const auto& task : tasks) {
    try {
      const BBox box = expanded_bbox(task.p_s, task.p_e, gap_buffer_m(task.gap_kind));
      const std::string query = overpass_query(task.activity, box);
      client.fetch(query);
      log += "{\"task_id\":" + json_escape(task.task_id) +
             ",\"status\":\"ok\",\"cache\":" + json_escape(client.cache_path(query)) + "}\n";
      ++stats.fetched;
    } catch (const Error& e) {
      log += "{\"task_id\":" + json_escape(task.task_id) +
             ",\"status\":\"error\",\"reason\":" + json_escape(e.what()) + "}\n";
      ++stats.failed;
    }
  }
  if (!out_log.empty()) write_file(out_log, log);
  return stats;
}

/// Loads a task's road network from the cache without touching the network.
/// Absent or unparseable cache entries yield nullopt; callers degrade.
inline std::optional<RoadNetwork> network_for_task(const MaskedTask& task,
                                                   const std::string& cache_dir) {
  try {
    const BBox box = expanded_bbox(task.p_s, task.p_e, gap_buffer_m(task.gap_kind));
    const std::string query = overpass_query(task.activity, box);
    const std::string path = OverpassClient(kDefaultOverpassEndpoint, cache_dir).cache_path(query);
    if (!file_exists(path)) return std::nullopt;
    return build_graph(read_file(path));
  } catch (const Error&) {
    return std::nullopt;
  }
}

// --- run ----------------------------------------------------------------------

struct MethodSpec {
  enum class Kind { Linear, LinearHmm, Llm, PolylineFile };
  Kind kind = Kind::Linear;
  std::string provider;  // llm only
  std::string path;      // polyline-file only
  std::string label;     // filename-safe method tag
};

inline MethodSpec parse_method(const std::string& method) {
  MethodSpec spec;
  if (method == "linear") {
    spec.kind = MethodSpec::Kind::Linear;
    spec.label = "linear";
  } else if (method == "linear-hmm") {
    spec.kind = MethodSpec::Kind::LinearHmm;
    spec.label = "linear-hmm";
  } else if (starts_with(method, "llm:")) {
    spec.kind = MethodSpec::Kind::Llm;
    spec.provider = method.substr(4);
    if (spec.provider.empty()) throw Error("llm method needs a provider name, e.g. llm:stub");
    spec.label = "llm_" + spec.provider;
  } else if (starts_with(method, "polyline-file:")) {
    spec.kind = MethodSpec::Kind::PolylineFile;
    spec.path = method.substr(14);
    if (spec.path.empty()) throw Error("polyline-file method needs a path");
    spec.label = "polyline-file";
  } else {
    throw Error("unknown method: " + method +
                " (expected linear, linear-hmm, llm:<provider>, or polyline-file:<path>)");
  }
  return spec;
}

struct RunStats {
  std::size_t total = 0;
  std::size_t completed = 0;  // newly reconstructed this invocation
  std::size_t skipped = 0;    // already present in the resume file
  std::size_t fallbacks = 0;  // among newly reconstructed
  std::string recon_path;
  std::string audit_path;
  std::string manifest_path;
};

/// Reconstructs every task with the configured method. Output lines follow
/// task-file order regardless of parallelism, so reruns with the same seed
/// are byte-identical; with --resume, tasks already present in the result
/// file are kept and only the remainder is computed and appended.
inline RunStats cmd_run(const RunConfig& cfg) {
  const MethodSpec spec = parse_method(cfg.method);
  const auto tasks = read_tasks_jsonl(cfg.tasks_path);
  std::filesystem::create_directories(cfg.out_dir);

  RunStats stats;
  stats.total = tasks.size();
  stats.recon_path = cfg.out_dir + "/recon_" + spec.label + ".jsonl";
  stats.audit_path = cfg.out_dir + "/audit_" + spec.label + ".jsonl";
  stats.manifest_path = cfg.out_dir + "/run_" + spec.label + ".json";

  std::set<std::string> done;
  if (cfg.resume && file_exists(stats.recon_path))
    for (const auto& r : read_reconstructions_jsonl(stats.recon_path)) done.insert(r.task_id);

  std::unique_ptr<ChatProvider> provider;
  if (spec.kind == MethodSpec::Kind::Llm) {
    if (spec.provider == "stub") {
      provider = std::make_unique<OfflineStubProvider>();
    } else {
      if (cfg.config_path.empty()) throw Error("llm method needs --config with a provider registry");
      const auto registry = load_provider_registry(cfg.config_path);
      const auto it = registry.find(spec.provider);
      if (it == registry.end()) throw Error("provider not in registry: " + spec.provider);
      provider = std::make_unique<HttpChatProvider>(it->second);
    }
  }

  std::map<std::string, std::string> predictions;  // task_id -> encoded polyline
  if (spec.kind == MethodSpec::Kind::PolylineFile) {
    std::size_t line_no = 0;
    for (const auto& line : split_lines(read_file(spec.path))) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("task_id") || !j.contains("polyline"))
        throw ParseError(spec.path + ":" + std::to_string(line_no) +
                         ": expected {\"task_id\", \"polyline\"}");
      predictions[j["task_id"].get<std::string>()] = j["polyline"].get<std::string>();
    }
  }

  const auto reconstruct = [&](const MaskedTask& task) -> std::optional<Reconstruction> {
    Reconstruction rec;
    rec.task_id = task.task_id;
    try {
      switch (spec.kind) {
        case MethodSpec::Kind::Linear:
          rec.method = "linear";
          rec.points = linear_interpolate(task.p_s, task.p_e, kInterpolationSpacingM);
          return rec;
        case MethodSpec::Kind::LinearHmm: {
          rec.method = "linear-hmm";
          RoadNetwork net;
          if (auto loaded = network_for_task(task, cfg.cache_dir)) net = std::move(*loaded);
          const BaselineResult b = linear_plus_hmm(task, net, HmmParams{});
          rec.points = b.line;
          rec.fallback = b.fallback;
          return rec;
        }
        case MethodSpec::Kind::Llm: {
          RoadNetwork net;
          if (auto loaded = network_for_task(task, cfg.cache_dir)) net = std::move(*loaded);
          TwoStageOptions opt;
          opt.representation = cfg.representation;
          return run_two_stage(task, net, *provider, opt);
        }
        case MethodSpec::Kind::PolylineFile: {
          const auto it = predictions.find(task.task_id);
          if (it == predictions.end()) return std::nullopt;  // eval will flag it missing
          rec.method = "polyline-file";
          rec.points = decode_polyline(it->second);
          return rec;
        }
      }
    } catch (const Error&) {
      rec.method = cfg.method;
      rec.points = linear_interpolate(task.p_s, task.p_e, kInterpolationSpacingM);
      rec.fallback = true;
    }
    return rec;
  };

  std::vector<const MaskedTask*> pending;
  for (const auto& t : tasks) {
    if (done.count(t.task_id)) {
      ++stats.skipped;
      continue;
    }
    pending.push_back(&t);
  }

  std::ofstream recon_f(stats.recon_path,
                        cfg.resume ? std::ios::out | std::ios::app : std::ios::out | std::ios::trunc);
  std::ofstream audit_f(stats.audit_path,
                        cfg.resume ? std::ios::out | std::ios::app : std::ios::out | std::ios::trunc);
  if (!recon_f) throw Error("cannot open " + stats.recon_path + " for writing");

  const std::size_t par = static_cast<std::size_t>(std::max(1, cfg.parallelism));
  for (std::size_t base = 0; base < pending.size(); base += par) {
    const std::size_t chunk = std::min(par, pending.size() - base);
    std::vector<std::future<std::optional<Reconstruction>>> futures;
    futures.reserve(chunk);
    for (std::size_t k = 0; k < chunk; ++k)
      futures.push_back(std::async(chunk == 1 ? std::launch::deferred : std::launch::async,
                                   reconstruct, std::cref(*pending[base + k])));
    for (std::size_t k = 0; k < chunk; ++k) {
      auto rec = futures[k].get();
      if (!rec) continue;
      recon_f << reconstruction_json_line(*rec) << "\n";
      for (const auto& x : rec->exchanges) audit_f << audit_json_line(rec->task_id, x) << "\n";
      ++stats.completed;
      if (rec->fallback) ++stats.fallbacks;
    }
    recon_f.flush();
    audit_f.flush();
  }

  std::string manifest = "{\n";
  manifest += "  \"method\": " + json_escape(cfg.method) + ",\n";
  manifest += "  \"seed\": " + std::to_string(cfg.seed) + ",\n";
  manifest += "  \"representation\": " + json_escape(representation_name(cfg.representation)) + ",\n";
  manifest += "  \"tau\": " + format_fixed(cfg.tau, 3) + ",\n";
  manifest += "  \"tasks\": " + std::to_string(stats.total) + ",\n";
  manifest += "  \"completed\": " + std::to_string(stats.completed + stats.skipped) + ",\n";
  manifest += "  \"fallbacks\": " + std::to_string(stats.fallbacks) + "\n";
  manifest += "}\n";
  write_file(stats.manifest_path, manifest);
  return stats;
}

// --- eval ---------------------------------------------------------------------

namespace detail {

inline std::optional<Cardinal> cardinal_from_plain(const std::string& word) {
  static const std::map<std::string, Cardinal> table = {
      {"north", Cardinal::N},     {"northeast", Cardinal::NE}, {"east", Cardinal::E},
      {"southeast", Cardinal::SE}, {"south", Cardinal::S},      {"southwest", Cardinal::SW},
      {"west", Cardinal::W},      {"northwest", Cardinal::NW}};
  const auto it = table.find(to_lower(trim(word)));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

}  // namespace detail

/// Scores one reconstruction set against the tasks that produced it. Plan
/// diagnostics are computed only for genuine plan output (not fallbacks) and
/// only when the task's network is still in the cache.
inline std::vector<EvalRecord> evaluate_tasks(const std::vector<MaskedTask>& tasks,
                                              const std::map<std::string, Reconstruction>& recons,
                                              const std::string& cache_dir, const MetricsConfig& mcfg,
                                              const std::string& missing_label) {
  std::vector<EvalRecord> out;
  out.reserve(tasks.size());
  for (const auto& task : tasks) {
    EvalRecord r;
    r.task_id = task.task_id;
    r.gap_kind = task.gap_kind;
    r.activity = task.activity;
    r.region = task.region;

    const auto it = recons.find(task.task_id);
    if (it == recons.end() || it->second.points.empty()) {
      r.method = missing_label;
      r.missing = true;
      out.push_back(r);
      continue;
    }
    const Reconstruction& rec = it->second;
    r.method = rec.method;
    r.fallback = rec.fallback;

    const Polyline truth = to_polyline(task.ground_truth);
    r.pot_gr = pot_gr(truth, rec.points, mcfg.tau);
    r.pot_rg = pot_rg(rec.points, truth, mcfg.tau);
    r.pot_f1 = pot_f1(r.pot_gr, r.pot_rg);
    r.mae_gr = mae_gr(truth, rec.points);
    r.mae_rg = mae_rg(rec.points, truth);
    r.mae_f1 = mae_f1(r.mae_gr, r.mae_rg);

    if (rec.plan && !rec.fallback) {
      const NavigationPlan& plan = *rec.plan;
      r.num_steps = plan.steps.size();
      r.num_large_gaps = step_gap_stats(rec.per_step_points, mcfg.large_gap_threshold).num_large_gaps;

      std::vector<StepBearing> bearings;
      for (std::size_t i = 0; i < plan.steps.size() && i < rec.per_step_points.size(); ++i) {
        const auto card = detail::cardinal_from_plain(plan.steps[i].direction);
        const Polyline& line = rec.per_step_points[i];
        if (!card || line.size() < 2) continue;
        bearings.push_back({*card, line.points.front(), line.points.back()});
      }
      const BearingErrorResult bres = bearing_error(bearings);
      r.bearing_error_mean = bres.mean_deg;
      r.bearing_steps_skipped = plan.steps.size() - bres.scored;

      const auto net = network_for_task(task, cache_dir);
      if (net && !net->empty()) {
        r.connectivity = plan_connectivity(plan.road_mentions(), *net);
        r.network_adherence =
            network_adherence(plan.road_mentions(), plan.intersection_mentions(), *net);

        std::vector<GeoPoint> vertices;
        for (std::size_t i = 0; i < plan.steps.size(); ++i) {
          std::optional<std::int64_t> next;
          if (i + 1 < plan.steps.size())
            next = plan.steps[i + 1].road_id;
          else if (rec.end_snap)
            next = rec.end_snap->road_id;
          const auto v = slice_for_step(*net, plan.steps[i], next).vertices();
          vertices.insert(vertices.end(), v.begin(), v.end());
        }
        std::vector<GeoPoint> anchors = {task.p_s, task.p_e};
        if (rec.start_snap) anchors.push_back(rec.start_snap->snapped_point);
        if (rec.end_snap) anchors.push_back(rec.end_snap->snapped_point);
        anchors.insert(anchors.end(), rec.step_start_anchors.begin(), rec.step_start_anchors.end());
        std::vector<Polyline> raw;
        raw.reserve(rec.raw_step_points.size());
        for (const auto& pts : rec.raw_step_points) {
          Polyline line;
          line.points = pts;
          raw.push_back(line);
        }
        r.geometry_adherence = geometry_adherence(raw, vertices, anchors);
      }
    }
    out.push_back(r);
  }
  return out;
}

inline std::string eval_summary_csv(const std::vector<EvalRecord>& records) {
  std::map<std::string, std::vector<EvalRecord>> by_method;
  for (const auto& r : records)
    if (!r.method.empty()) by_method[r.method].push_back(r);
  std::string out = "method,gap,count,pot_f1,mae_f1\n";
  for (const auto& [method, rs] : by_method)
    for (const auto& row : aggregate(rs, GroupBy::Gap))
      out += method + "," + row.group + "," + std::to_string(row.count) + "," +
             format_fixed(row.pot_f1, 6) + "," + format_fixed(row.mae_f1, 6) + "\n";
  return out;
}

inline std::vector<EvalRecord> cmd_eval(const std::string& tasks_path, const std::string& recon_path,
                                        const std::string& out_records, const std::string& out_summary,
                                        double tau, const std::string& cache_dir) {
  const auto tasks = read_tasks_jsonl(tasks_path);
  std::map<std::string, Reconstruction> recons;
  std::string label;
  for (auto& r : read_reconstructions_jsonl(recon_path)) {
    if (label.empty()) label = r.method;
    recons[r.task_id] = std::move(r);
  }
  MetricsConfig mcfg;
  mcfg.tau = tau;
  const auto records = evaluate_tasks(tasks, recons, cache_dir, mcfg, label);
  std::string lines;
  for (const auto& r : records) lines += record_json_line(r) + "\n";
  write_file(out_records, lines);
  if (!out_summary.empty()) write_file(out_summary, eval_summary_csv(records));
  return records;
}

// --- report -------------------------------------------------------------------

struct ReportBundle {
  std::vector<AggregateRow> by_method;
  std::vector<AggregateRow> by_gap;
  std::vector<AggregateRow> by_region;
  std::vector<AggregateRow> by_activity;
};

inline ReportBundle build_report(const std::vector<EvalRecord>& records) {
  return {aggregate(records, GroupBy::Method), aggregate(records, GroupBy::Gap),
          aggregate(records, GroupBy::Region), aggregate(records, GroupBy::ActivityType)};
}

/// Writes breakdown CSVs, and per-task GeoJSON when the task and
/// reconstruction files are supplied.
inline ReportBundle cmd_report(const std::string& records_path, const std::string& out_dir,
                               const std::string& tasks_path = "",
                               const std::string& recon_path = "") {
  const auto records = read_records_jsonl(records_path);
  const ReportBundle bundle = build_report(records);
  std::filesystem::create_directories(out_dir);
  write_file(out_dir + "/by_method.csv", aggregate_csv(bundle.by_method));
  write_file(out_dir + "/by_gap.csv", aggregate_csv(bundle.by_gap));
  write_file(out_dir + "/by_region.csv", aggregate_csv(bundle.by_region));
  write_file(out_dir + "/by_activity.csv", aggregate_csv(bundle.by_activity));
  if (!tasks_path.empty() && !recon_path.empty()) {
    std::filesystem::create_directories(out_dir + "/geojson");
    const auto tasks = read_tasks_jsonl(tasks_path);
    std::map<std::string, Reconstruction> recons;
    for (auto& r : read_reconstructions_jsonl(recon_path)) recons[r.task_id] = std::move(r);
    for (const auto& task : tasks) {
      const auto it = recons.find(task.task_id);
      if (it == recons.end()) continue;
      write_file(out_dir + "/geojson/" + task.task_id + ".geojson", task_geojson(task, it->second));
    }
  }
  return bundle;
}

}  // namespace trajrec
