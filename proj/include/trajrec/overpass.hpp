#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "trajrec/errors.hpp"
#include "trajrec/geo.hpp"
#include "trajrec/trace.hpp"
#include "trajrec/util.hpp"

namespace trajrec {

inline constexpr const char* kDefaultOverpassEndpoint = "https://overpass-api.de/api/interpreter";

/// Gap-aware bounding-box buffers in meters.
inline constexpr double kSmallGapBufferM = 150.0;
inline constexpr double kLargeGapBufferM = 500.0;

inline double gap_buffer_m(GapKind kind) {
  return kind == GapKind::Small ? kSmallGapBufferM : kLargeGapBufferM;
}

namespace detail {

inline const char* highway_filter(Activity activity) {
  switch (activity) {
    case Activity::Walking:
    case Activity::Hiking:
      return "footway|pedestrian|path|steps|living_street|track|bridleway|road|residential|"
             "service|unclassified|tertiary|tertiary_link|secondary|secondary_link|primary|"
             "primary_link|cycleway|trunk|trunk_link";
    case Activity::Cycling:
      return "cycleway|path|living_street|track|residential|service|unclassified|tertiary|"
             "tertiary_link|secondary|secondary_link|primary|primary_link";
    case Activity::Driving:
    case Activity::Bus:
      return "motorway|motorway_link|trunk|trunk_link|primary|primary_link|secondary|"
             "secondary_link|tertiary|tertiary_link|unclassified|residential|service";
    default:
      return nullptr;  // train handled separately; flying/boat/unknown unfiltered
  }
}

inline std::string bbox_text(const BBox& box) {
  return "(" + format_fixed(box.south, 4) + "," + format_fixed(box.west, 4) + "," +
         format_fixed(box.north, 4) + "," + format_fixed(box.east, 4) + ")";
}

}  // namespace detail

/// Overpass QL for the activity's road slice inside `box`. Walking, hiking,
/// cycling, driving, and bus use a highway-type alternation; train fetches
/// station/platform node features; flying and boat take every way unfiltered.
inline std::string overpass_query(Activity activity, const BBox& box) {
  const std::string bbox = detail::bbox_text(box);
  std::string q = "[out:json][timeout:30];\n(\n";
  if (activity == Activity::Train) {
    q += "  node[public_transport=station]" + bbox + ";\n";
    q += "  node[railway=station]" + bbox + ";\n";
    q += "  node[railway=subway_entrance]" + bbox + ";\n";
    q += "  node[public_transport=platform]" + bbox + ";\n";
    q += "  node[public_transport=stop_position]" + bbox + ";\n";
  } else if (const char* filter = detail::highway_filter(activity)) {
    q += "  way\n    [highway~\"" + std::string(filter) + "\"]\n      " + bbox + ";\n";
  } else {
    q += "  way\n      " + bbox + ";\n";
  }
  q += ");\nout geom;\n";
  return q;
}

/// Caching HTTP client for an Overpass endpoint. Responses are cached on
/// disk keyed by the query hash; at most one request is in flight per
/// endpoint, with exponential backoff on failures and rate limits.
class OverpassClient {
 public:
  OverpassClient(std::string endpoint, std::string cache_dir)
      : endpoint_(std::move(endpoint)), cache_dir_(std::move(cache_dir)) {}

  /// Tuning knobs; tests shrink the backoff base.
  int max_retries = 5;
  double backoff_base_s = 2.0;
  std::function<void(double)> sleep_fn = [](double s) {
    std::this_thread::sleep_for(std::chrono::duration<double>(s));
  };

  std::string cache_path(const std::string& query) const {
    return cache_dir_ + "/overpass_" + hex64(fnv1a64(query)) + ".json";
  }

  /// Returns raw response bytes, from cache when possible. Corrupt cache
  /// entries (non-JSON) are refetched and overwritten.
  std::string fetch(const std::string& query) {
    const std::string path = cache_path(query);
    if (file_exists(path)) {
      std::string cached = read_file(path);
      if (looks_like_json(cached)) return cached;
    }
    const std::string body = fetch_uncached(query);
    write_file(path, body);
    return body;
  }

 private:
  static bool looks_like_json(const std::string& content) {
    return !nlohmann::json::parse(content, nullptr, false).is_discarded();
  }

  static std::mutex& endpoint_mutex(const std::string& endpoint) {
    static std::mutex registry_lock;
    static std::map<std::string, std::unique_ptr<std::mutex>> registry;
    std::lock_guard<std::mutex> g(registry_lock);
    auto& slot = registry[endpoint];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
  }

  std::string fetch_uncached(const std::string& query) {
    std::string base, path;
    split_endpoint(endpoint_, base, path);
    std::lock_guard<std::mutex> inflight(endpoint_mutex(endpoint_));
    std::string last_error = "no attempts made";
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
      if (attempt > 0) sleep_fn(backoff_base_s * std::pow(2.0, attempt - 1));
      httplib::Client cli(base);
      cli.set_connection_timeout(30);
      cli.set_read_timeout(60);
      auto res = cli.Post(path, httplib::Params{{"data", query}});
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) {
        if (!looks_like_json(res->body)) {
          last_error = "response is not JSON";
          continue;
        }
        return res->body;
      }
      last_error = "HTTP status " + std::to_string(res->status);
    }
    throw FetchError("overpass fetch failed after " + std::to_string(max_retries) +
                     " retries: " + last_error);
  }

  static void split_endpoint(const std::string& url, std::string& base, std::string& path) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw FetchError("bad endpoint URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      base = url;
      path = "/";
    } else {
      base = url.substr(0, path_start);
      path = url.substr(path_start);
    }
  }

  std::string endpoint_;
  std::string cache_dir_;
};

/// One-shot convenience over OverpassClient.
inline std::string fetch_network(const std::string& query, const std::string& endpoint,
                                 const std::string& cache_dir) {
  return OverpassClient(endpoint, cache_dir).fetch(query);
}

}  // namespace trajrec
