#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "trajrec/errors.hpp"

namespace trajrec {

/// Fixed-point decimal formatting. All coordinate serialization goes through
/// here so that output files are byte-stable across runs and platforms.
inline std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return std::string(buf);
}

inline std::string coord7(double value) { return format_fixed(value, 7); }
inline std::string coord6(double value) { return format_fixed(value, 6); }
inline std::string coord1(double value) { return format_fixed(value, 1); }

/// FNV-1a 64-bit hash. Used for cache keys and seed derivation; stability of
/// the constant matters because cache files persist across versions.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

/// Uniform double in [0, 1) with 53 bits of entropy. Hand-rolled instead of
/// std::uniform_real_distribution because libstdc++ does not guarantee the
/// same sequence across versions and reruns must be byte-identical.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [lo, hi] via rejection-free modulo on a 64-bit draw.
/// Bias is negligible for the small ranges used here and the sequence is
/// stable, which std::uniform_int_distribution does not promise.
inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(rng() % span);
}

// ---------------------------------------------------------------------------
// Calendar / timestamps
// ---------------------------------------------------------------------------

/// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
/// days_from_civil, public domain construction).
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

/// Parses an ISO-8601 timestamp ("2024-03-01T10:15:00Z", optional fractional
/// seconds, optional +hh:mm offset) to Unix seconds. Returns false on any
/// malformed input rather than throwing; GPX files in the wild are messy.
inline bool parse_iso8601(std::string_view s, std::int64_t& out) {
  int y, mo, d, h, mi;
  double sec;
  int consumed = 0;
  std::string buf(s);
  if (std::sscanf(buf.c_str(), "%d-%d-%dT%d:%d:%lf%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6)
    return false;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
      sec < 0.0 || sec >= 61.0)
    return false;
  std::int64_t offset = 0;
  std::string_view tail = s.substr(static_cast<std::size_t>(consumed));
  if (!tail.empty() && tail != "Z") {
    int oh, om;
    char sign;
    if (std::sscanf(std::string(tail).c_str(), "%c%d:%d", &sign, &oh, &om) != 3) return false;
    if (sign != '+' && sign != '-') return false;
    offset = (sign == '-' ? -1 : 1) * (oh * 3600 + om * 60);
  }
  out = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
        h * 3600 + mi * 60 + static_cast<std::int64_t>(sec) - offset;
  return true;
}

/// "YYYY-MM-DD" for a Unix timestamp (UTC).
inline std::string civil_date(std::int64_t unix_seconds) {
  std::int64_t z = unix_seconds / 86400;
  if (unix_seconds % 86400 < 0) --z;
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u",
                static_cast<long long>(y + (m <= 2)), m, d);
  return std::string(buf);
}

/// "YYYY-MM-DDTHH:MM:SSZ" for a Unix timestamp (UTC).
inline std::string format_iso8601(std::int64_t unix_seconds) {
  std::int64_t days = unix_seconds / 86400;
  std::int64_t rem = unix_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%sT%02lld:%02lld:%02lldZ", civil_date(days * 86400).c_str(),
                static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                static_cast<long long>(rem % 60));
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Small string / file helpers
// ---------------------------------------------------------------------------

inline std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::string to_upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.emplace_back(text.substr(pos));
      break;
    }
    std::string line(text.substr(pos, nl - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
    pos = nl + 1;
  }
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

/// Whitespace-delimited token count; the proxy used for prompt size budgets.
inline std::size_t count_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_tok = false;
  for (char c : text) {
    const bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!ws && !in_tok) ++n;
    in_tok = !ws;
  }
  return n;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open file for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("short write: " + path);
}

inline bool file_exists(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return static_cast<bool>(in);
}

}  // namespace trajrec
