#pragma once

// Sensor CSV ingestion and preparation. Timestamps are stored as local
// wall-clock seconds since 1970-01-01 00:00 (a fixed UTC offset, no DST), so
// the time of day is t mod 86400.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "co2grey/error.hpp"
#include "co2grey/random.hpp"
#include "co2grey/series.hpp"

namespace co2grey {

inline constexpr double kSecondsPerDay = 86400.0;

// ---- small text helpers

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<int> parse_digits(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) return std::nullopt;
  return v;
}

}  // namespace detail

// ---- time zone and calendar

// Fixed offset from UTC. Accepts "UTC", "Z", "+HH:MM", "-HH:MM", "UTC+HH:MM".
struct TimeZone {
  int offset_minutes = 0;

  static TimeZone parse(std::string_view s) {
    s = detail::trim(s);
    if (s == "UTC" || s == "Z" || s == "GMT") return {0};
    if (s.starts_with("UTC")) s.remove_prefix(3);
    if (s.size() == 6 && (s[0] == '+' || s[0] == '-') && s[3] == ':') {
      const auto h = detail::parse_digits(s.substr(1, 2));
      const auto m = detail::parse_digits(s.substr(4, 2));
      if (h && m && *h <= 14 && *m < 60) return {(s[0] == '-' ? -1 : 1) * (*h * 60 + *m)};
    }
    throw InputError("timezone '" + std::string(s) + "' not understood; use UTC or +HH:MM/-HH:MM");
  }

  std::string to_string() const {
    if (offset_minutes == 0) return "UTC";
    const int a = std::abs(offset_minutes);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%02d:%02d", offset_minutes < 0 ? '-' : '+', a / 60, a % 60);
    return buf;
  }
};

inline double days_from_civil(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) return std::nan("");
  return static_cast<double>(sys_days{ymd}.time_since_epoch().count());
}

inline long long day_number(double t_seconds) {
  return static_cast<long long>(std::floor(t_seconds / kSecondsPerDay));
}

inline double time_of_day(double t_seconds) {
  return t_seconds - static_cast<double>(day_number(t_seconds)) * kSecondsPerDay;
}

inline std::chrono::year_month_day civil_date(double t_seconds) {
  using namespace std::chrono;
  return year_month_day{sys_days{days{day_number(t_seconds)}}};
}

inline std::string date_string(double t_seconds) {
  const auto ymd = civil_date(t_seconds);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

// "HH:MM" or "HH:MM:SS" to seconds after midnight.
inline double parse_time_of_day(std::string_view s) {
  s = detail::trim(s);
  if ((s.size() == 5 || s.size() == 8) && s[2] == ':' && (s.size() == 5 || s[5] == ':')) {
    const auto h = detail::parse_digits(s.substr(0, 2));
    const auto m = detail::parse_digits(s.substr(3, 2));
    const auto sec = s.size() == 8 ? detail::parse_digits(s.substr(6, 2)) : std::optional<int>(0);
    if (h && m && sec && *h < 24 && *m < 60 && *sec < 60) return *h * 3600.0 + *m * 60.0 + *sec;
  }
  throw InputError("time of day '" + std::string(s) + "' not understood; use HH:MM");
}

// "YYYY-MM-DD" to local wall-clock seconds at midnight.
inline double parse_date(std::string_view s) {
  s = detail::trim(s);
  if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
    const auto y = detail::parse_digits(s.substr(0, 4));
    const auto m = detail::parse_digits(s.substr(5, 2));
    const auto d = detail::parse_digits(s.substr(8, 2));
    if (y && m && d) {
      const double days = days_from_civil(*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d));
      if (std::isfinite(days)) return days * kSecondsPerDay;
    }
  }
  throw InputError("date '" + std::string(s) + "' not understood; use YYYY-MM-DD");
}

// ISO-8601 date-time ("T" or space separator, optional fractional seconds,
// optional "Z" or +HH:MM offset) or a plain number of seconds. Strings without
// an offset are taken as local wall-clock already; with an offset they are
// converted to the configured zone.
inline std::optional<double> parse_timestamp(std::string_view s, const TimeZone& tz) {
  s = detail::trim(s);
  if (auto v = detail::parse_double(s)) return v;
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':')
    return std::nullopt;
  double midnight = 0.0;
  try {
    midnight = parse_date(s.substr(0, 10));
  } catch (const InputError&) {
    return std::nullopt;
  }
  const auto h = detail::parse_digits(s.substr(11, 2));
  const auto m = detail::parse_digits(s.substr(14, 2));
  if (!h || !m || *h > 23 || *m > 59) return std::nullopt;
  double seconds = *h * 3600.0 + *m * 60.0;
  std::string_view rest = s.substr(16);
  if (!rest.empty() && rest[0] == ':') {
    std::size_t n = 1;
    while (n < rest.size() && (std::isdigit(static_cast<unsigned char>(rest[n])) || rest[n] == '.')) ++n;
    const auto sec = detail::parse_double(rest.substr(1, n - 1));
    if (!sec || *sec < 0.0 || *sec >= 61.0) return std::nullopt;
    seconds += *sec;
    rest.remove_prefix(n);
  }
  double t = midnight + seconds;
  if (rest.empty()) return t;
  int offset = 0;
  if (rest == "Z") {
    offset = 0;
  } else {
    try {
      offset = TimeZone::parse(rest).offset_minutes;
    } catch (const InputError&) {
      return std::nullopt;
    }
  }
  return t - offset * 60.0 + tz.offset_minutes * 60.0;
}

enum class Season { spring, summer, autumn, winter };

inline Season season_of_month(unsigned month) {
  if (month >= 3 && month <= 5) return Season::spring;
  if (month >= 6 && month <= 8) return Season::summer;
  if (month >= 9 && month <= 11) return Season::autumn;
  return Season::winter;
}

inline Season season_of(double t_seconds) {
  return season_of_month(static_cast<unsigned>(civil_date(t_seconds).month()));
}

inline std::string to_string(Season s) {
  switch (s) {
    case Season::spring: return "spring";
    case Season::summer: return "summer";
    case Season::autumn: return "autumn";
    case Season::winter: return "winter";
  }
  return "?";
}

inline Season season_from_string(std::string_view s) {
  std::string lower(s);
  for (char& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  for (Season v : {Season::spring, Season::summer, Season::autumn, Season::winter})
    if (to_string(v) == lower) return v;
  throw InputError("unknown season '" + std::string(s) + "' (spring, summer, autumn, winter)");
}

// ---- CSV parsing

struct ColumnMap {
  std::string timestamp = "timestamp";
  std::string co2 = "co2_ppm";
  std::string temp = "temp_c";
  std::string rh = "rh_pct";
};

struct SensorMetadata {
  std::string source;
  std::string sensor_model;
  std::optional<double> accuracy_ppm;
  std::size_t rows_read = 0;
  std::size_t rows_bad = 0;
  std::vector<std::string> warnings;
};

struct SensorFile {
  Co2Series series;
  std::vector<double> temp_c;  // NaN where absent
  std::vector<double> rh_pct;
  SensorMetadata meta;
};

inline constexpr double kMaxBadRowFraction = 0.05;

// Header row required. Lines "# key: value" before the header carry sensor
// metadata (sensor_model, accuracy_ppm). The timestamp column falls back to
// "t_seconds" so serialized series parse back unchanged.
inline SensorFile parse_csv(std::istream& in, const ColumnMap& columns = {}, const TimeZone& tz = {},
                            std::string source = "<stream>") {
  SensorFile out;
  out.meta.source = source;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto body = detail::trim(t.substr(1));
      const auto colon = body.find(':');
      if (colon != std::string_view::npos) {
        const auto key = detail::trim(body.substr(0, colon));
        const auto value = detail::trim(body.substr(colon + 1));
        if (key == "sensor_model") out.meta.sensor_model = std::string(value);
        if (key == "accuracy_ppm") out.meta.accuracy_ppm = detail::parse_double(value);
      }
      continue;
    }
    for (auto f : detail::split_csv(t)) header.emplace_back(f);
    break;
  }
  if (header.empty()) throw InputError(source + ": missing header row");
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  auto ts_col = find(columns.timestamp);
  if (!ts_col) ts_col = find("t_seconds");
  const auto co2_col = find(columns.co2);
  if (!ts_col || !co2_col)
    throw InputError(source + ": header must contain '" + columns.timestamp + "' and '" + columns.co2 + "' columns");
  const auto temp_col = find(columns.temp);
  const auto rh_col = find(columns.rh);

  struct Row {
    double t, c, temp, rh;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::vector<std::string> bad;
  std::size_t data_rows = 0;
  auto optional_field = [](const std::vector<std::string_view>& f, std::optional<std::size_t> col) {
    if (!col || *col >= f.size()) return std::nan("");
    return detail::parse_double(f[*col]).value_or(std::nan(""));
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    ++data_rows;
    const auto f = detail::split_csv(t);
    const std::string where = "line " + std::to_string(line_no);
    if (f.size() != header.size()) {
      bad.push_back(where + ": expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
      continue;
    }
    const auto ts = parse_timestamp(f[*ts_col], tz);
    if (!ts) {
      bad.push_back(where + ": unparseable timestamp '" + std::string(f[*ts_col]) + "'");
      continue;
    }
    const auto c = detail::parse_double(f[*co2_col]);
    if (!c) {
      bad.push_back(where + ": non-numeric CO2 '" + std::string(f[*co2_col]) + "'");
      continue;
    }
    if (*c < 0.0) {
      bad.push_back(where + ": negative CO2 " + std::string(f[*co2_col]));
      continue;
    }
    rows.push_back({*ts, *c, optional_field(f, temp_col), optional_field(f, rh_col), line_no});
  }
  out.meta.rows_read = data_rows;
  out.meta.rows_bad = bad.size();
  if (data_rows > 0 && static_cast<double>(bad.size()) > kMaxBadRowFraction * static_cast<double>(data_rows)) {
    std::string msg = source + ": " + std::to_string(bad.size()) + " of " + std::to_string(data_rows) +
                      " rows unusable (limit 5%)";
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 10); ++i) msg += "\n  " + bad[i];
    if (bad.size() > 10) msg += "\n  ...";
    throw InputError(msg);
  }
  for (auto& b : bad) out.meta.warnings.push_back(source + ": skipped " + b);
  if (rows.empty()) throw InputError(source + ": no data rows");

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
  std::vector<double> ts, cs;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i + 1;
    while (j < rows.size() && rows[j].t == rows[i].t) ++j;
    double c = 0.0, temp = 0.0, rh = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      c += rows[k].c;
      temp += rows[k].temp;
      rh += rows[k].rh;
    }
    const double n = static_cast<double>(j - i);
    if (j - i > 1) {
      std::string lines;
      for (std::size_t k = i; k < j; ++k) lines += (k > i ? "," : "") + std::to_string(rows[k].line);
      out.meta.warnings.push_back(source + ": duplicate timestamp on lines " + lines + " collapsed to mean");
    }
    ts.push_back(rows[i].t);
    cs.push_back(c / n);
    out.temp_c.push_back(temp / n);
    out.rh_pct.push_back(rh / n);
    i = j;
  }
  out.series = Co2Series(std::move(ts), std::move(cs));
  return out;
}

inline SensorFile parse_csv(const std::filesystem::path& path, const ColumnMap& columns = {},
                            const TimeZone& tz = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return parse_csv(in, columns, tz, path.string());
}

// Every *.csv in a directory, in filename order.
inline std::vector<SensorFile> parse_directory(const std::filesystem::path& dir, const ColumnMap& columns = {},
                                               const TimeZone& tz = {}) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw InputError("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  if (files.empty()) throw InputError("no .csv files in '" + dir.string() + "'");
  std::sort(files.begin(), files.end());
  std::vector<SensorFile> out(files.size());
  parallel_for(files.size(), [&](std::size_t i) { out[i] = parse_csv(files[i], columns, tz); });
  return out;
}

// ---- resampling

// Linear interpolation onto t0 + k*dt within each gap-free run. Runs yielding
// fewer than 2 grid points are dropped.
inline std::vector<Co2Series> resample(const Co2Series& s, double dt_seconds, double max_gap_seconds) {
  if (!(dt_seconds > 0.0)) throw InputError("resample: dt_seconds must be > 0");
  if (!(max_gap_seconds > 0.0)) throw InputError("resample: max_gap_seconds must be > 0");
  std::vector<Co2Series> out;
  std::size_t first = 0;
  while (first < s.size()) {
    std::size_t last = first + 1;
    while (last < s.size() && s.time(last) - s.time(last - 1) <= max_gap_seconds) ++last;
    const double t0 = s.time(first);
    const double span = s.time(last - 1) - t0;
    const auto n = static_cast<std::size_t>(std::floor(span / dt_seconds * (1.0 + 1e-12) + 1e-9)) + 1;
    if (n >= 2) {
      std::vector<double> ts(n), cs(n);
      std::size_t j = first;
      for (std::size_t k = 0; k < n; ++k) {
        const double t = t0 + static_cast<double>(k) * dt_seconds;
        while (j + 1 < last && s.time(j + 1) <= t) ++j;
        ts[k] = t;
        const double tol = 1e-9 * dt_seconds;
        if (std::abs(t - s.time(j)) <= tol || j + 1 >= last) {
          cs[k] = s.value(j);
        } else if (std::abs(s.time(j + 1) - t) <= tol) {
          cs[k] = s.value(j + 1);
        } else {
          const double w = (t - s.time(j)) / (s.time(j + 1) - s.time(j));
          cs[k] = s.value(j) + w * (s.value(j + 1) - s.value(j));
        }
      }
      out.emplace_back(std::move(ts), std::move(cs), dt_seconds);
    }
    first = last;
  }
  if (out.empty()) throw InputError("resample: no gap-free run spans two grid points");
  return out;
}

// ---- segmentation

struct SegmentSettings {
  std::optional<double> school_start_s;  // required; no default
  double rise_threshold_ppm_per_h = 100.0;
  double smoothing_window_s = 600.0;
  std::optional<double> prominence_ppm;  // defaults to 2x sensor accuracy, else 100
  double decline_s = 900.0;
  std::size_t min_samples = 10;
};

struct Segment {
  enum class Reason { class_start_to_first_peak, manual, full_day };

  std::string day;
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  Reason reason = Reason::class_start_to_first_peak;

  Co2Series slice(const Co2Series& s) const { return s.slice(start, end + 1); }
};

inline std::string to_string(Segment::Reason r) {
  switch (r) {
    case Segment::Reason::class_start_to_first_peak: return "class_start_to_first_peak";
    case Segment::Reason::manual: return "manual";
    case Segment::Reason::full_day: return "full_day";
  }
  return "?";
}

namespace detail {

// Centered moving average over |t_j - t_i| <= w/2, plus the slope (ppm/h)
// across the same window.
inline std::pair<std::vector<double>, std::vector<double>> smooth(const Co2Series& s, double window_s) {
  const std::size_t n = s.size();
  std::vector<double> avg(n), slope(n, 0.0);
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + s.value(i);
  std::size_t lo = 0, hi = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges(n);
  for (std::size_t i = 0; i < n; ++i) {
    while (s.time(i) - s.time(lo) > 0.5 * window_s) ++lo;
    if (hi < i) hi = i;
    while (hi + 1 < n && s.time(hi + 1) - s.time(i) <= 0.5 * window_s) ++hi;
    avg[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi + 1 - lo);
    edges[i] = {lo, hi};
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto [a, b] = edges[i];
    if (b > a) slope[i] = (avg[b] - avg[a]) / seconds_to_hours(s.time(b) - s.time(a));
  }
  return {std::move(avg), std::move(slope)};
}

}  // namespace detail

// One segment per calendar day: from the first sample at or after school
// start whose smoothed slope exceeds the rise threshold, to the first smoothed
// local maximum with enough prominence that is followed by a sustained decline.
inline std::vector<Segment> segment_occupied(const Co2Series& s, const SegmentSettings& cfg,
                                             std::optional<double> accuracy_ppm = std::nullopt) {
  if (!cfg.school_start_s) throw InputError("segment_occupied: school_start must be configured");
  if (!(cfg.smoothing_window_s > 0.0) || !(cfg.decline_s > 0.0))
    throw InputError("segment_occupied: smoothing window and decline duration must be > 0");
  const double prominence = cfg.prominence_ppm.value_or(accuracy_ppm ? 2.0 * *accuracy_ppm : 100.0);
  std::vector<Segment> out;
  if (s.size() < 3) return out;
  const auto [avg, slope] = detail::smooth(s, cfg.smoothing_window_s);

  std::size_t day_begin = 0;
  while (day_begin < s.size()) {
    const long long day = day_number(s.time(day_begin));
    std::size_t day_end = day_begin;
    while (day_end < s.size() && day_number(s.time(day_end)) == day) ++day_end;

    std::optional<std::size_t> start;
    for (std::size_t i = day_begin; i < day_end; ++i) {
      if (time_of_day(s.time(i)) >= *cfg.school_start_s && slope[i] > cfg.rise_threshold_ppm_per_h) {
        start = i;
        break;
      }
    }
    if (start) {
      double running_min = avg[*start];
      for (std::size_t k = *start + 1; k + 1 < day_end; ++k) {
        running_min = std::min(running_min, avg[k]);
        if (!(avg[k] >= avg[k - 1] && avg[k] > avg[k + 1])) continue;
        if (avg[k] - running_min < prominence) continue;
        if (s.time(day_end - 1) - s.time(k) < cfg.decline_s) break;
        bool sustained = true;
        for (std::size_t j = k + 1; j < day_end && s.time(j) - s.time(k) <= cfg.decline_s; ++j)
          if (!(avg[j] < avg[k])) {
            sustained = false;
            break;
          }
        if (!sustained) continue;
        if (k - *start + 1 >= cfg.min_samples)
          out.push_back({date_string(s.time(*start)), *start, k, Segment::Reason::class_start_to_first_peak});
        break;
      }
    }
    day_begin = day_end;
  }
  return out;
}

// ---- school-hours distribution

struct DateRange {
  double first_day_s = 0.0;  // inclusive local midnights
  double last_day_s = 0.0;
};

struct CdfFilter {
  double start_s = 8.0 * 3600.0;  // time-of-day window [start, end)
  double end_s = 16.0 * 3600.0;
  std::vector<Season> seasons;  // empty: all
  std::vector<DateRange> dates;  // empty: all

  bool accepts(double t) const {
    const double tod = time_of_day(t);
    if (tod < start_s || tod >= end_s) return false;
    if (!seasons.empty() && std::find(seasons.begin(), seasons.end(), season_of(t)) == seasons.end()) return false;
    if (!dates.empty()) {
      const double midnight = static_cast<double>(day_number(t)) * kSecondsPerDay;
      bool any = false;
      for (const auto& r : dates) any = any || (midnight >= r.first_day_s && midnight <= r.last_day_s);
      if (!any) return false;
    }
    return true;
  }

  std::string describe() const {
    auto hhmm = [](double s) {
      char buf[32];
      const int m = static_cast<int>(std::lround(s / 60.0));
      std::snprintf(buf, sizeof buf, "%02d:%02d", m / 60, m % 60);
      return std::string(buf);
    };
    std::string d = "hours " + hhmm(start_s) + "-" + hhmm(end_s);
    if (!seasons.empty()) {
      d += ", seasons";
      for (auto s : seasons) d += " " + to_string(s);
    }
    for (const auto& r : dates) d += ", dates " + date_string(r.first_day_s) + ".." + date_string(r.last_day_s);
    return d;
  }
};

struct CdfTable {
  std::vector<double> co2_ppm;  // distinct sorted values
  std::vector<double> cum_fraction;
  std::size_t n_samples = 0;
  std::optional<double> threshold_ppm;
  std::optional<double> fraction_at_or_below;

  double fraction_at(double x) const {
    const auto it = std::upper_bound(co2_ppm.begin(), co2_ppm.end(), x);
    if (it == co2_ppm.begin()) return 0.0;
    return cum_fraction[static_cast<std::size_t>(it - co2_ppm.begin()) - 1];
  }
};

inline CdfTable school_hours_cdf(const std::vector<Co2Series>& series, const CdfFilter& filter,
                                 std::optional<double> threshold_ppm = std::nullopt) {
  std::vector<double> v;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.size(); ++i)
      if (filter.accepts(s.time(i))) v.push_back(s.value(i));
  if (v.empty()) throw InputError("school_hours_cdf: no samples match filter (" + filter.describe() + ")");
  std::sort(v.begin(), v.end());
  CdfTable out;
  out.n_samples = v.size();
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    out.co2_ppm.push_back(v[i]);
    out.cum_fraction.push_back(i + 1 == v.size() ? 1.0 : static_cast<double>(i + 1) / n);
  }
  if (threshold_ppm) {
    out.threshold_ppm = threshold_ppm;
    out.fraction_at_or_below = out.fraction_at(*threshold_ppm);
  }
  return out;
}

inline CdfTable school_hours_cdf(const Co2Series& series, const CdfFilter& filter,
                                 std::optional<double> threshold_ppm = std::nullopt) {
  return school_hours_cdf(std::vector<Co2Series>{series}, filter, threshold_ppm);
}

}  // namespace co2grey
