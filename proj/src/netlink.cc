#include "emsserve/netlink.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "emsserve/error.h"
#include "io_util.h"

namespace emsserve {

LinkTrace::LinkTrace(std::vector<BandwidthSample> samples, std::vector<CrashWindow> crashes)
    : samples_(std::move(samples)), crashes_(std::move(crashes)) {
  if (samples_.empty()) fail(ErrorKind::ConfigError, "link trace has no samples");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!std::isfinite(s.t)) fail(ErrorKind::ConfigError, "trace sample time not finite");
    if (i > 0 && !(s.t > samples_[i - 1].t))
      fail(ErrorKind::ConfigError, "trace sample times must be strictly increasing");
    if (s.bw && !(std::isfinite(*s.bw) && *s.bw > 0))
      fail(ErrorKind::ConfigError, "trace bandwidth must be positive");
  }
  for (std::size_t i = 0; i < crashes_.size(); ++i) {
    const auto& c = crashes_[i];
    if (!(c.end > c.start)) fail(ErrorKind::ConfigError, "crash window must have end > start");
    if (i > 0 && c.start < crashes_[i - 1].end)
      fail(ErrorKind::ConfigError, "crash windows must be sorted and disjoint");
  }
}

LinkTrace LinkTrace::constant(double bps, std::vector<CrashWindow> crashes) {
  return LinkTrace({{0.0, bps}}, std::move(crashes));
}

bool LinkTrace::in_crash(double t) const {
  return std::any_of(crashes_.begin(), crashes_.end(),
                     [t](const CrashWindow& c) { return c.contains(t); });
}

std::optional<double> LinkTrace::first_crash_in(double t0, double t1) const {
  for (const auto& c : crashes_) {
    if (c.end <= t0) continue;
    if (c.start >= t1) break;
    return std::max(c.start, t0);
  }
  return std::nullopt;
}

std::optional<double> LinkTrace::first_down_in(double t0, double t1) const {
  std::optional<double> first = first_crash_in(t0, t1);
  // Segment i covers [samples[i].t, samples[i+1].t).
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i].bw) continue;
    double seg_start = samples_[i].t;
    double seg_end = i + 1 < samples_.size() ? samples_[i + 1].t : INFINITY;
    if (seg_end <= t0 || seg_start >= t1) continue;
    double hit = std::max(seg_start, t0);
    if (!first || hit < *first) first = hit;
    break;
  }
  return first;
}

Bandwidth bandwidth_at(const LinkTrace& trace, double t) {
  if (t < trace.start_time())
    fail(ErrorKind::BeforeTraceStart, "t=" + detail::format_double(t) +
                                          " precedes trace start " +
                                          detail::format_double(trace.start_time()));
  if (trace.in_crash(t)) return std::nullopt;
  const auto& s = trace.samples();
  auto it = std::upper_bound(s.begin(), s.end(), t,
                             [](double v, const BandwidthSample& b) { return v < b.t; });
  return std::prev(it)->bw;
}

std::optional<double> transfer_time(const LinkTrace& trace, std::uint64_t payload_bytes,
                                    double t) {
  Bandwidth bw = bandwidth_at(trace, t);
  if (!bw) return std::nullopt;
  if (payload_bytes == 0) return 0.0;
  return static_cast<double>(payload_bytes) * 8.0 / *bw;
}

std::optional<double> TransferEstimate::predict(std::uint64_t bytes) const {
  if (!seconds_per_byte) return std::nullopt;
  return *seconds_per_byte * static_cast<double>(bytes);
}

TransferEstimate heartbeat_estimate(const LinkTrace& trace, double t, double probe_interval,
                                    std::uint64_t probe_bytes) {
  if (!(probe_interval > 0)) fail(ErrorKind::InvalidArgs, "probe interval must be positive");
  if (t < 0) fail(ErrorKind::NoProbeYet, "no probe before t=0");
  double k = std::floor(t / probe_interval);
  double probe_t = k * probe_interval;
  if (probe_t > t) probe_t = (k - 1) * probe_interval;

  TransferEstimate est;
  est.estimated_at = probe_t;
  est.payload_bytes = probe_bytes;
  if (probe_t < trace.start_time()) return est;
  if (Bandwidth bw = bandwidth_at(trace, probe_t)) est.seconds_per_byte = 8.0 / *bw;
  return est;
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto comma = line.find(',', pos);
    out.push_back(detail::trim(line.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    fn(detail::trim(line), line_no);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

double require_number(std::string_view field, std::size_t line_no, const char* what) {
  double v = 0;
  if (!detail::parse_double(field, v))
    fail(ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": bad " + what + " '" +
                                     std::string(field) + "'");
  return v;
}

}  // namespace

LinkTrace parse_trace_csv(std::string_view text) {
  std::vector<BandwidthSample> samples;
  std::vector<CrashWindow> crashes;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line.empty()) return;
    if (line.front() == '#') {
      auto f = split_csv(line);
      if (f[0] == "#crash") {
        if (f.size() != 3)
          fail(ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": #crash,start,end");
        crashes.push_back({require_number(f[1], line_no, "crash start"),
                           require_number(f[2], line_no, "crash end")});
      }
      return;
    }
    auto f = split_csv(line);
    if (f.size() != 2)
      fail(ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": expected 2 fields");
    if (f[0] == "t_seconds") return;  // header
    BandwidthSample s;
    s.t = require_number(f[0], line_no, "time");
    if (f[1] != "down") s.bw = require_number(f[1], line_no, "bandwidth");
    samples.push_back(s);
  });
  std::sort(crashes.begin(), crashes.end(),
            [](const CrashWindow& a, const CrashWindow& b) { return a.start < b.start; });
  return LinkTrace(std::move(samples), std::move(crashes));
}

LinkTrace load_trace_csv(const std::filesystem::path& path) {
  return parse_trace_csv(detail::read_file(path));
}

std::string trace_to_csv(const LinkTrace& trace) {
  std::ostringstream out;
  out << "t_seconds,bandwidth_bps\n";
  for (const auto& s : trace.samples())
    out << detail::format_double(s.t) << ',' << (s.bw ? detail::format_double(*s.bw) : "down")
        << '\n';
  for (const auto& c : trace.crash_windows())
    out << "#crash," << detail::format_double(c.start) << ',' << detail::format_double(c.end)
        << '\n';
  return out.str();
}

DistanceTable::DistanceTable(std::vector<Row> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) fail(ErrorKind::ConfigError, "distance table is empty");
  std::sort(rows_.begin(), rows_.end(), [](const Row& a, const Row& b) { return a.meters < b.meters; });
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (!(rows_[i].bps > 0)) fail(ErrorKind::ConfigError, "distance table bandwidth must be positive");
    if (i > 0 && rows_[i].meters == rows_[i - 1].meters)
      fail(ErrorKind::ConfigError, "duplicate distance in table");
  }
}

double DistanceTable::bandwidth_for(double meters) const {
  auto it = std::upper_bound(rows_.begin(), rows_.end(), meters,
                             [](double v, const Row& r) { return v < r.meters; });
  if (it == rows_.begin()) return rows_.front().bps;
  return std::prev(it)->bps;
}

DistanceTable parse_distance_csv(std::string_view text) {
  std::vector<DistanceTable::Row> rows;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line.empty() || line.front() == '#') return;
    auto f = split_csv(line);
    if (f.size() != 2)
      fail(ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": expected 2 fields");
    if (f[0] == "meters") return;
    rows.push_back({require_number(f[0], line_no, "distance"),
                    require_number(f[1], line_no, "bandwidth")});
  });
  return DistanceTable(std::move(rows));
}

DistanceTable load_distance_csv(const std::filesystem::path& path) {
  return parse_distance_csv(detail::read_file(path));
}

LinkTrace trace_from_walk(const DistanceTable& table, const std::vector<Waypoint>& walk,
                          double sample_dt, std::vector<CrashWindow> crashes) {
  if (walk.empty()) fail(ErrorKind::ConfigError, "walk has no waypoints");
  if (!(sample_dt > 0)) fail(ErrorKind::InvalidArgs, "sample interval must be positive");
  for (std::size_t i = 1; i < walk.size(); ++i)
    if (!(walk[i].t > walk[i - 1].t))
      fail(ErrorKind::ConfigError, "walk waypoint times must increase");

  auto distance_at = [&](double t) {
    if (t <= walk.front().t) return walk.front().meters;
    for (std::size_t i = 1; i < walk.size(); ++i) {
      if (t <= walk[i].t) {
        double f = (t - walk[i - 1].t) / (walk[i].t - walk[i - 1].t);
        return walk[i - 1].meters + f * (walk[i].meters - walk[i - 1].meters);
      }
    }
    return walk.back().meters;
  };

  std::vector<BandwidthSample> samples;
  const double t0 = walk.front().t;
  const double t_end = walk.back().t;
  for (std::size_t k = 0;; ++k) {
    double t = t0 + static_cast<double>(k) * sample_dt;
    if (t > t_end) break;
    double bw = table.bandwidth_for(distance_at(t));
    if (samples.empty() || samples.back().bw != bw) samples.push_back({t, bw});
  }
  return LinkTrace(std::move(samples), std::move(crashes));
}

std::vector<Waypoint> out_and_back_walk(double max_meters, double duration) {
  if (!(duration > 0)) fail(ErrorKind::InvalidArgs, "walk duration must be positive");
  return {{0.0, 0.0}, {duration / 2, max_meters}, {duration, 0.0}};
}

}  // namespace emsserve
