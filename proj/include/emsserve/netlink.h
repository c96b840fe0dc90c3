#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emsserve {

// Bits per second; nullopt means the link is down.
using Bandwidth = std::optional<double>;

struct BandwidthSample {
  double t = 0;  // seconds since episode start
  Bandwidth bw;

  bool operator==(const BandwidthSample&) const = default;
};

struct CrashWindow {
  double start = 0;  // inclusive
  double end = 0;    // exclusive

  bool contains(double t) const { return t >= start && t < end; }
  bool operator==(const CrashWindow&) const = default;
};

// Piecewise-constant bandwidth over time plus windows in which the edge is
// unreachable. Immutable after construction.
class LinkTrace {
 public:
  // Throws ConfigError unless samples are non-empty with strictly increasing
  // times and positive bandwidths, and crash windows are sorted, disjoint and
  // non-empty.
  LinkTrace(std::vector<BandwidthSample> samples, std::vector<CrashWindow> crashes = {});

  static LinkTrace constant(double bps, std::vector<CrashWindow> crashes = {});

  const std::vector<BandwidthSample>& samples() const { return samples_; }
  const std::vector<CrashWindow>& crash_windows() const { return crashes_; }
  double start_time() const { return samples_.front().t; }

  bool in_crash(double t) const;
  // Earliest time in [t0, t1) at which the link is down, if any.
  std::optional<double> first_down_in(double t0, double t1) const;
  // Same, counting only crash windows (edge failures, not link fades).
  std::optional<double> first_crash_in(double t0, double t1) const;

  bool operator==(const LinkTrace&) const = default;

 private:
  std::vector<BandwidthSample> samples_;
  std::vector<CrashWindow> crashes_;
};

// Throws BeforeTraceStart if t precedes the first sample.
Bandwidth bandwidth_at(const LinkTrace& trace, double t);

// (payload_bytes * 8) / bandwidth_at(t); 0 bytes -> 0; nullopt if down.
std::optional<double> transfer_time(const LinkTrace& trace, std::uint64_t payload_bytes,
                                    double t);

struct TransferEstimate {
  std::optional<double> seconds_per_byte;  // nullopt: Infeasible
  double estimated_at = 0;                 // probe time
  std::uint64_t payload_bytes = 0;         // probe size

  bool feasible() const { return seconds_per_byte.has_value(); }
  // Predicted transfer time for `bytes`; nullopt if infeasible.
  std::optional<double> predict(std::uint64_t bytes) const;
};

// Estimate from the most recent probe at or before t. Probes fire at
// 0, interval, 2*interval, ... so decisions between probes see stale data.
// Throws NoProbeYet for t < 0 and InvalidArgs for interval <= 0.
TransferEstimate heartbeat_estimate(const LinkTrace& trace, double t,
                                    double probe_interval = 1.0,
                                    std::uint64_t probe_bytes = 1024);

// Trace CSV: "t_seconds,bandwidth_bps" rows ("down" allowed as bandwidth),
// "#crash,start,end" directives, other '#' lines and an optional header ignored.
LinkTrace parse_trace_csv(std::string_view text);
LinkTrace load_trace_csv(const std::filesystem::path& path);
std::string trace_to_csv(const LinkTrace& trace);

// meters -> bandwidth, looked up by the largest bucket not exceeding the
// distance (the first bucket below its own distance).
class DistanceTable {
 public:
  struct Row {
    double meters = 0;
    double bps = 0;
  };
  explicit DistanceTable(std::vector<Row> rows);
  double bandwidth_for(double meters) const;
  const std::vector<Row>& rows() const { return rows_; }

 private:
  std::vector<Row> rows_;
};

DistanceTable parse_distance_csv(std::string_view text);
DistanceTable load_distance_csv(const std::filesystem::path& path);

struct Waypoint {
  double t = 0;
  double meters = 0;
};

// Samples a walk (distance linearly interpolated between waypoints) every
// `sample_dt` seconds from the first waypoint to the last and maps distance
// to bandwidth through `table`. Consecutive equal bandwidths are merged.
LinkTrace trace_from_walk(const DistanceTable& table, const std::vector<Waypoint>& walk,
                          double sample_dt = 1.0, std::vector<CrashWindow> crashes = {});

// Out to `max_meters` and back at constant speed over `duration` seconds.
std::vector<Waypoint> out_and_back_walk(double max_meters, double duration);

}  // namespace emsserve
