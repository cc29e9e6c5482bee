#pragma once

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "coinf/csv.hpp"
#include "coinf/error.hpp"
#include "coinf/util.hpp"

namespace coinf {

enum class Device { wearable, handheld };

inline std::string device_name(Device d) {
  return d == Device::wearable ? "wearable" : "handheld";
}

inline Device device_from_string(const std::string& s) {
  if (s == "wearable") return Device::wearable;
  if (s == "handheld") return Device::handheld;
  throw ParseError("unknown device '" + s + "', expected wearable or handheld");
}

// One sampled line of device state. signal_change marks moments where the
// radio environment shifted enough to warrant an immediate re-probe.
struct DeviceStatusRecord {
  uint64_t timestamp_ms = 0;
  Device device = Device::wearable;
  std::string cpu_governor;  // interactive | powersave
  double cpu_load_pct = 0.0;
  double gpu_load_pct = 0.0;
  double battery_pct = 100.0;
  bool charging = false;
  bool paired = true;
  bool signal_change = false;
  bool operator==(const DeviceStatusRecord&) const = default;
};

inline const std::vector<std::string>& trace_csv_header() {
  static const std::vector<std::string> h = {
      "timestamp_ms", "device",  "cpu_governor", "cpu_load_pct", "gpu_load_pct",
      "battery_pct",  "charging", "paired",      "signal_change"};
  return h;
}

namespace detail {

inline bool parse_bool_cell(const std::string& s, size_t rowno) {
  if (s == "0" || s == "false") return false;
  if (s == "1" || s == "true") return true;
  throw ParseError("row " + std::to_string(rowno) + ": expected boolean 0/1, got '" + s + "'");
}

inline double parse_pct_cell(const std::string& s, const std::string& col, size_t rowno) {
  double v = 0;
  if (!parse_double(s, v) || !(v >= 0.0 && v <= 100.0))
    throw ParseError("row " + std::to_string(rowno) + ": " + col +
                     " must be a percentage in [0, 100], got '" + s + "'");
  return v;
}

}  // namespace detail

inline std::vector<DeviceStatusRecord> parse_trace(const std::string& text) {
  CsvTable t = parse_csv(text, trace_csv_header());

  std::vector<DeviceStatusRecord> out;
  uint64_t last_ts[2] = {0, 0};
  bool seen[2] = {false, false};
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    size_t rowno = i + 2;  // header is line 1
    DeviceStatusRecord r;
    if (!parse_u64(row[0], r.timestamp_ms))
      throw ParseError("row " + std::to_string(rowno) + ": bad timestamp_ms '" + row[0] + "'");
    r.device = device_from_string(row[1]);
    if (row[2] != "interactive" && row[2] != "powersave")
      throw ParseError("row " + std::to_string(rowno) + ": unknown cpu_governor '" + row[2] +
                       "'");
    r.cpu_governor = row[2];
    r.cpu_load_pct = detail::parse_pct_cell(row[3], "cpu_load_pct", rowno);
    r.gpu_load_pct = detail::parse_pct_cell(row[4], "gpu_load_pct", rowno);
    r.battery_pct = detail::parse_pct_cell(row[5], "battery_pct", rowno);
    r.charging = detail::parse_bool_cell(row[6], rowno);
    r.paired = detail::parse_bool_cell(row[7], rowno);
    r.signal_change = detail::parse_bool_cell(row[8], rowno);

    size_t di = r.device == Device::wearable ? 0 : 1;
    if (seen[di] && r.timestamp_ms < last_ts[di])
      throw ValidationError("trace timestamps must be non-decreasing per device (row " +
                            std::to_string(rowno) + ")");
    last_ts[di] = r.timestamp_ms;
    seen[di] = true;
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string trace_to_csv(const std::vector<DeviceStatusRecord>& trace) {
  CsvTable t;
  t.header = trace_csv_header();
  for (const auto& r : trace) {
    t.rows.push_back({std::to_string(r.timestamp_ms), device_name(r.device), r.cpu_governor,
                      format_double(r.cpu_load_pct), format_double(r.gpu_load_pct),
                      format_double(r.battery_pct), r.charging ? "1" : "0",
                      r.paired ? "1" : "0", r.signal_change ? "1" : "0"});
  }
  return emit_csv(t);
}

// Latest record for the device at or before t_ms; clamps to the device's
// first record when t_ms precedes it.
inline const DeviceStatusRecord& status_at(const std::vector<DeviceStatusRecord>& trace,
                                           uint64_t t_ms, Device device) {
  const DeviceStatusRecord* best = nullptr;
  const DeviceStatusRecord* first = nullptr;
  for (const auto& r : trace) {
    if (r.device != device) continue;
    if (!first) first = &r;
    if (r.timestamp_ms <= t_ms) best = &r;
  }
  if (!first)
    throw Error("no_status", "trace has no records for device " + device_name(device));
  return best ? *best : *first;
}

// ---- bandwidth probing ----

struct ChannelModel {
  double true_bandwidth_bps = 0.0;  // bytes per second
  double jitter_sigma = 0.0;        // lognormal sigma, 0 disables jitter
  uint64_t seed = 0;
};

struct BandwidthEstimate {
  double bps = 0.0;
  uint64_t measured_at_ms = 0;
  uint64_t probe_bytes = 0;
  bool operator==(const BandwidthEstimate&) const = default;
};

// Simulated probe: push probe_bytes through the jittered channel, time it,
// divide. Requires both devices to report paired at t_ms.
inline BandwidthEstimate probe_bandwidth(const ChannelModel& channel,
                                         const std::vector<DeviceStatusRecord>& trace,
                                         uint64_t probe_bytes, uint64_t t_ms) {
  if (!(channel.true_bandwidth_bps > 0) || !std::isfinite(channel.true_bandwidth_bps))
    throw ValidationError("channel bandwidth must be positive and finite");
  if (!(channel.jitter_sigma >= 0) || !std::isfinite(channel.jitter_sigma))
    throw ValidationError("jitter sigma must be non-negative and finite");
  if (probe_bytes == 0) throw ValidationError("probe_bytes must be positive");
  if (!status_at(trace, t_ms, Device::wearable).paired ||
      !status_at(trace, t_ms, Device::handheld).paired)
    throw Error("unpaired", "devices are not paired at t=" + std::to_string(t_ms) + "ms");

  double observed = channel.true_bandwidth_bps;
  if (channel.jitter_sigma > 0) {
    Rng rng(mix64(channel.seed, t_ms));
    observed *= std::exp(channel.jitter_sigma * rng.normal());
  }
  double transfer_s = static_cast<double>(probe_bytes) / observed;
  return {static_cast<double>(probe_bytes) / transfer_s, t_ms, probe_bytes};
}

// Next time a probe should fire: the periodic schedule, pulled earlier by
// the first signal_change event after the last probe.
inline uint64_t next_probe_due(const std::vector<DeviceStatusRecord>& trace,
                               uint64_t last_probe_ms, uint64_t interval_s = 300) {
  uint64_t due = last_probe_ms + interval_s * 1000;
  for (const auto& r : trace) {
    if (r.signal_change && r.timestamp_ms > last_probe_ms) due = std::min(due, r.timestamp_ms);
  }
  return due;
}

// Latest-estimate holder shared between a prober thread and planners.
class EstimateBoard {
 public:
  void publish(const BandwidthEstimate& e) {
    std::unique_lock lock(mu_);
    latest_ = e;
  }
  std::optional<BandwidthEstimate> latest() const {
    std::shared_lock lock(mu_);
    return latest_;
  }

 private:
  mutable std::shared_mutex mu_;
  std::optional<BandwidthEstimate> latest_;
};

// ---- energy weight rules ----

struct Weights {
  double w_w = 0.5;
  double w_p = 0.5;
  bool degenerate = false;  // both weights zero; selection will rest on ties
};

struct WeightRule {
  enum class Kind { manual, r1, r2 };
  Kind kind = Kind::manual;
  double manual_w_w = 0.5;
  double manual_w_p = 0.5;
};

inline WeightRule::Kind weight_rule_kind(const std::string& s) {
  if (s == "manual") return WeightRule::Kind::manual;
  if (s == "r1") return WeightRule::Kind::r1;
  if (s == "r2") return WeightRule::Kind::r2;
  throw ParseError("unknown weight rule '" + s + "', expected manual, r1, or r2");
}

// R1 weighs each device by how empty its battery is. R2 additionally zeroes
// the handheld's weight while it is charging.
inline Weights resolve_weights(const WeightRule& rule, const DeviceStatusRecord& wear,
                               const DeviceStatusRecord& handheld) {
  auto drained = [](double battery_pct) {
    return std::clamp((100.0 - battery_pct) / 100.0, 0.0, 1.0);
  };
  Weights w;
  switch (rule.kind) {
    case WeightRule::Kind::manual:
      if (!(rule.manual_w_w >= 0 && rule.manual_w_w <= 1) ||
          !(rule.manual_w_p >= 0 && rule.manual_w_p <= 1))
        throw ValidationError("manual weights must lie in [0, 1]");
      w.w_w = rule.manual_w_w;
      w.w_p = rule.manual_w_p;
      break;
    case WeightRule::Kind::r1:
      w.w_w = drained(wear.battery_pct);
      w.w_p = drained(handheld.battery_pct);
      break;
    case WeightRule::Kind::r2:
      if (handheld.charging) {
        w.w_w = 1.0;
        w.w_p = 0.0;
      } else {
        w.w_w = drained(wear.battery_pct);
        w.w_p = drained(handheld.battery_pct);
      }
      break;
  }
  w.degenerate = w.w_w == 0.0 && w.w_p == 0.0;
  return w;
}

}  // namespace coinf
