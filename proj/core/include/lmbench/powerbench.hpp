#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "lmbench/meter.hpp"

namespace lmbench::power {

struct BenchConfig {
  std::size_t warmup_queries = 50;
  std::size_t measured_queries = 1;
  double idle_window = 10.0;     // seconds
  double energy_seconds = 5.0;   // minimum length of the metered run
  std::optional<std::size_t> query_slice;
  std::optional<double> idle_watts;  // known baseline; skips the idle phase

  void validate() const;
};

struct LatencyStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  double whole_run_ms = 0.0;  // wall time of the measured loop / queries
  std::size_t queries = 0;
};

struct EnergyStats {
  double mj_per_query = 0.0;
  double joules = 0.0;           // above idle, over the covered span
  double window_seconds = 0.0;   // wall span of the metered run
  double covered_seconds = 0.0;  // part of the window bracketed by samples
  std::size_t queries = 0;
  std::size_t samples = 0;       // samples inside the window
};

struct BenchReport {
  LatencyStats latency;
  std::optional<EnergyStats> energy;
  std::optional<double> idle_watts;
  std::size_t total_queries = 0;  // warmup + timed + metered
  double wall_time_s = 0.0;
};

/// Called with a running query index; the callee maps it onto its token stream.
using QueryFn = std::function<void(std::size_t)>;

/// Accumulates every sample a meter delivers so that idle and load phases can
/// share one stream.
class PowerTrace {
 public:
  explicit PowerTrace(MeterSource& meter) : meter_(meter) {}

  /// Polls the meter once. Throws if the meter breaks ordering or reports
  /// negative power.
  void pump();
  /// Pumps until a sample at or after `t` exists, the meter is exhausted, or
  /// `timeout` seconds of meter time pass.
  void wait_for(double t, double timeout);

  std::span<const PowerSample> samples() const { return samples_; }
  double now() const { return meter_.now(); }
  bool exhausted() const { return meter_.exhausted(); }

 private:
  MeterSource& meter_;
  std::vector<PowerSample> samples_;
};

struct Integral {
  double joules = 0.0;
  double covered_seconds = 0.0;
  std::size_t samples = 0;  // samples with t in [t0, t1]
};

/// Trapezoid integral of (watts - baseline) over [t0, t1], interpolating
/// linearly at the window edges. With `clamp`, each interval contributes at
/// least zero.
Integral integrate(std::span<const PowerSample> samples, double baseline, double t0, double t1, bool clamp);

/// Time-weighted mean power over the span of the samples. A single sample is
/// its own mean.
double mean_power(std::span<const PowerSample> samples);

/// mJ per query for a window of known length; the query count is scaled to the
/// part of the window that samples actually cover.
double millijoules_per_query(const Integral& integral, double window_seconds, std::size_t queries);

/// Mean power over `window` seconds starting at the first sample received.
/// Throws Error("meter silent") when nothing arrives.
double measure_idle(PowerTrace& trace, double window);
double measure_idle(MeterSource& meter, double window);

LatencyStats summarize(std::span<const double> ms, double whole_run_ms);

/// Runs warmup_queries untimed, then times measured_queries one at a time.
LatencyStats bench_latency(const QueryFn& query, const BenchConfig& config);

/// Repeats queries for at least config.energy_seconds, then integrates power
/// above `idle_watts` over that span. Throws Error("insufficient samples")
/// when fewer than two samples fall inside it.
EnergyStats bench_energy(PowerTrace& trace, const QueryFn& query, const BenchConfig& config, double idle_watts,
                         std::size_t first_index = 0);
EnergyStats bench_energy(MeterSource& meter, const QueryFn& query, const BenchConfig& config, double idle_watts);

/// Full protocol: idle baseline (if metered), latency, then energy.
BenchReport run_bench(const QueryFn& query, const BenchConfig& config, MeterSource* meter);

}  // namespace lmbench::power
