#include "lmbench/powerbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace lmbench::power {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kGraceSeconds = 2.0;
constexpr auto kPollInterval = std::chrono::milliseconds(10);

double elapsed_ms(Clock::time_point a, Clock::time_point b) {
  if (b < a) throw Error("monotonic clock went backwards");
  return std::chrono::duration<double, std::milli>(b - a).count();
}

double lerp(const PowerSample& a, const PowerSample& b, double t) {
  if (b.t == a.t) return b.watts;
  return a.watts + (b.watts - a.watts) * ((t - a.t) / (b.t - a.t));
}

}  // namespace

void BenchConfig::validate() const {
  if (measured_queries < 1) throw Error("measured_queries must be at least 1");
  if (!(idle_window > 0.0)) throw Error("idle_window must be positive");
  if (!(energy_seconds > 0.0)) throw Error("energy_seconds must be positive");
  if (query_slice && *query_slice == 0) throw Error("query_slice must be positive");
  if (idle_watts && !(*idle_watts >= 0.0)) throw Error("idle_watts must be non-negative");
}

void PowerTrace::pump() {
  for (const auto& s : meter_.poll()) {
    if (!(s.watts >= 0.0)) throw Error("meter reported negative power");
    if (!samples_.empty() && s.t < samples_.back().t) throw Error("meter samples out of time order");
    samples_.push_back(s);
  }
}

void PowerTrace::wait_for(double t, double timeout) {
  const double deadline = meter_.now() + timeout;
  for (;;) {
    const bool done = meter_.exhausted();
    pump();
    if (!samples_.empty() && samples_.back().t >= t) return;
    if (done || meter_.now() >= deadline) return;
    std::this_thread::sleep_for(kPollInterval);
  }
}

Integral integrate(std::span<const PowerSample> samples, double baseline, double t0, double t1, bool clamp) {
  Integral out;
  for (const auto& s : samples) {
    if (s.t >= t0 && s.t <= t1) ++out.samples;
  }
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const auto& a = samples[i - 1];
    const auto& b = samples[i];
    const double lo = std::max(a.t, t0);
    const double hi = std::min(b.t, t1);
    if (!(hi > lo)) continue;
    const double wa = lo == a.t ? a.watts : lerp(a, b, lo);
    const double wb = hi == b.t ? b.watts : lerp(a, b, hi);
    double area = 0.5 * ((wa - baseline) + (wb - baseline)) * (hi - lo);
    if (clamp) area = std::max(area, 0.0);
    out.joules += area;
    out.covered_seconds += hi - lo;
  }
  return out;
}

double mean_power(std::span<const PowerSample> samples) {
  if (samples.empty()) throw Error("meter silent");
  const double t0 = samples.front().t;
  const double t1 = samples.back().t;
  if (!(t1 > t0)) {
    double sum = 0.0;
    for (const auto& s : samples) sum += s.watts;
    return sum / static_cast<double>(samples.size());
  }
  return integrate(samples, 0.0, t0, t1, false).joules / (t1 - t0);
}

double millijoules_per_query(const Integral& integral, double window_seconds, std::size_t queries) {
  if (queries == 0) throw Error("no queries in the energy window");
  if (!(integral.covered_seconds > 0.0) || !(window_seconds > 0.0)) throw Error("insufficient samples");
  const double covered_queries =
      static_cast<double>(queries) * std::min(1.0, integral.covered_seconds / window_seconds);
  return integral.joules * 1000.0 / covered_queries;
}

double measure_idle(PowerTrace& trace, double window) {
  if (!(window > 0.0)) throw Error("idle window must be positive");
  const std::size_t first = trace.samples().size();
  const double started = trace.now();
  for (;;) {
    const bool done = trace.exhausted();
    trace.pump();
    if (trace.samples().size() > first || done || trace.now() >= started + window + kGraceSeconds) break;
    std::this_thread::sleep_for(kPollInterval);
  }
  if (trace.samples().size() == first) throw Error("meter silent");
  const double t0 = trace.samples()[first].t;
  trace.wait_for(t0 + window, window + kGraceSeconds);

  auto all = trace.samples().subspan(first);
  std::size_t n = 0;
  while (n < all.size() && all[n].t <= t0 + window) ++n;
  auto in_window = all.first(n);
  if (n < all.size() && n >= 1) {
    // Interpolate up to the window edge using the next sample.
    Integral part = integrate(all.first(n + 1), 0.0, t0, t0 + window, false);
    if (part.covered_seconds > 0.0) return part.joules / part.covered_seconds;
  }
  return mean_power(in_window);
}

double measure_idle(MeterSource& meter, double window) {
  PowerTrace trace(meter);
  return measure_idle(trace, window);
}

LatencyStats summarize(std::span<const double> ms, double whole_run_ms) {
  if (ms.empty()) throw Error("no timings to summarize");
  LatencyStats s;
  s.queries = ms.size();
  s.min_ms = *std::min_element(ms.begin(), ms.end());
  s.max_ms = *std::max_element(ms.begin(), ms.end());
  double sum = 0.0;
  for (double x : ms) sum += x;
  s.mean_ms = sum / static_cast<double>(ms.size());
  double ss = 0.0;
  for (double x : ms) ss += (x - s.mean_ms) * (x - s.mean_ms);
  s.std_ms = ms.size() > 1 ? std::sqrt(ss / static_cast<double>(ms.size() - 1)) : 0.0;
  s.whole_run_ms = whole_run_ms;
  return s;
}

LatencyStats bench_latency(const QueryFn& query, const BenchConfig& config) {
  config.validate();
  for (std::size_t i = 0; i < config.warmup_queries; ++i) query(i);

  std::vector<double> ms(config.measured_queries);
  const std::size_t base = config.warmup_queries;
  const auto run_start = Clock::now();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const auto a = Clock::now();
    query(base + i);
    const auto b = Clock::now();
    ms[i] = elapsed_ms(a, b);
  }
  const double whole = elapsed_ms(run_start, Clock::now()) / static_cast<double>(ms.size());
  return summarize(ms, whole);
}

EnergyStats bench_energy(PowerTrace& trace, const QueryFn& query, const BenchConfig& config, double idle_watts,
                         std::size_t first_index) {
  config.validate();
  if (!(idle_watts >= 0.0)) throw Error("idle power must be non-negative");
  const double t_begin = trace.now();
  std::size_t count = 0;
  do {
    query(first_index + count);
    ++count;
  } while (trace.now() - t_begin < config.energy_seconds);
  const double t_end = trace.now();
  trace.wait_for(t_end, kGraceSeconds + 1.0);

  const Integral integral = integrate(trace.samples(), idle_watts, t_begin, t_end, true);
  if (integral.samples < 2) throw Error("insufficient samples");
  EnergyStats e;
  e.window_seconds = t_end - t_begin;
  e.covered_seconds = integral.covered_seconds;
  e.joules = integral.joules;
  e.queries = count;
  e.samples = integral.samples;
  e.mj_per_query = millijoules_per_query(integral, e.window_seconds, count);
  return e;
}

EnergyStats bench_energy(MeterSource& meter, const QueryFn& query, const BenchConfig& config, double idle_watts) {
  PowerTrace trace(meter);
  return bench_energy(trace, query, config, idle_watts);
}

BenchReport run_bench(const QueryFn& query, const BenchConfig& config, MeterSource* meter) {
  config.validate();
  const auto start = Clock::now();
  BenchReport report;
  if (meter == nullptr) {
    report.latency = bench_latency(query, config);
    report.total_queries = config.warmup_queries + config.measured_queries;
  } else {
    meter->start();
    try {
      PowerTrace trace(*meter);
      report.idle_watts = config.idle_watts ? *config.idle_watts : measure_idle(trace, config.idle_window);
      report.latency = bench_latency(query, config);
      const std::size_t done = config.warmup_queries + config.measured_queries;
      report.energy = bench_energy(trace, query, config, *report.idle_watts, done);
      report.total_queries = done + report.energy->queries;
    } catch (...) {
      meter->stop();
      throw;
    }
    meter->stop();
  }
  report.wall_time_s = elapsed_ms(start, Clock::now()) / 1000.0;
  return report;
}

}  // namespace lmbench::power
