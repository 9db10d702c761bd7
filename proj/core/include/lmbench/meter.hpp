#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

#include "lmbench/common.hpp"

namespace lmbench::power {

struct PowerSample {
  double t = 0.0;  // seconds since the meter started
  double watts = 0.0;
};

/// A source of power samples. Samples arrive in time order; after stop(),
/// poll() returns nothing.
class MeterSource {
 public:
  virtual ~MeterSource() = default;
  virtual void start() = 0;
  /// Samples that became available since the previous call. Never blocks.
  virtual std::vector<PowerSample> poll() = 0;
  virtual void stop() = 0;
  /// Current time on the sample time base, in seconds since start().
  virtual double now() const = 0;
  /// True once the source can never deliver another sample.
  virtual bool exhausted() const { return false; }
};

enum class Playback { kInstant, kRealTime };

/// Replays a fixed waveform. Instant playback releases everything on the
/// first poll; real-time playback releases samples once their timestamp has
/// elapsed on the host monotonic clock.
class SimulatedMeter final : public MeterSource {
 public:
  explicit SimulatedMeter(std::vector<PowerSample> waveform, Playback playback = Playback::kInstant);
  /// Lines "t,watts"; blank lines and lines starting with '#' are ignored.
  static SimulatedMeter from_file(const std::filesystem::path& path, Playback playback = Playback::kRealTime);

  void start() override;
  std::vector<PowerSample> poll() override;
  void stop() override;
  double now() const override;
  bool exhausted() const override { return next_ == waveform_.size(); }

 private:
  std::vector<PowerSample> waveform_;
  Playback playback_;
  std::size_t next_ = 0;
  bool running_ = false;
  std::chrono::steady_clock::time_point origin_{};
};

/// Reads "epoch_seconds,watts" lines from a device, FIFO or capture file on a
/// background thread. Timestamps keep the device's spacing and are anchored to
/// the host time at which the first valid line arrived. Malformed lines (and
/// lines whose epoch goes backwards) are skipped and counted.
class SerialMeter final : public MeterSource {
 public:
  explicit SerialMeter(std::filesystem::path device);
  ~SerialMeter() override;
  SerialMeter(const SerialMeter&) = delete;
  SerialMeter& operator=(const SerialMeter&) = delete;

  /// Throws IoError if the device cannot be opened.
  void start() override;
  /// Throws IoError if the device failed since the last poll.
  std::vector<PowerSample> poll() override;
  void stop() override;
  double now() const override;

  std::size_t skipped_lines() const noexcept { return skipped_.load(); }
  /// True once a regular capture file has been read to its end.
  bool exhausted() const override { return exhausted_.load(); }

  /// Parses one "epoch_seconds,watts" line; nullopt when malformed.
  static std::optional<PowerSample> parse_line(std::string_view line);

 private:
  void run(std::stop_token stop);
  void consume(std::string_view line);

  std::filesystem::path device_;
  int fd_ = -1;
  enum class FdKind { kRegular, kFifo, kDevice };
  FdKind kind_ = FdKind::kDevice;
  std::chrono::steady_clock::time_point origin_{};
  std::jthread reader_;

  mutable std::mutex mutex_;
  std::vector<PowerSample> pending_;
  std::optional<std::string> error_;
  bool running_ = false;

  // Reader-thread state.
  std::string partial_;
  std::optional<double> first_epoch_;
  double anchor_ = 0.0;
  double last_epoch_ = 0.0;

  std::atomic<std::size_t> skipped_{0};
  std::atomic<bool> exhausted_{false};
};

}  // namespace lmbench::power
