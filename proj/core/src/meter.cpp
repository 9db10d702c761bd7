#include "lmbench/meter.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>

#include "lmbench/corpus.hpp"

namespace lmbench::power {

namespace {

double seconds_since(std::chrono::steady_clock::time_point origin) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin).count();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<std::pair<double, double>> parse_pair(std::string_view line) {
  line = trim(line);
  auto comma = line.find(',');
  if (comma == std::string_view::npos) return std::nullopt;
  auto a = trim(line.substr(0, comma));
  auto b = trim(line.substr(comma + 1));
  double x = 0.0, y = 0.0;
  auto r1 = std::from_chars(a.data(), a.data() + a.size(), x);
  auto r2 = std::from_chars(b.data(), b.data() + b.size(), y);
  if (a.empty() || b.empty() || r1.ec != std::errc() || r1.ptr != a.data() + a.size() ||
      r2.ec != std::errc() || r2.ptr != b.data() + b.size()) {
    return std::nullopt;
  }
  if (!std::isfinite(x) || !std::isfinite(y)) return std::nullopt;
  return std::pair{x, y};
}

}  // namespace

SimulatedMeter::SimulatedMeter(std::vector<PowerSample> waveform, Playback playback)
    : waveform_(std::move(waveform)), playback_(playback) {
  for (std::size_t i = 0; i < waveform_.size(); ++i) {
    if (waveform_[i].watts < 0.0) throw Error("waveform has negative power");
    if (i > 0 && waveform_[i].t < waveform_[i - 1].t) throw Error("waveform samples are not time-ordered");
  }
}

SimulatedMeter SimulatedMeter::from_file(const std::filesystem::path& path, Playback playback) {
  std::vector<PowerSample> wave;
  auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto pair = parse_pair(line);
    if (!pair) throw ParseError("expected 't,watts'", i + 1);
    wave.push_back({pair->first, pair->second});
  }
  return SimulatedMeter(std::move(wave), playback);
}

void SimulatedMeter::start() {
  origin_ = std::chrono::steady_clock::now();
  next_ = 0;
  running_ = true;
}

std::vector<PowerSample> SimulatedMeter::poll() {
  std::vector<PowerSample> out;
  if (!running_) return out;
  const double limit = playback_ == Playback::kInstant ? INFINITY : now();
  while (next_ < waveform_.size() && waveform_[next_].t <= limit) out.push_back(waveform_[next_++]);
  return out;
}

void SimulatedMeter::stop() { running_ = false; }

double SimulatedMeter::now() const { return seconds_since(origin_); }

SerialMeter::SerialMeter(std::filesystem::path device) : device_(std::move(device)) {}

SerialMeter::~SerialMeter() { stop(); }

std::optional<PowerSample> SerialMeter::parse_line(std::string_view line) {
  auto pair = parse_pair(line);
  if (!pair || pair->second < 0.0) return std::nullopt;
  return PowerSample{pair->first, pair->second};
}

void SerialMeter::start() {
  if (running_) return;
  fd_ = ::open(device_.c_str(), O_RDONLY | O_NONBLOCK | O_CLOEXEC | O_NOCTTY);
  if (fd_ < 0) throw IoError("cannot open meter device '" + device_.string() + "': " + std::strerror(errno));
  struct stat st {};
  kind_ = FdKind::kDevice;
  if (::fstat(fd_, &st) == 0) {
    if (S_ISREG(st.st_mode)) kind_ = FdKind::kRegular;
    if (S_ISFIFO(st.st_mode)) kind_ = FdKind::kFifo;
  }
  origin_ = std::chrono::steady_clock::now();
  partial_.clear();
  first_epoch_.reset();
  exhausted_ = false;
  running_ = true;
  reader_ = std::jthread([this](std::stop_token stop) { run(stop); });
}

void SerialMeter::consume(std::string_view line) {
  if (trim(line).empty()) return;
  auto s = parse_line(line);
  if (!s || (first_epoch_ && s->t < last_epoch_)) {
    ++skipped_;
    return;
  }
  if (!first_epoch_) {
    first_epoch_ = s->t;
    anchor_ = seconds_since(origin_);
  }
  last_epoch_ = s->t;
  PowerSample sample{anchor_ + (s->t - *first_epoch_), s->watts};
  std::lock_guard lock(mutex_);
  pending_.push_back(sample);
}

void SerialMeter::run(std::stop_token stop) {
  char buf[4096];
  while (!stop.stop_requested()) {
    pollfd pfd{fd_, POLLIN, 0};
    int ready = ::poll(&pfd, 1, 50);
    if (ready < 0) {
      if (errno == EINTR) continue;
      std::lock_guard lock(mutex_);
      error_ = std::string("meter poll failed: ") + std::strerror(errno);
      return;
    }
    if (ready == 0) continue;
    ssize_t n = ::read(fd_, buf, sizeof buf);
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      std::lock_guard lock(mutex_);
      error_ = "meter device '" + device_.string() + "' vanished: " + std::strerror(errno);
      return;
    }
    if (n == 0) {
      if (kind_ == FdKind::kRegular) {
        if (!partial_.empty()) consume(partial_);
        partial_.clear();
        exhausted_ = true;
        return;
      }
      if (kind_ == FdKind::kFifo) {
        // No writer attached right now; one may still come.
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        continue;
      }
      std::lock_guard lock(mutex_);
      error_ = "meter device '" + device_.string() + "' vanished: hung up";
      return;
    }
    partial_.append(buf, static_cast<std::size_t>(n));
    std::size_t pos;
    while ((pos = partial_.find('\n')) != std::string::npos) {
      consume(std::string_view(partial_).substr(0, pos));
      partial_.erase(0, pos + 1);
    }
  }
}

std::vector<PowerSample> SerialMeter::poll() {
  std::lock_guard lock(mutex_);
  if (error_) throw IoError(*error_);
  std::vector<PowerSample> out;
  if (!running_) return out;
  out.swap(pending_);
  return out;
}

void SerialMeter::stop() {
  if (reader_.joinable()) {
    reader_.request_stop();
    reader_.join();
  }
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  std::lock_guard lock(mutex_);
  running_ = false;
  pending_.clear();
}

double SerialMeter::now() const { return seconds_since(origin_); }

}  // namespace lmbench::power
