#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace texsense {

/// Fixed stream geometry shared by capture, transport and analysis.
struct StreamConfig {
  int sample_rate_hz = 48000;
  std::size_t buffer_size = 512;
  int analysis_rate_hz = 2000;
  std::size_t window_samples = 512;  // at the analysis rate, i.e. 256 ms

  double buffer_duration_s() const {
    return static_cast<double>(buffer_size) / sample_rate_hz;
  }
  double window_duration_s() const {
    return static_cast<double>(window_samples) / analysis_rate_hz;
  }
  int decimation_factor() const { return sample_rate_hz / analysis_rate_hz; }

  void validate() const;
};

/// One capture period of dual-channel audio, normalized to [-1, 1].
struct AudioBuffer {
  std::vector<float> piezo;
  std::vector<float> mems;
  int sample_rate_hz = 48000;
  std::uint64_t frame_index = 0;

  AudioBuffer() = default;
  AudioBuffer(std::size_t n, int rate, std::uint64_t index = 0)
      : piezo(n, 0.0f), mems(n, 0.0f), sample_rate_hz(rate), frame_index(index) {}

  std::size_t size() const { return piezo.size(); }

  /// Throws ConfigError on geometry mismatch, DataError on non-finite samples.
  void validate(const StreamConfig& cfg) const;
};

/// 256 ms of analysis-rate history for both channels.
struct AnalysisWindow {
  std::vector<float> piezo;
  std::vector<float> mems;
  double end_time_s = 0.0;
};

/// Display/serialization floor for loudness values.
inline constexpr double kDbfsFloor = -120.0;

/// RMS level in dB relative to full scale. A silent signal carries -inf.
struct Loudness {
  double dbfs = -std::numeric_limits<double>::infinity();
  std::size_t span_samples = 0;

  bool is_silent() const { return dbfs == -std::numeric_limits<double>::infinity(); }
  /// Finite value for logs and wire formats.
  double clamped() const { return dbfs < kDbfsFloor ? kDbfsFloor : dbfs; }
};

/// Root-mean-square level of `samples` in dBFS. Throws ArgumentError when empty.
Loudness rms_dbfs(std::span<const float> samples);
Loudness rms_dbfs(std::span<const double> samples);

/// Linear RMS of `samples` (no dB conversion). Throws ArgumentError when empty.
double rms_linear(std::span<const float> samples);

double dbfs_to_linear(double dbfs);
double linear_to_dbfs(double linear);

}  // namespace texsense
