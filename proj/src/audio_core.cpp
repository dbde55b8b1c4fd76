#include "texsense/audio_core.hpp"

#include <cmath>
#include <string>

#include "texsense/error.hpp"

namespace texsense {

void StreamConfig::validate() const {
  if (sample_rate_hz <= 0 || analysis_rate_hz <= 0)
    throw ConfigError("sample rates must be positive");
  if (sample_rate_hz % analysis_rate_hz != 0)
    throw ConfigError("input rate " + std::to_string(sample_rate_hz) +
                      " Hz is not an integer multiple of the analysis rate " +
                      std::to_string(analysis_rate_hz) + " Hz");
  if (buffer_size == 0) throw ConfigError("buffer size must be positive");
  if (window_samples < 2 || (window_samples & (window_samples - 1)) != 0)
    throw ConfigError("analysis window length must be a power of two");
}

void AudioBuffer::validate(const StreamConfig& cfg) const {
  if (piezo.size() != mems.size())
    throw ConfigError("channel length mismatch: piezo " + std::to_string(piezo.size()) +
                      ", mems " + std::to_string(mems.size()));
  if (piezo.size() != cfg.buffer_size)
    throw ConfigError("buffer holds " + std::to_string(piezo.size()) +
                      " samples, stream expects " + std::to_string(cfg.buffer_size));
  if (sample_rate_hz != cfg.sample_rate_hz)
    throw ConfigError("buffer sample rate " + std::to_string(sample_rate_hz) +
                      " Hz, stream expects " + std::to_string(cfg.sample_rate_hz) + " Hz");
  for (std::size_t i = 0; i < piezo.size(); ++i) {
    if (!std::isfinite(piezo[i]) || !std::isfinite(mems[i]))
      throw DataError("non-finite sample at index " + std::to_string(i) + " of frame " +
                      std::to_string(frame_index));
  }
}

namespace {

template <typename T>
double mean_square(std::span<const T> samples) {
  if (samples.empty()) throw ArgumentError("rms of an empty sample sequence");
  double acc = 0.0;
  for (const T s : samples) acc += static_cast<double>(s) * static_cast<double>(s);
  return acc / static_cast<double>(samples.size());
}

template <typename T>
Loudness loudness_of(std::span<const T> samples) {
  const double ms = mean_square(samples);
  Loudness out;
  out.span_samples = samples.size();
  // 10*log10(ms) == 20*log10(sqrt(ms)) without the extra rounding of sqrt.
  out.dbfs = ms > 0.0 ? 10.0 * std::log10(ms) : -std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace

Loudness rms_dbfs(std::span<const float> samples) { return loudness_of(samples); }
Loudness rms_dbfs(std::span<const double> samples) { return loudness_of(samples); }

double rms_linear(std::span<const float> samples) { return std::sqrt(mean_square(samples)); }

double dbfs_to_linear(double dbfs) {
  if (dbfs == -std::numeric_limits<double>::infinity()) return 0.0;
  return std::pow(10.0, dbfs / 20.0);
}

double linear_to_dbfs(double linear) {
  if (linear <= 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(linear);
}

}  // namespace texsense
