#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "texsense/audio_core.hpp"

namespace texsense {

enum class WindowFunction : std::uint8_t { Rectangular = 0, Hann = 1 };
enum class SpectrumKind : std::uint8_t { Magnitude = 0, Power = 1 };
enum class ChannelMode : std::uint8_t { Dual = 0, PiezoOnly = 1 };
/// Only one layout exists; it is recorded so model files stay self-describing.
enum class ChannelOrder : std::uint8_t { PiezoFirst = 0 };

/// Everything that determines how audio becomes a feature vector. A model is
/// only valid against the configuration it was trained with.
struct FeatureConfig {
  int input_rate_hz = 48000;
  int analysis_rate_hz = 2000;
  std::size_t window_samples = 512;
  ChannelOrder order = ChannelOrder::PiezoFirst;
  WindowFunction window = WindowFunction::Rectangular;
  SpectrumKind spectrum = SpectrumKind::Magnitude;
  ChannelMode channels = ChannelMode::Dual;

  std::size_t bins_per_channel() const { return window_samples / 2 + 1; }
  std::size_t dim() const { return 2 * bins_per_channel(); }

  bool operator==(const FeatureConfig&) const = default;

  /// Human-readable form, e.g. for fingerprint mismatch messages.
  std::string describe() const;
};

/// Concatenated per-channel spectra, piezo bins first. Not normalized.
struct FeatureVector {
  std::vector<float> values;
  double end_time_s = 0.0;
};

/// Spectrum of both channels of `window`. Throws ArgumentError on a length mismatch.
FeatureVector featurize(const AnalysisWindow& window, const FeatureConfig& cfg = {});

/// Same as featurize(), writing into a caller-provided span of cfg.dim() floats.
void featurize_into(std::span<const float> piezo, std::span<const float> mems,
                    const FeatureConfig& cfg, std::span<float> out);

std::string to_string(WindowFunction w);
std::string to_string(SpectrumKind s);
std::string to_string(ChannelMode c);

}  // namespace texsense
