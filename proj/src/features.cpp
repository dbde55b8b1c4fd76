#include "texsense/features.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "texsense/error.hpp"
#include "texsense/fft.hpp"

namespace texsense {

std::string to_string(WindowFunction w) {
  return w == WindowFunction::Hann ? "hann" : "rectangular";
}
std::string to_string(SpectrumKind s) { return s == SpectrumKind::Power ? "power" : "magnitude"; }
std::string to_string(ChannelMode c) { return c == ChannelMode::PiezoOnly ? "piezo-only" : "dual"; }

std::string FeatureConfig::describe() const {
  return std::to_string(input_rate_hz) + "Hz->" + std::to_string(analysis_rate_hz) + "Hz, " +
         std::to_string(window_samples) + " samples, piezo-first, " + to_string(window) +
         " window, " + to_string(spectrum) + ", " + to_string(channels);
}

namespace {

void channel_spectrum(std::span<const float> samples, const FeatureConfig& cfg,
                      std::span<float> out) {
  const std::size_t n = samples.size();
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    if (cfg.window == WindowFunction::Hann)
      w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                               static_cast<double>(n));
    buf[i] = {w * static_cast<double>(samples[i]), 0.0};
  }
  fft_inplace(buf);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double m = std::abs(buf[k]);
    out[k] = static_cast<float>(cfg.spectrum == SpectrumKind::Power ? m * m : m);
  }
}

}  // namespace

void featurize_into(std::span<const float> piezo, std::span<const float> mems,
                    const FeatureConfig& cfg, std::span<float> out) {
  if (piezo.size() != cfg.window_samples || mems.size() != cfg.window_samples)
    throw ArgumentError("analysis window holds " + std::to_string(piezo.size()) + "/" +
                        std::to_string(mems.size()) + " samples, expected " +
                        std::to_string(cfg.window_samples));
  if (out.size() != cfg.dim())
    throw ArgumentError("feature output span has wrong dimension");
  const std::size_t bins = cfg.bins_per_channel();
  channel_spectrum(piezo, cfg, out.first(bins));
  if (cfg.channels == ChannelMode::PiezoOnly) {
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(bins), out.end(), 0.0f);
  } else {
    channel_spectrum(mems, cfg, out.subspan(bins));
  }
}

FeatureVector featurize(const AnalysisWindow& window, const FeatureConfig& cfg) {
  FeatureVector fv;
  fv.values.resize(cfg.dim());
  fv.end_time_s = window.end_time_s;
  featurize_into(window.piezo, window.mems, cfg, fv.values);
  return fv;
}

}  // namespace texsense
