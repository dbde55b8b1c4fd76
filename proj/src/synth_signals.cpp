#include "texsense/synth_signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "texsense/audio_core.hpp"

namespace texsense {

namespace {

/// RBJ band-pass (constant 0 dB peak gain), direct form I.
class BandPass {
 public:
  BandPass(double centre_hz, double q, int rate) {
    const double w0 = 2.0 * std::numbers::pi * centre_hz / rate;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    b0_ = alpha / a0;
    b2_ = -alpha / a0;
    a1_ = -2.0 * std::cos(w0) / a0;
    a2_ = (1.0 - alpha) / a0;
  }
  double operator()(double x) {
    const double y = b0_ * x + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double b0_, b2_, a1_, a2_;
  double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

void normalize_to(std::vector<double>& x, double dbfs) {
  double ms = 0.0;
  for (double v : x) ms += v * v;
  ms /= static_cast<double>(x.size());
  if (ms <= 0.0) return;
  const double g = dbfs_to_linear(dbfs) / std::sqrt(ms);
  for (double& v : x) v *= g;
}

std::vector<double> burst_envelope(std::size_t n, int rate, Rng& rng) {
  std::vector<double> env(n, 0.3);
  const double rate_per_sample = 40.0 / rate;
  const double decay = std::exp(-1.0 / (0.005 * rate));
  double level = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.bernoulli(rate_per_sample)) level += rng.uniform(0.5, 1.5);
    env[i] += level;
    level *= decay;
  }
  return env;
}

}  // namespace

void append_texture(SyntheticTexture texture, std::size_t n, int sample_rate_hz, Rng& rng,
                    std::vector<float>& piezo, std::vector<float>& mems,
                    const SyntheticLevels& levels) {
  if (n == 0) return;
  std::vector<double> p(n), m(n);
  switch (texture) {
    case SyntheticTexture::Rough: {
      const auto env = burst_envelope(n, sample_rate_hz, rng);
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = env[i] * rng.normal();
        m[i] = env[i] * rng.normal();
      }
      const double lp = rng.uniform(levels.rough_piezo_min, levels.rough_piezo_max);
      const double lm = lp + rng.uniform(levels.rough_mems_offset_min, levels.rough_mems_offset_max);
      normalize_to(p, lp);
      normalize_to(m, lm);
      break;
    }
    case SyntheticTexture::Smooth: {
      BandPass bp_p(rng.uniform(100.0, 400.0), 1.0, sample_rate_hz);
      BandPass bp_m(rng.uniform(100.0, 400.0), 1.0, sample_rate_hz);
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = bp_p(rng.normal());
        m[i] = bp_m(rng.normal());
      }
      const double lp = rng.uniform(levels.smooth_piezo_min, levels.smooth_piezo_max);
      const double lm =
          lp + rng.uniform(levels.smooth_mems_offset_min, levels.smooth_mems_offset_max);
      normalize_to(p, lp);
      normalize_to(m, lm);
      break;
    }
    case SyntheticTexture::Silence: {
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = rng.normal();
        m[i] = rng.normal();
      }
      normalize_to(p, rng.uniform(levels.silence_min, levels.silence_max));
      normalize_to(m, rng.uniform(levels.silence_min, levels.silence_max));
      break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    piezo.push_back(static_cast<float>(std::clamp(p[i], -1.0, 1.0)));
    mems.push_back(static_cast<float>(std::clamp(m[i], -1.0, 1.0)));
  }
}

WavData synth_recording(const std::vector<TextureSegment>& segments, std::uint64_t seed,
                        int sample_rate_hz, const SyntheticLevels& levels) {
  Rng rng(seed);
  WavData wav;
  wav.sample_rate_hz = sample_rate_hz;
  wav.channels.resize(2);
  for (const auto& seg : segments) {
    const auto n = static_cast<std::size_t>(std::llround(seg.seconds * sample_rate_hz));
    append_texture(seg.texture, n, sample_rate_hz, rng, wav.channels[0], wav.channels[1], levels);
  }
  return wav;
}

}  // namespace texsense
