#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "texsense/random.hpp"
#include "texsense/wav.hpp"

namespace texsense {

enum class SyntheticTexture : std::uint8_t { Rough, Smooth, Silence };

/// Level ranges of the synthetic texture families, in dBFS RMS over one segment.
struct SyntheticLevels {
  double rough_piezo_min = -16.0, rough_piezo_max = -6.0;
  double rough_mems_offset_min = -3.0, rough_mems_offset_max = 0.0;
  double smooth_piezo_min = -20.0, smooth_piezo_max = -12.0;
  double smooth_mems_offset_min = -34.0, smooth_mems_offset_max = -26.0;
  double silence_min = -60.0, silence_max = -40.0;
};

/// Appends `n` samples of one texture segment to both channels.
///
/// Rough: broadband noise shaped by random impact bursts, MEMS nearly as loud
/// as piezo. Smooth: band-limited noise (100-400 Hz centre), MEMS far below
/// piezo. Silence: faint white noise on both channels. Each segment's RMS is
/// set exactly to a level drawn from `levels` before clipping to [-1, 1].
void append_texture(SyntheticTexture texture, std::size_t n, int sample_rate_hz, Rng& rng,
                     std::vector<float>& piezo, std::vector<float>& mems,
                     const SyntheticLevels& levels = {});

struct TextureSegment {
  SyntheticTexture texture;
  double seconds;
};

/// Two-channel (piezo, MEMS) recording built from consecutive segments.
WavData synth_recording(const std::vector<TextureSegment>& segments, std::uint64_t seed,
                        int sample_rate_hz = 48000, const SyntheticLevels& levels = {});

}  // namespace texsense
