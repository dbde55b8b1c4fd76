#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace texsense {

enum class WavSampleFormat : std::uint8_t { Pcm16, Float32 };

/// Decoded RIFF/WAVE contents, one vector per channel, normalized to [-1, 1].
struct WavData {
  int sample_rate_hz = 48000;
  std::vector<std::vector<float>> channels;

  std::size_t num_channels() const { return channels.size(); }
  std::size_t num_frames() const { return channels.empty() ? 0 : channels.front().size(); }
};

/// Reads PCM 16/24/32-bit or IEEE float 32/64-bit WAV (including
/// WAVE_FORMAT_EXTENSIBLE). Throws DataError on anything else.
WavData read_wav(const std::filesystem::path& path);

/// Writes interleaved samples; PCM16 output is clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const WavData& wav,
               WavSampleFormat format = WavSampleFormat::Float32);

}  // namespace texsense
