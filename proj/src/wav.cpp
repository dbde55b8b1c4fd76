#include "texsense/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "texsense/bytes.hpp"
#include "texsense/error.hpp"

namespace texsense {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

bool tag_is(const std::uint8_t* p, const char* tag) { return std::memcmp(p, tag, 4) == 0; }

float decode_sample(const std::uint8_t* p, std::uint16_t format, std::uint16_t bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      float f;
      std::memcpy(&f, p, 4);
      return f;
    }
    double d;
    std::memcpy(&d, p, 8);
    return static_cast<float>(d);
  }
  switch (bits) {
    case 16: {
      std::int16_t v;
      std::memcpy(&v, p, 2);
      return static_cast<float>(v) / 32768.0f;
    }
    case 24: {
      std::int32_t v = (p[0] << 8) | (p[1] << 16) | (p[2] << 24);
      return static_cast<float>(v >> 8) / 8388608.0f;
    }
    default: {
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return static_cast<float>(static_cast<double>(v) / 2147483648.0);
    }
  }
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  const auto data = bytes::read_file(path.string());
  const std::string name = path.string();
  if (data.size() < 12 || !tag_is(data.data(), "RIFF") || !tag_is(data.data() + 8, "WAVE"))
    throw DataError(name + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* samples = nullptr;
  std::size_t sample_bytes = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const std::uint8_t* chunk = data.data() + pos;
    std::uint32_t size;
    std::memcpy(&size, chunk + 4, 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(size, data.size() - body);
    if (tag_is(chunk, "fmt ")) {
      if (avail < 16) throw DataError(name + ": truncated fmt chunk");
      std::memcpy(&format, chunk + 8, 2);
      std::memcpy(&channels, chunk + 10, 2);
      std::memcpy(&rate, chunk + 12, 4);
      std::memcpy(&bits, chunk + 22, 2);
      if (format == kFormatExtensible) {
        if (avail < 26) throw DataError(name + ": truncated extensible fmt chunk");
        std::memcpy(&format, chunk + 32, 2);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (tag_is(chunk, "data")) {
      samples = chunk + 8;
      sample_bytes = avail;  // tolerate a truncated final chunk
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt || samples == nullptr) throw DataError(name + ": missing fmt or data chunk");
  const bool ok_pcm = format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
  const bool ok_float = format == kFormatFloat && (bits == 32 || bits == 64);
  if (!ok_pcm && !ok_float)
    throw DataError(name + ": unsupported sample format " + std::to_string(format) + "/" +
                    std::to_string(bits) + " bit");
  if (channels == 0 || rate == 0) throw DataError(name + ": invalid channel count or rate");

  const std::size_t stride = static_cast<std::size_t>(bits / 8) * channels;
  const std::size_t frames = sample_bytes / stride;
  WavData out;
  out.sample_rate_hz = static_cast<int>(rate);
  out.channels.assign(channels, std::vector<float>(frames));
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t c = 0; c < channels; ++c)
      out.channels[c][f] = decode_sample(samples + f * stride + c * (bits / 8), format, bits);
  return out;
}

void write_wav(const std::filesystem::path& path, const WavData& wav, WavSampleFormat format) {
  const std::size_t channels = wav.num_channels();
  const std::size_t frames = wav.num_frames();
  if (channels == 0) throw ArgumentError("cannot write a WAV file without channels");
  for (const auto& ch : wav.channels)
    if (ch.size() != frames) throw ArgumentError("WAV channels differ in length");

  const std::uint16_t bits = format == WavSampleFormat::Pcm16 ? 16 : 32;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * channels * (bits / 8));
  bytes::Writer w;
  w.raw("RIFF", 4);
  w.u32(36 + data_bytes);
  w.raw("WAVE", 4);
  w.raw("fmt ", 4);
  w.u32(16);
  w.u16(format == WavSampleFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  w.u16(static_cast<std::uint16_t>(channels));
  w.u32(static_cast<std::uint32_t>(wav.sample_rate_hz));
  w.u32(static_cast<std::uint32_t>(wav.sample_rate_hz * channels * (bits / 8)));
  w.u16(static_cast<std::uint16_t>(channels * (bits / 8)));
  w.u16(bits);
  w.raw("data", 4);
  w.u32(data_bytes);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t c = 0; c < channels; ++c) {
      const float s = wav.channels[c][f];
      if (format == WavSampleFormat::Pcm16) {
        const float clipped = std::clamp(s, -1.0f, 1.0f);
        w.u16(static_cast<std::uint16_t>(
            static_cast<std::int16_t>(std::lround(std::min(clipped * 32768.0f, 32767.0f)))));
      } else {
        w.f32(s);
      }
    }
  }
  bytes::write_file(path.string(), w.data());
}

}  // namespace texsense
