#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "texsense/audio_core.hpp"

namespace texsense {

/// Encodes one AudioBuffer into a datagram payload and back.
class Codec {
 public:
  virtual ~Codec() = default;
  virtual std::uint8_t id() const = 0;
  virtual std::string name() const = 0;
  virtual std::vector<std::uint8_t> encode(const AudioBuffer& buf) = 0;
  /// Throws DataError if the payload cannot produce one buffer for `cfg`.
  virtual AudioBuffer decode(std::span<const std::uint8_t> payload, const StreamConfig& cfg) = 0;
};

/// Lossless reference codec: interleaved little-endian float32, piezo first.
class PassthroughCodec final : public Codec {
 public:
  static constexpr std::uint8_t kId = 0;
  std::uint8_t id() const override { return kId; }
  std::string name() const override { return "passthrough"; }
  std::vector<std::uint8_t> encode(const AudioBuffer& buf) override;
  AudioBuffer decode(std::span<const std::uint8_t> payload, const StreamConfig& cfg) override;
};

class CodecRegistry {
 public:
  /// Registry holding the passthrough codec.
  static CodecRegistry with_defaults();

  void add(std::unique_ptr<Codec> codec);
  /// Throws ConfigError for an unknown id.
  Codec& get(std::uint8_t id) const;
  Codec& get(const std::string& name) const;
  bool contains(std::uint8_t id) const { return codecs_.count(id) != 0; }

 private:
  std::map<std::uint8_t, std::unique_ptr<Codec>> codecs_;
};

/// Runs `buf` through encode/decode, e.g. to condition training audio on
/// transmission artifacts.
AudioBuffer codec_round_trip(Codec& codec, const AudioBuffer& buf, const StreamConfig& cfg);

/// One datagram. Wire layout (little-endian, 24-byte header):
///
///   0  char[4] magic "RTAP"
///   4  u8      version (1)
///   5  u8      channel count (2)
///   6  u8      codec id
///   7  u8      reserved (0)
///   8  u32     sequence number (wraps)
///  12  u64     stream timestamp in samples
///  20  u32     payload length in bytes
///  24  payload
struct FramePacket {
  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::size_t kHeaderSize = 24;

  std::uint32_t sequence = 0;
  std::uint64_t timestamp_samples = 0;
  std::uint8_t channels = 2;
  std::uint8_t codec_id = PassthroughCodec::kId;
  std::vector<std::uint8_t> payload;

  std::vector<std::uint8_t> serialize() const;
  /// Throws DataError on a malformed datagram.
  static FramePacket parse(std::span<const std::uint8_t> datagram);

  bool operator==(const FramePacket&) const = default;
};

/// Sender side: assigns sequence numbers and timestamps.
class FrameEncoder {
 public:
  static constexpr std::size_t kDefaultMaxPayload = 8192;

  FrameEncoder(const StreamConfig& cfg, Codec& codec,
               std::size_t max_payload = kDefaultMaxPayload, std::uint32_t first_sequence = 0);

  /// Throws ConfigError if the buffer does not match the stream or the
  /// payload exceeds the budget.
  FramePacket encode(const AudioBuffer& buf);

  std::uint32_t next_sequence() const { return next_seq_; }

 private:
  StreamConfig cfg_;
  Codec& codec_;
  std::size_t max_payload_;
  std::uint32_t next_seq_;
};

struct JitterConfig {
  /// Slots held back before playout; also the tolerated reorder distance + 1.
  std::size_t depth = 2;
  /// A packet this many slots behind playout is treated as a new stream.
  std::int64_t reset_behind = 64;
  /// A packet this many slots ahead of playout is treated as a new stream.
  std::int64_t reset_ahead = 1 << 16;
};

struct JitterCounters {
  std::uint64_t received = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost = 0;  // slots filled by concealment
  std::uint64_t late = 0;
  std::uint64_t duplicated = 0;
  std::uint64_t malformed = 0;
  std::uint64_t resets = 0;

  double loss_ratio() const {
    const auto slots = delivered + lost;
    return slots == 0 ? 0.0 : static_cast<double>(lost) / static_cast<double>(slots);
  }
  /// Single-line key=value form.
  std::string to_line() const;
};

/// One playout slot leaving the jitter buffer.
struct PlayoutBuffer {
  AudioBuffer buffer;  // frame_index = receiver-local playout counter
  std::uint32_t sequence = 0;
  std::uint64_t stream_timestamp = 0;  // samples, sender clock
  bool concealed = false;
  bool stream_reset = false;  // first slot of a new stream after a reset
};

/// Receiver-side reorder buffer with silence concealment.
///
/// Slot s is played out once a packet for slot s + depth (or later) has been
/// seen: the packet for s if it arrived, otherwise a silent buffer. Output is
/// therefore in slot order, each slot exactly once, with a fixed hold-back of
/// `depth` buffers.
class JitterBuffer {
 public:
  JitterBuffer(const StreamConfig& cfg, const CodecRegistry& codecs, JitterConfig jcfg = {});

  std::vector<PlayoutBuffer> receive(const FramePacket& pkt);
  /// Parses then receives; malformed datagrams are counted and dropped.
  std::vector<PlayoutBuffer> receive_datagram(std::span<const std::uint8_t> datagram);
  /// Starts the stream at a known first packet, so that losing it shifts
  /// nothing. Otherwise the first packet received anchors slot 0.
  void anchor(std::uint32_t first_sequence, std::uint64_t first_timestamp);
  /// Plays out every slot up to the newest one seen.
  std::vector<PlayoutBuffer> flush();
  /// Plays out slots until `count` slots of the current stream have been
  /// emitted in total, concealing any that never arrived.
  std::vector<PlayoutBuffer> flush_through(std::uint64_t count);

  const JitterCounters& counters() const { return counters_; }
  const JitterConfig& config() const { return jcfg_; }
  /// Latency added by the hold-back.
  double added_latency_s() const {
    return static_cast<double>(jcfg_.depth) * cfg_.buffer_duration_s();
  }

 private:
  void start_stream(const FramePacket& pkt);
  void play_until(std::uint64_t slot_exclusive, std::vector<PlayoutBuffer>& out);
  PlayoutBuffer make_slot(std::uint64_t slot);

  StreamConfig cfg_;
  const CodecRegistry& codecs_;
  JitterConfig jcfg_;
  JitterCounters counters_;

  bool started_ = false;
  bool pending_reset_flag_ = false;
  std::uint64_t next_slot_ = 0;      // next slot to play out
  std::uint32_t next_seq_ = 0;       // sequence number of next_slot_
  std::uint64_t base_timestamp_ = 0; // stream timestamp of slot 0
  std::uint64_t max_slot_ = 0;       // newest slot seen
  std::uint64_t playout_index_ = 0;
  std::map<std::uint64_t, FramePacket> pending_;
  std::vector<std::uint8_t> history_;  // per-slot: 1 delivered, 2 concealed (ring)
};

struct ImpairmentConfig {
  double loss_rate = 0.0;
  double reorder_prob = 0.0;
  double jitter_ms = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool is_identity() const { return loss_rate == 0.0 && reorder_prob == 0.0 && jitter_ms == 0.0; }
};

struct TimedPacket {
  FramePacket packet;
  double send_time_s = 0.0;
  double arrival_time_s = 0.0;
};

/// Seeded network impairment: packet i is sent at i * period_s, dropped with
/// probability loss_rate, delayed by 1.5 periods with probability
/// reorder_prob, and further delayed by U(0, jitter_ms). Returned in arrival
/// order.
std::vector<TimedPacket> impair(const std::vector<FramePacket>& packets, double period_s,
                                const ImpairmentConfig& cfg);

}  // namespace texsense
