#include "texsense/transport.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

#include "texsense/bytes.hpp"
#include "texsense/error.hpp"
#include "texsense/random.hpp"

namespace texsense {

// ---------------------------------------------------------------- codecs

std::vector<std::uint8_t> PassthroughCodec::encode(const AudioBuffer& buf) {
  bytes::Writer w;
  w.data().reserve(buf.size() * 2 * sizeof(float));
  for (std::size_t i = 0; i < buf.size(); ++i) {
    w.f32(buf.piezo[i]);
    w.f32(buf.mems[i]);
  }
  return w.take();
}

AudioBuffer PassthroughCodec::decode(std::span<const std::uint8_t> payload,
                                     const StreamConfig& cfg) {
  const std::size_t expected = cfg.buffer_size * 2 * sizeof(float);
  if (payload.size() != expected)
    throw DataError("passthrough payload is " + std::to_string(payload.size()) +
                    " bytes, expected " + std::to_string(expected));
  AudioBuffer buf(cfg.buffer_size, cfg.sample_rate_hz);
  bytes::Reader r(payload);
  for (std::size_t i = 0; i < cfg.buffer_size; ++i) {
    buf.piezo[i] = r.f32();
    buf.mems[i] = r.f32();
  }
  return buf;
}

CodecRegistry CodecRegistry::with_defaults() {
  CodecRegistry r;
  r.add(std::make_unique<PassthroughCodec>());
  return r;
}

void CodecRegistry::add(std::unique_ptr<Codec> codec) {
  const auto id = codec->id();
  codecs_[id] = std::move(codec);
}

Codec& CodecRegistry::get(std::uint8_t id) const {
  const auto it = codecs_.find(id);
  if (it == codecs_.end()) throw ConfigError("unknown codec id " + std::to_string(id));
  return *it->second;
}

Codec& CodecRegistry::get(const std::string& name) const {
  for (const auto& [id, codec] : codecs_)
    if (codec->name() == name) return *codec;
  throw ConfigError("unknown codec '" + name + "'");
}

AudioBuffer codec_round_trip(Codec& codec, const AudioBuffer& buf, const StreamConfig& cfg) {
  AudioBuffer out = codec.decode(codec.encode(buf), cfg);
  out.frame_index = buf.frame_index;
  return out;
}

// ---------------------------------------------------------------- packets

namespace {
constexpr char kPacketMagic[4] = {'R', 'T', 'A', 'P'};
}

std::vector<std::uint8_t> FramePacket::serialize() const {
  bytes::Writer w;
  w.data().reserve(kHeaderSize + payload.size());
  w.raw(kPacketMagic, 4);
  w.u8(kVersion);
  w.u8(channels);
  w.u8(codec_id);
  w.u8(0);
  w.u32(sequence);
  w.u64(timestamp_samples);
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.raw(payload.data(), payload.size());
  return w.take();
}

FramePacket FramePacket::parse(std::span<const std::uint8_t> datagram) {
  if (datagram.size() < kHeaderSize)
    throw DataError("datagram of " + std::to_string(datagram.size()) + " bytes is shorter than the header");
  if (std::memcmp(datagram.data(), kPacketMagic, 4) != 0) throw DataError("bad packet magic");
  bytes::Reader r(datagram.subspan(4));
  FramePacket p;
  const std::uint8_t version = r.u8();
  if (version != kVersion) throw DataError("unsupported packet version " + std::to_string(version));
  p.channels = r.u8();
  if (p.channels != 2) throw DataError("packet declares " + std::to_string(p.channels) + " channels");
  p.codec_id = r.u8();
  r.u8();
  p.sequence = r.u32();
  p.timestamp_samples = r.u64();
  const std::uint32_t len = r.u32();
  if (len != r.remaining())
    throw DataError("payload length field " + std::to_string(len) + " disagrees with datagram size");
  p.payload.assign(datagram.begin() + kHeaderSize, datagram.end());
  return p;
}

FrameEncoder::FrameEncoder(const StreamConfig& cfg, Codec& codec, std::size_t max_payload,
                           std::uint32_t first_sequence)
    : cfg_(cfg), codec_(codec), max_payload_(max_payload), next_seq_(first_sequence) {}

FramePacket FrameEncoder::encode(const AudioBuffer& buf) {
  buf.validate(cfg_);
  FramePacket p;
  p.payload = codec_.encode(buf);
  if (p.payload.size() > max_payload_)
    throw ConfigError("encoded payload of " + std::to_string(p.payload.size()) +
                      " bytes exceeds the " + std::to_string(max_payload_) + "-byte budget");
  p.codec_id = codec_.id();
  p.sequence = next_seq_++;
  p.timestamp_samples = buf.frame_index * cfg_.buffer_size;
  return p;
}

// ---------------------------------------------------------------- jitter buffer

namespace {
constexpr std::size_t kHistory = 1024;
constexpr std::uint8_t kDelivered = 1;
constexpr std::uint8_t kConcealed = 2;
}  // namespace

std::string JitterCounters::to_line() const {
  std::ostringstream os;
  os << "received=" << received << " delivered=" << delivered << " lost=" << lost
     << " late=" << late << " duplicated=" << duplicated << " malformed=" << malformed
     << " resets=" << resets;
  return os.str();
}

JitterBuffer::JitterBuffer(const StreamConfig& cfg, const CodecRegistry& codecs, JitterConfig jcfg)
    : cfg_(cfg), codecs_(codecs), jcfg_(jcfg), history_(kHistory, 0) {}

void JitterBuffer::start_stream(const FramePacket& pkt) {
  started_ = true;
  next_slot_ = 0;
  max_slot_ = 0;
  next_seq_ = pkt.sequence;
  base_timestamp_ = pkt.timestamp_samples;
  pending_.clear();
  std::fill(history_.begin(), history_.end(), 0);
}

void JitterBuffer::anchor(std::uint32_t first_sequence, std::uint64_t first_timestamp) {
  FramePacket p;
  p.sequence = first_sequence;
  p.timestamp_samples = first_timestamp;
  start_stream(p);
}

PlayoutBuffer JitterBuffer::make_slot(std::uint64_t slot) {
  PlayoutBuffer out;
  out.sequence = next_seq_;
  out.stream_timestamp = base_timestamp_ + slot * cfg_.buffer_size;
  const auto it = pending_.find(slot);
  if (it != pending_.end()) {
    try {
      out.buffer = codecs_.get(it->second.codec_id).decode(it->second.payload, cfg_);
      out.stream_timestamp = it->second.timestamp_samples;
      ++counters_.delivered;
      history_[slot % kHistory] = kDelivered;
    } catch (const Error&) {
      // Undecodable payload: count it and fall through to concealment.
      ++counters_.malformed;
      out.concealed = true;
    }
    pending_.erase(it);
  } else {
    out.concealed = true;
  }
  if (out.concealed) {
    out.buffer = AudioBuffer(cfg_.buffer_size, cfg_.sample_rate_hz);
    ++counters_.lost;
    history_[slot % kHistory] = kConcealed;
  }
  out.buffer.frame_index = playout_index_++;
  out.stream_reset = pending_reset_flag_;
  pending_reset_flag_ = false;
  return out;
}

void JitterBuffer::play_until(std::uint64_t slot_exclusive, std::vector<PlayoutBuffer>& out) {
  while (next_slot_ < slot_exclusive) {
    history_[(next_slot_ + kHistory / 2) % kHistory] = 0;  // clear stale entries ahead
    out.push_back(make_slot(next_slot_));
    ++next_slot_;
    ++next_seq_;
  }
}

std::vector<PlayoutBuffer> JitterBuffer::receive(const FramePacket& pkt) {
  std::vector<PlayoutBuffer> out;
  ++counters_.received;
  if (!codecs_.contains(pkt.codec_id)) {
    ++counters_.malformed;
    return out;
  }
  if (!started_) start_stream(pkt);

  auto diff = static_cast<std::int64_t>(static_cast<std::int32_t>(pkt.sequence - next_seq_));
  if (diff < -jcfg_.reset_behind || diff > jcfg_.reset_ahead) {
    // Sender restarted: drain what we hold, then begin a fresh stream.
    play_until(max_slot_ + 1 > next_slot_ ? max_slot_ + 1 : next_slot_, out);
    ++counters_.resets;
    start_stream(pkt);
    pending_reset_flag_ = true;
    diff = 0;
  }
  if (diff < 0) {
    const std::uint64_t slot = next_slot_ - static_cast<std::uint64_t>(-diff);
    if (history_[slot % kHistory] == kDelivered)
      ++counters_.duplicated;
    else
      ++counters_.late;
    return out;
  }
  const std::uint64_t slot = next_slot_ + static_cast<std::uint64_t>(diff);
  if (pending_.count(slot) != 0) {
    ++counters_.duplicated;
    return out;
  }
  pending_.emplace(slot, pkt);
  max_slot_ = std::max(max_slot_, slot);
  if (max_slot_ >= jcfg_.depth) play_until(max_slot_ - jcfg_.depth + 1, out);
  return out;
}

std::vector<PlayoutBuffer> JitterBuffer::receive_datagram(std::span<const std::uint8_t> datagram) {
  FramePacket pkt;
  try {
    pkt = FramePacket::parse(datagram);
  } catch (const Error&) {
    ++counters_.received;
    ++counters_.malformed;
    return {};
  }
  return receive(pkt);
}

std::vector<PlayoutBuffer> JitterBuffer::flush() {
  std::vector<PlayoutBuffer> out;
  if (started_ && !pending_.empty()) play_until(max_slot_ + 1, out);
  return out;
}

std::vector<PlayoutBuffer> JitterBuffer::flush_through(std::uint64_t count) {
  std::vector<PlayoutBuffer> out;
  if (!started_) {
    started_ = true;
    std::fill(history_.begin(), history_.end(), 0);
  }
  play_until(count, out);
  return out;
}

// ---------------------------------------------------------------- impairment

void ImpairmentConfig::validate() const {
  if (loss_rate < 0.0 || loss_rate > 1.0) throw ConfigError("loss rate must be in [0, 1]");
  if (reorder_prob < 0.0 || reorder_prob > 1.0)
    throw ConfigError("reorder probability must be in [0, 1]");
  if (jitter_ms < 0.0) throw ConfigError("jitter must be non-negative");
}

std::vector<TimedPacket> impair(const std::vector<FramePacket>& packets, double period_s,
                                const ImpairmentConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<TimedPacket> out;
  out.reserve(packets.size());
  for (std::size_t i = 0; i < packets.size(); ++i) {
    // Three draws per packet whatever the outcome.
    const double u_loss = rng.uniform();
    const double u_reorder = rng.uniform();
    const double u_jitter = rng.uniform();
    if (u_loss < cfg.loss_rate) continue;
    TimedPacket tp;
    tp.packet = packets[i];
    tp.send_time_s = static_cast<double>(i) * period_s;
    tp.arrival_time_s = tp.send_time_s + u_jitter * cfg.jitter_ms * 1e-3;
    if (u_reorder < cfg.reorder_prob) tp.arrival_time_s += 1.5 * period_s;
    out.push_back(std::move(tp));
  }
  std::stable_sort(out.begin(), out.end(), [](const TimedPacket& a, const TimedPacket& b) {
    return a.arrival_time_s < b.arrival_time_s;
  });
  return out;
}

}  // namespace texsense
