#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "texsense/engine.hpp"
#include "texsense/transport.hpp"
#include "texsense/udp.hpp"
#include "texsense/wav.hpp"

namespace texsense {

struct SenderConfig {
  StreamConfig stream;
  Endpoint destination;
  /// 1.0 sends at the capture rate; 0 sends as fast as possible.
  double speed = 1.0;
  std::uint32_t first_sequence = 0;
  /// Applied before sending (drops, reorders, delays).
  ImpairmentConfig impairment;
};

struct SenderReport {
  std::size_t buffers = 0;
  std::size_t datagrams_sent = 0;
};

/// Streams a two-channel recording as one datagram per buffer.
SenderReport run_sender(const WavData& input, const SenderConfig& cfg);

struct ReceiverConfig {
  EngineConfig engine;
  JitterConfig jitter;
  /// Stop once nothing has arrived for this long after the first datagram.
  double idle_timeout_s = 1.0;
  /// Give up if the first datagram has not arrived within this time.
  double start_timeout_s = 30.0;
  /// Stop after this many playout slots (0 = unbounded).
  std::size_t max_buffers = 0;
  /// Capacity of the intake-to-consumer queue, in datagrams.
  std::size_t queue_capacity = 1024;
  /// Stats line cadence in playout buffers (0 = never).
  std::size_t stats_every = 0;
  double network_delay_s = 0.0;
};

struct ReceiverReport {
  std::vector<Decision> decisions;
  std::vector<float> oscillator;
  std::size_t buffers = 0;
  std::size_t stream_resets = 0;
  std::size_t queue_overflows = 0;
  JitterCounters counters;
  LatencyBudget budget;
  double max_inference_s = 0.0;
};

struct ReceiverHooks {
  std::function<void(const Decision&)> on_decision;
  std::function<void(const std::string&)> on_stats;
  std::function<void(const std::string&)> on_event;
  /// Set from another thread to end the session early.
  const std::atomic<bool>* stop = nullptr;
};

/// Socket intake runs on its own thread and hands datagrams to the calling
/// thread through a lock-free single-producer/single-consumer queue; the
/// calling thread owns the jitter buffer and the engine.
ReceiverReport run_receiver(UdpSocket& socket, const ModelParams& model, const ReceiverConfig& cfg,
                            const ReceiverHooks& hooks = {});

/// Rolling statistics line for the receiver.
std::string receiver_stats_line(std::size_t buffers, std::size_t decisions, const JitterCounters& c,
                                double latency_s);

}  // namespace texsense
