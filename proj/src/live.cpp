#include "texsense/live.hpp"

#include <array>
#include <boost/lockfree/spsc_queue.hpp>
#include <chrono>
#include <cstdio>
#include <memory>
#include <thread>

#include "texsense/error.hpp"

namespace texsense {

namespace {

using Clock = std::chrono::steady_clock;

struct Datagram {
  static constexpr std::size_t kCapacity = FramePacket::kHeaderSize + FrameEncoder::kDefaultMaxPayload;
  std::uint32_t size = 0;
  std::array<std::uint8_t, kCapacity> bytes{};
};

}  // namespace

SenderReport run_sender(const WavData& input, const SenderConfig& cfg) {
  cfg.stream.validate();
  cfg.impairment.validate();
  if (cfg.speed < 0.0) throw ConfigError("sender speed must be >= 0");
  const auto buffers = split_into_buffers(input, cfg.stream);

  auto codecs = CodecRegistry::with_defaults();
  FrameEncoder enc(cfg.stream, codecs.get(PassthroughCodec::kId), FrameEncoder::kDefaultMaxPayload,
                   cfg.first_sequence);
  std::vector<FramePacket> packets;
  packets.reserve(buffers.size());
  for (const auto& b : buffers) packets.push_back(enc.encode(b));
  const auto schedule = impair(packets, cfg.stream.buffer_duration_s(), cfg.impairment);

  UdpSocket sock = UdpSocket::open();
  SenderReport report;
  report.buffers = buffers.size();
  const auto start = Clock::now();
  for (const auto& tp : schedule) {
    if (cfg.speed > 0.0) {
      const auto due = start + std::chrono::duration_cast<Clock::duration>(
                                   std::chrono::duration<double>(tp.arrival_time_s / cfg.speed));
      std::this_thread::sleep_until(due);
    }
    sock.send_to(cfg.destination, tp.packet.serialize());
    ++report.datagrams_sent;
  }
  return report;
}

std::string receiver_stats_line(std::size_t buffers, std::size_t decisions, const JitterCounters& c,
                                double latency_s) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "buffers=%zu decisions=%zu latency_ms=%.2f ", buffers, decisions,
                latency_s * 1e3);
  return buf + c.to_line();
}

ReceiverReport run_receiver(UdpSocket& socket, const ModelParams& model, const ReceiverConfig& cfg,
                            const ReceiverHooks& hooks) {
  if (cfg.queue_capacity < 2) throw ConfigError("receiver queue capacity must be >= 2");
  if (cfg.idle_timeout_s <= 0.0) throw ConfigError("receiver idle timeout must be > 0");

  const StreamConfig& stream = cfg.engine.stream;
  auto codecs = CodecRegistry::with_defaults();
  JitterBuffer jb(stream, codecs, cfg.jitter);
  OperatorEngine engine(model, cfg.engine);

  ReceiverReport report;
  report.budget = latency_budget(stream, jb.added_latency_s(), cfg.network_delay_s);

  boost::lockfree::spsc_queue<Datagram> queue(cfg.queue_capacity);
  std::atomic<bool> intake_done{false};
  std::atomic<bool> consumer_done{false};
  std::atomic<std::size_t> overflows{0};
  std::exception_ptr intake_error;

  // Producer: socket -> queue. Owns no pipeline state.
  std::thread intake([&] {
    try {
      auto dg = std::make_unique<Datagram>();
      bool seen_any = false;
      auto last = Clock::now();
      while (!consumer_done.load(std::memory_order_acquire) &&
             !(hooks.stop && hooks.stop->load(std::memory_order_acquire))) {
        const auto n = socket.receive(dg->bytes, 0.05);
        const auto now = Clock::now();
        if (!n) {
          const double idle = std::chrono::duration<double>(now - last).count();
          if (seen_any && idle >= cfg.idle_timeout_s) break;
          if (!seen_any && idle >= cfg.start_timeout_s)
            throw NetworkError("no datagram arrived on " + socket.description() + " within " +
                               std::to_string(cfg.start_timeout_s) + " s");
          continue;
        }
        seen_any = true;
        last = now;
        dg->size = static_cast<std::uint32_t>(*n);
        if (!queue.push(*dg)) overflows.fetch_add(1, std::memory_order_relaxed);
      }
    } catch (...) {
      intake_error = std::current_exception();
    }
    intake_done.store(true, std::memory_order_release);
  });

  auto consume = [&](std::vector<PlayoutBuffer>&& slots) {
    for (auto& slot : slots) {
      if (cfg.max_buffers != 0 && report.buffers >= cfg.max_buffers) return;
      if (slot.stream_reset) {
        engine.reset_stream();
        ++report.stream_resets;
        if (hooks.on_event)
          hooks.on_event("stream reset at playout buffer " + std::to_string(report.buffers) +
                         " (sequence " + std::to_string(slot.sequence) + ")");
      }
      EngineStep step = engine.process(slot.buffer);
      ++report.buffers;
      if (step.decision) {
        if (hooks.on_decision) hooks.on_decision(*step.decision);
        report.decisions.push_back(*step.decision);
      }
      report.oscillator.insert(report.oscillator.end(), step.output.begin(), step.output.end());
      if (cfg.stats_every != 0 && report.buffers % cfg.stats_every == 0 && hooks.on_stats)
        hooks.on_stats(receiver_stats_line(report.buffers, report.decisions.size(), jb.counters(),
                                           report.budget.total_s()));
    }
  };

  // Consumer: queue -> jitter buffer -> engine, on the calling thread.
  auto dg = std::make_unique<Datagram>();
  try {
    for (;;) {
      if (cfg.max_buffers != 0 && report.buffers >= cfg.max_buffers) break;
      if (queue.pop(*dg)) {
        consume(jb.receive_datagram(std::span<const std::uint8_t>(dg->bytes.data(), dg->size)));
        continue;
      }
      if (intake_done.load(std::memory_order_acquire)) {
        // Drain anything pushed between the failed pop and the flag.
        if (queue.read_available() > 0) continue;
        break;
      }
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
    if (cfg.max_buffers == 0 || report.buffers < cfg.max_buffers) consume(jb.flush());
  } catch (...) {
    consumer_done.store(true, std::memory_order_release);
    intake.join();
    throw;
  }
  consumer_done.store(true, std::memory_order_release);
  intake.join();
  if (intake_error) std::rethrow_exception(intake_error);

  report.counters = jb.counters();
  report.queue_overflows = overflows.load();
  report.max_inference_s = engine.max_inference_s();
  if (hooks.on_stats)
    hooks.on_stats(receiver_stats_line(report.buffers, report.decisions.size(), report.counters,
                                       report.budget.total_s()));
  return report;
}

}  // namespace texsense
