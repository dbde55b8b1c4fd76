#pragma once

#include <optional>
#include <string>
#include <vector>

#include "texsense/chunk_ring.hpp"
#include "texsense/features.hpp"
#include "texsense/gate_synth.hpp"
#include "texsense/model.hpp"
#include "texsense/wav.hpp"

namespace texsense {

struct EngineConfig {
  StreamConfig stream;
  FeatureConfig features;
  GateConfig gate;
  TargetConfig targets;
  OscillatorConfig oscillator;
};

/// Static latency account of the audio path, excluding computation time.
struct LatencyBudget {
  double capture_buffer_s = 0.0;   // robot-side buffer fill
  double playback_buffer_s = 0.0;  // operator-side output buffer
  double jitter_buffer_s = 0.0;    // receiver hold-back, if transport is in the loop
  double network_s = 0.0;

  double total_s() const { return capture_buffer_s + playback_buffer_s + jitter_buffer_s + network_s; }
  std::string to_text() const;
};

LatencyBudget latency_budget(const StreamConfig& stream, double jitter_buffer_s = 0.0,
                             double network_s = 0.0);

/// Output of one capture period.
struct EngineStep {
  std::optional<Decision> decision;  // empty during warm-up
  std::vector<float> output;         // one buffer of oscillator signal
};

/// Operator-side chain: ring buffer, features, classifier, contact gate and
/// oscillator. One call per received buffer; decisions update the targets
/// the next rendered block uses. Not thread-safe; the model is shared read-only.
class OperatorEngine {
 public:
  /// Throws FingerprintError if `model` was trained for a different feature layout.
  OperatorEngine(const ModelParams& model, const EngineConfig& cfg = {});

  EngineStep process(const AudioBuffer& buf);

  const EngineConfig& config() const { return cfg_; }
  const Oscillator& oscillator() const { return osc_; }
  std::size_t decisions() const { return decisions_; }
  std::size_t buffers() const { return buffers_; }
  /// Slowest single classification so far, in seconds.
  double max_inference_s() const { return max_inference_s_; }
  std::uint64_t warmup_buffers() const { return ring_.warmup_buffers(); }
  /// Restart after a stream discontinuity; the oscillator keeps running.
  void reset_stream();

 private:
  const ModelParams& model_;
  EngineConfig cfg_;
  ChunkRing ring_;
  Oscillator osc_;
  std::vector<float> features_;
  std::size_t decisions_ = 0;
  std::size_t buffers_ = 0;
  double max_inference_s_ = 0.0;
};

/// Cuts a two-channel recording (piezo, MEMS) into whole buffers; a partial
/// final buffer is dropped. Throws DataError on channel count or rate mismatch.
std::vector<AudioBuffer> split_into_buffers(const WavData& input, const StreamConfig& stream);

}  // namespace texsense
