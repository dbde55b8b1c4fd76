#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "texsense/dataset.hpp"
#include "texsense/engine.hpp"
#include "texsense/model.hpp"
#include "texsense/transport.hpp"
#include "texsense/wav.hpp"

namespace texsense {

/// Chunk-level results over contact chunks (true label Rough or Smooth).
/// Predictions may be Rough, Smooth or NonValid; NonValid counts as a miss.
struct EvalReport {
  // counts[true][predicted]; true in {Rough, Smooth}, predicted in all three classes
  std::array<std::array<std::uint64_t, kNumClasses>, 2> counts{};
  std::uint64_t non_contact_chunks = 0;

  std::uint64_t contact_total() const;
  std::uint64_t class_total(TextureLabel t) const;
  /// Cell as a fraction of all contact chunks.
  double fraction(TextureLabel truth, ClassIndex predicted) const;
  /// Correctly identified chunks / chunks of that class.
  double accuracy(TextureLabel t) const;
  /// Smooth chunks classified rough / smooth chunks.
  double false_positive_rate() const;

  /// Plain-text report: 2x2 confusion matrix in percent of contact chunks,
  /// the non-valid column, per-class accuracy and false-positive rate.
  std::string to_table() const;
  std::string to_json() const;
};

using ChunkPredictor = std::function<ClassIndex(const LabeledChunk&)>;

EvalReport evaluate(const LabeledChunkSet& set, const ChunkPredictor& predict);
EvalReport evaluate(const ModelParams& model, const LabeledChunkSet& set);

struct SimulationConfig {
  EngineConfig engine;
  /// Route buffers through encode -> impairment -> jitter buffer.
  bool use_transport = false;
  ImpairmentConfig impairment;
  JitterConfig jitter;
  double network_delay_s = 0.0;
};

struct SimulationResult {
  std::vector<Decision> decisions;
  std::vector<float> oscillator;
  std::size_t buffers = 0;
  LatencyBudget budget;
  /// From per-buffer timestamp bookkeeping: capture start of the oldest
  /// sample in a buffer to the start of the block it influences.
  double measured_latency_s = 0.0;
  double max_inference_s = 0.0;
  std::optional<JitterCounters> transport;
};

/// Runs the whole chain offline over a two-channel recording.
SimulationResult simulate(const WavData& input, const ModelParams& model,
                          const SimulationConfig& cfg = {});

/// Decision timeline, one tab-separated record per analysis window:
/// timestamp_s, class, p_rough, p_smooth, p_nonvalid, piezo_dbfs.
std::string format_timeline(const std::vector<Decision>& decisions);
std::string timeline_header();
std::string timeline_row(const Decision& d);

}  // namespace texsense
