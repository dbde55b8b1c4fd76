#include "texsense/engine.hpp"

#include <chrono>
#include <cstdio>

namespace texsense {

std::string LatencyBudget::to_text() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "capture_buffer_ms\t%.3f\nplayback_buffer_ms\t%.3f\njitter_buffer_ms\t%.3f\n"
                "network_ms\t%.3f\ntotal_ms\t%.3f\n",
                capture_buffer_s * 1e3, playback_buffer_s * 1e3, jitter_buffer_s * 1e3,
                network_s * 1e3, total_s() * 1e3);
  return buf;
}

LatencyBudget latency_budget(const StreamConfig& stream, double jitter_buffer_s, double network_s) {
  LatencyBudget b;
  b.capture_buffer_s = stream.buffer_duration_s();
  b.playback_buffer_s = stream.buffer_duration_s();
  b.jitter_buffer_s = jitter_buffer_s;
  b.network_s = network_s;
  return b;
}

OperatorEngine::OperatorEngine(const ModelParams& model, const EngineConfig& cfg)
    : model_(model), cfg_(cfg), ring_(cfg.stream), osc_(cfg.oscillator) {
  cfg_.gate.validate();
  check_fingerprint(model.fingerprint, cfg_.features);
  features_.resize(cfg_.features.dim());
}

EngineStep OperatorEngine::process(const AudioBuffer& buf) {
  EngineStep step;
  ++buffers_;
  if (auto window = ring_.push(buf)) {
    const Loudness loud = rms_dbfs(buf.piezo);
    const auto t0 = std::chrono::steady_clock::now();
    featurize_into(window->piezo, window->mems, cfg_.features, features_);
    const ClassScores scores = model_.classify(features_);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (dt > max_inference_s_) max_inference_s_ = dt;
    step.decision = gate(scores, loud, cfg_.gate, window->end_time_s);
    osc_.set_targets(decision_to_targets(*step.decision, cfg_.targets));
    ++decisions_;
  }
  step.output.resize(cfg_.stream.buffer_size);
  osc_.render(step.output);
  return step;
}

void OperatorEngine::reset_stream() { ring_.reset(); }

std::vector<AudioBuffer> split_into_buffers(const WavData& input, const StreamConfig& stream) {
  if (input.num_channels() != 2)
    throw DataError("input must have 2 channels, found " + std::to_string(input.num_channels()));
  if (input.sample_rate_hz != stream.sample_rate_hz)
    throw DataError("input is " + std::to_string(input.sample_rate_hz) + " Hz, stream expects " +
                    std::to_string(stream.sample_rate_hz) + " Hz");
  const std::size_t bs = stream.buffer_size;
  std::vector<AudioBuffer> out;
  for (std::size_t b = 0; b < input.num_frames() / bs; ++b) {
    AudioBuffer buf(bs, stream.sample_rate_hz, b);
    const auto off = static_cast<std::ptrdiff_t>(b * bs);
    std::copy_n(input.channels[0].begin() + off, bs, buf.piezo.begin());
    std::copy_n(input.channels[1].begin() + off, bs, buf.mems.begin());
    out.push_back(std::move(buf));
  }
  return out;
}

}  // namespace texsense
