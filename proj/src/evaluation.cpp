#include "texsense/evaluation.hpp"

#include <cstdio>
#include <json.hpp>
#include <sstream>

namespace texsense {

namespace {
std::size_t row(TextureLabel t) { return t == TextureLabel::Rough ? 0 : 1; }
std::size_t col(ClassIndex c) { return static_cast<std::size_t>(c); }
}  // namespace

std::uint64_t EvalReport::class_total(TextureLabel t) const {
  const auto& r = counts[row(t)];
  return r[0] + r[1] + r[2];
}

std::uint64_t EvalReport::contact_total() const {
  return class_total(TextureLabel::Rough) + class_total(TextureLabel::Smooth);
}

double EvalReport::fraction(TextureLabel truth, ClassIndex predicted) const {
  const auto total = contact_total();
  return total == 0 ? 0.0 : static_cast<double>(counts[row(truth)][col(predicted)]) / static_cast<double>(total);
}

double EvalReport::accuracy(TextureLabel t) const {
  const auto total = class_total(t);
  const ClassIndex hit = t == TextureLabel::Rough ? ClassIndex::Rough : ClassIndex::Smooth;
  return total == 0 ? 0.0 : static_cast<double>(counts[row(t)][col(hit)]) / static_cast<double>(total);
}

double EvalReport::false_positive_rate() const {
  const auto total = class_total(TextureLabel::Smooth);
  return total == 0 ? 0.0
                    : static_cast<double>(counts[row(TextureLabel::Smooth)][col(ClassIndex::Rough)]) /
                          static_cast<double>(total);
}

std::string EvalReport::to_table() const {
  char buf[1024];
  auto pct = [&](TextureLabel t, ClassIndex c) { return 100.0 * fraction(t, c); };
  std::snprintf(
      buf, sizeof buf,
      "contact chunks: %llu (non-contact chunks excluded: %llu)\n"
      "confusion matrix, %% of contact chunks\n"
      "truth \\ predicted\trough\tsmooth\tnon_valid\n"
      "rough\t%.1f\t%.1f\t%.1f\n"
      "smooth\t%.1f\t%.1f\t%.1f\n"
      "accuracy_rough\t%.3f\n"
      "accuracy_smooth\t%.3f\n"
      "false_positive_rate\t%.3f\n",
      static_cast<unsigned long long>(contact_total()),
      static_cast<unsigned long long>(non_contact_chunks), pct(TextureLabel::Rough, ClassIndex::Rough),
      pct(TextureLabel::Rough, ClassIndex::Smooth), pct(TextureLabel::Rough, ClassIndex::NonValid),
      pct(TextureLabel::Smooth, ClassIndex::Rough), pct(TextureLabel::Smooth, ClassIndex::Smooth),
      pct(TextureLabel::Smooth, ClassIndex::NonValid), accuracy(TextureLabel::Rough),
      accuracy(TextureLabel::Smooth), false_positive_rate());
  return buf;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["counts"] = {{"rough", counts[0]}, {"smooth", counts[1]}};
  j["columns"] = {"rough", "smooth", "non_valid"};
  j["contact_chunks"] = contact_total();
  j["non_contact_chunks"] = non_contact_chunks;
  j["accuracy_rough"] = accuracy(TextureLabel::Rough);
  j["accuracy_smooth"] = accuracy(TextureLabel::Smooth);
  j["false_positive_rate"] = false_positive_rate();
  return j.dump(2);
}

EvalReport evaluate(const LabeledChunkSet& set, const ChunkPredictor& predict) {
  EvalReport r;
  for (const auto& c : set.chunks) {
    if (c.label == ClassIndex::NonValid) {
      ++r.non_contact_chunks;
      continue;
    }
    const TextureLabel truth = c.label == ClassIndex::Rough ? TextureLabel::Rough : TextureLabel::Smooth;
    ++r.counts[row(truth)][col(predict(c))];
  }
  return r;
}

EvalReport evaluate(const ModelParams& model, const LabeledChunkSet& set) {
  check_fingerprint(model.fingerprint, set.features);
  return evaluate(set, [&](const LabeledChunk& c) { return model.classify(c.features).argmax(); });
}

// ---------------------------------------------------------------- simulation

SimulationResult simulate(const WavData& input, const ModelParams& model, const SimulationConfig& cfg) {
  const StreamConfig& stream = cfg.engine.stream;
  SimulationResult result;
  OperatorEngine engine(model, cfg.engine);
  const std::size_t bs = stream.buffer_size;
  const double period = stream.buffer_duration_s();

  std::vector<AudioBuffer> captured = split_into_buffers(input, stream);
  const std::size_t nbuf = captured.size();

  std::vector<AudioBuffer> received;
  double jitter_s = 0.0;
  if (cfg.use_transport) {
    auto codecs = CodecRegistry::with_defaults();
    FrameEncoder enc(stream, codecs.get(PassthroughCodec::kId));
    std::vector<FramePacket> packets;
    packets.reserve(nbuf);
    for (const auto& b : captured) packets.push_back(enc.encode(b));
    JitterBuffer jb(stream, codecs, cfg.jitter);
    jb.anchor(0, 0);
    jitter_s = jb.added_latency_s();
    auto take = [&](std::vector<PlayoutBuffer>&& out) {
      for (auto& p : out) received.push_back(std::move(p.buffer));
    };
    for (const auto& tp : impair(packets, period, cfg.impairment)) take(jb.receive(tp.packet));
    take(jb.flush_through(nbuf));
    result.transport = jb.counters();
  } else {
    received = std::move(captured);
  }

  result.budget = latency_budget(stream, jitter_s, cfg.network_delay_s);
  result.oscillator.reserve(received.size() * bs);
  double latency_acc = 0.0;
  for (const auto& buf : received) {
    // Stream-clock bookkeeping for buffer k: its first sample is captured at
    // k*T, the buffer is complete at (k+1)*T, reaches the operator after the
    // network and hold-back delays, and the block rendered from it starts
    // playing one output buffer later.
    const double capture_start = static_cast<double>(buf.frame_index) * period;
    const double available = capture_start + period + cfg.network_delay_s + jitter_s;
    const double playback_start = available + result.budget.playback_buffer_s;
    latency_acc += playback_start - capture_start;

    EngineStep step = engine.process(buf);
    if (step.decision) result.decisions.push_back(*step.decision);
    result.oscillator.insert(result.oscillator.end(), step.output.begin(), step.output.end());
  }
  result.buffers = received.size();
  result.measured_latency_s = received.empty() ? 0.0 : latency_acc / static_cast<double>(received.size());
  result.max_inference_s = engine.max_inference_s();
  return result;
}

std::string timeline_header() { return "timestamp_s\tclass\tp_rough\tp_smooth\tp_nonvalid\tpiezo_dbfs\n"; }

std::string timeline_row(const Decision& d) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.6f\t%s\t%.6f\t%.6f\t%.6f\t%.2f\n", d.timestamp_s,
                to_string(d.cls).c_str(), d.probabilities[0], d.probabilities[1], d.probabilities[2],
                d.piezo_loudness.clamped());
  return buf;
}

std::string format_timeline(const std::vector<Decision>& decisions) {
  std::string out = timeline_header();
  for (const auto& d : decisions) out += timeline_row(d);
  return out;
}

}  // namespace texsense
