// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "texsense/dataset.hpp"
#include "texsense/decimator.hpp"
#include "texsense/evaluation.hpp"
#include "texsense/features.hpp"
#include "texsense/fft.hpp"
#include "texsense/gate_synth.hpp"
#include "texsense/live.hpp"
#include "texsense/mlp.hpp"
#include "texsense/synth_signals.hpp"
#include "texsense/trainer.hpp"

using namespace texsense;
using Clock = std::chrono::steady_clock;

namespace tol {
constexpr double kFftRelative = 1e-6;
constexpr double kStopbandDb = 60.0;
constexpr double kDspSeconds = 10.0;
constexpr double kGradRelative = 1e-3;
constexpr double kGradEps = 1e-4;
constexpr double kGradSeconds = 30.0;
constexpr double kHeldOutAccuracy = 0.95;
constexpr double kTrainSeconds = 300.0;
constexpr double kPublishedRough = 0.476;
constexpr double kPublishedSmooth = 0.836;
constexpr double kPublishedTolerance = 0.10;
constexpr double kLatencyMs = 21.3;
constexpr double kLatencyToleranceMs = 0.1;
constexpr double kInferenceMs = 2.0;
constexpr double kGateSeconds = 5.0;
constexpr double kFreqHz = 1.0;
constexpr double kRoughLevelDb = 0.1;
constexpr double kSmoothLevelDb = 0.5;
constexpr double kTransportSeconds = 30.0;
}  // namespace tol

namespace {

struct Outcome {
  enum class Status { Pass, Fail, Skipped } status = Status::Fail;
  std::string detail;
};

Outcome pass(std::string d) { return {Outcome::Status::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::Status::Fail, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return ok ? pass(std::move(d)) : fail(std::move(d)); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1

Outcome dsp_oracle() {
  const auto t0 = Clock::now();
  Rng rng(1);
  double worst_fft = 0.0;
  for (int w = 0; w < 100; ++w) {
    std::vector<double> x(512);
    for (auto& v : x) v = rng.uniform(-1, 1);
    const auto fast = real_fft_magnitude(x);
    const auto slow = oracle::dft_magnitude(x);
    const double peak = *std::max_element(slow.begin(), slow.end());
    for (std::size_t k = 0; k < fast.size(); ++k)
      worst_fft = std::max(worst_fft, std::fabs(fast[k] - slow[k]) / peak);
  }

  const StreamConfig stream;
  const auto taps = design_lowpass(reference_lowpass(stream));
  auto level = [&](double f) {
    std::vector<float> x(stream.sample_rate_hz);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = static_cast<float>(0.5 * std::sin(2 * std::numbers::pi * f * static_cast<double>(i) /
                                               stream.sample_rate_hz));
    FirDecimator d(taps, stream.decimation_factor());
    std::vector<float> out;
    d.process(x, out);
    const std::size_t settle = taps.size() / static_cast<std::size_t>(stream.decimation_factor()) + 1;
    return oracle::rms(std::span<const float>(out.data() + settle, out.size() - settle));
  };
  const double ref = level(200.0);
  double worst_db = -1e9, worst_f = 0.0;
  for (double f = 1010.0; f < stream.sample_rate_hz / 2.0; f += 50.0) {
    const double db = 20 * std::log10(level(f) / ref);
    if (db > worst_db) {
      worst_db = db;
      worst_f = f;
    }
  }
  const double elapsed = seconds_since(t0);
  const bool ok = worst_fft < tol::kFftRelative && -worst_db >= tol::kStopbandDb && elapsed < tol::kDspSeconds;
  return verdict(ok, fmt("fft max rel err %.2e (< %.0e); worst stopband %.1f dB at %.0f Hz (>= %.0f dB); %.1f s",
                         worst_fft, tol::kFftRelative, -worst_db, worst_f, tol::kStopbandDb, elapsed));
}

// ---------------------------------------------------------------- 2

Outcome gradient_check() {
  const auto t0 = Clock::now();
  MlpArchitecture arch;
  arch.input_dim = 8;
  arch.hidden_width = 16;
  arch.hidden_layers = 4;
  arch.residual_first = 2;
  arch.residual_last = 3;
  arch.output_dim = 3;
  Rng rng(2024);
  double worst = 0.0;
  std::size_t probes = 0, straddling = 0;
  for (int draw = 0; draw < 20; ++draw) {
    auto m = Mlp<double>::he_uniform(arch, rng);
    for (auto& l : m.layers())
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = rng.uniform(-0.2, 0.2);
    Mlp<double>::Matrix x(8, 12);
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = rng.uniform(-1, 1);
    std::vector<int> labels(12);
    for (auto& l : labels) l = static_cast<int>(rng.below(3));
    auto grad = m.loss_and_grad(x, labels).grad;
    std::vector<double*> params, grads;
    m.for_each_tensor([&](std::span<double> t) {
      for (auto& v : t) params.push_back(&v);
    });
    grad.for_each_tensor([&](std::span<double> t) {
      for (auto& v : t) grads.push_back(&v);
    });
    for (std::size_t i = 0; i < params.size(); ++i) {
      ++probes;
      const double saved = *params[i];
      *params[i] = saved + tol::kGradEps;
      const double up = m.loss_and_grad(x, labels).loss;
      const auto pattern_up = oracle::relu_pattern(m, x);
      *params[i] = saved - tol::kGradEps;
      const double down = m.loss_and_grad(x, labels).loss;
      const auto pattern_down = oracle::relu_pattern(m, x);
      *params[i] = saved;
      if (pattern_up != pattern_down) {
        ++straddling;
        continue;
      }
      const double numeric = (up - down) / (2 * tol::kGradEps);
      const double rel =
          std::fabs(*grads[i] - numeric) / std::max({std::fabs(*grads[i]), std::fabs(numeric), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  const double elapsed = seconds_since(t0);
  return verdict(worst < tol::kGradRelative && straddling * 100 < probes && elapsed < tol::kGradSeconds,
                 fmt("max rel err %.2e over 20 draws (< %.0e); %zu of %zu probes straddle a ReLU kink and are "
                     "excluded; %.1f s",
                     worst, tol::kGradRelative, straddling, probes, elapsed));
}

// ---------------------------------------------------------------- 3

Outcome synthetic_learning() {
  const auto t0 = Clock::now();
  const auto train_set = synth_dataset(7, 2000);
  const auto held_out = synth_dataset(8, 500);
  TrainConfig cfg;
  cfg.seed = 1;
  const auto result = train(cfg, train_set);
  const double acc = accuracy(result.model, held_out);
  const double elapsed = seconds_since(t0);
  return verdict(acc >= tol::kHeldOutAccuracy && elapsed < tol::kTrainSeconds,
                 fmt("held-out accuracy %.4f (>= %.2f); %d epochs, batch %zu, lr %.0e; loss %.3f -> %.3f; %.1f s",
                     acc, tol::kHeldOutAccuracy, cfg.epochs, cfg.batch_size, cfg.adam.learning_rate,
                     result.epoch_loss.front(), result.epoch_loss.back(), elapsed));
}

// ---------------------------------------------------------------- 4

Outcome published_replication() {
  const char* path = std::getenv("TEXSENSE_PUBLISHED_MANIFEST");
  if (!path || !*path)
    return {Outcome::Status::Skipped,
            "TEXSENSE_PUBLISHED_MANIFEST not set; replaced by criteria 1-3 and 5-7"};
  const auto t0 = Clock::now();
  const auto manifest = DatasetManifest::load(path);
  const auto train_in = ingest(manifest.only(Split::Train));
  const auto test_in = ingest(manifest.only(Split::Test));
  if (train_in.recordings.empty() || test_in.recordings.empty())
    return fail("manifest lacks usable train or test recordings");
  const auto mode = ThresholdMode::fixed(-26.0);
  const auto train_set = chunk_and_label(train_in.recordings, mode);
  const auto test_set = chunk_and_label(test_in.recordings, mode);
  TrainConfig cfg;
  cfg.seed = 1;
  const auto model = train(cfg, train_set).model;
  const auto rep = evaluate(model, test_set);
  const double r = rep.accuracy(TextureLabel::Rough), s = rep.accuracy(TextureLabel::Smooth);
  const auto fp = rep.counts[1][0];
  const bool fp_smallest = fp <= rep.counts[0][0] && fp <= rep.counts[0][1] && fp <= rep.counts[1][1];
  const bool ok = std::fabs(r - tol::kPublishedRough) <= tol::kPublishedTolerance &&
                  std::fabs(s - tol::kPublishedSmooth) <= tol::kPublishedTolerance && fp_smallest;
  return verdict(ok, fmt("rough %.3f (%.3f +- %.2f), smooth %.3f (%.3f +- %.2f), smooth-as-rough cell %s; %.1f s",
                         r, tol::kPublishedRough, tol::kPublishedTolerance, s, tol::kPublishedSmooth,
                         tol::kPublishedTolerance, fp_smallest ? "smallest" : "NOT smallest",
                         seconds_since(t0)));
}

// ---------------------------------------------------------------- 5

Outcome latency() {
  const StreamConfig stream;
  const double budget_ms = latency_budget(stream).total_s() * 1e3;

  // Timestamp bookkeeping through the offline pipeline, any model will do.
  Rng rng(5);
  MlpArchitecture arch;
  ModelParams model{Mlp<float>::he_uniform(arch, rng), FeatureConfig{}, {}};
  const auto sim = simulate(synth_recording({{SyntheticTexture::Rough, 2.0}}, 1), model);
  const double measured_ms = sim.measured_latency_s * 1e3;

  // Per-window inference: features plus forward pass.
  std::vector<float> piezo(512), mems(512), feats(FeatureConfig{}.dim());
  for (auto& v : piezo) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  for (auto& v : mems) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  std::vector<double> times;
  for (int i = 0; i < 1100; ++i) {
    const auto t0 = Clock::now();
    featurize_into(piezo, mems, FeatureConfig{}, feats);
    volatile double sink = model.classify(feats).log_probs[0];
    (void)sink;
    if (i >= 100) times.push_back(seconds_since(t0) * 1e3);
  }
  std::sort(times.begin(), times.end());
  const double median = times[times.size() / 2];
  const double p99 = times[times.size() * 99 / 100];
  const double headroom = stream.buffer_duration_s() * 1e3 / p99;
  const bool ok = std::fabs(budget_ms - tol::kLatencyMs) <= tol::kLatencyToleranceMs &&
                  std::fabs(measured_ms - tol::kLatencyMs) <= tol::kLatencyToleranceMs &&
                  p99 < tol::kInferenceMs;
  return verdict(ok, fmt("budget %.3f ms, measured %.3f ms (%.1f +- %.1f); inference median %.3f ms, p99 %.3f ms "
                         "(< %.1f), %.0fx headroom per buffer",
                         budget_ms, measured_ms, tol::kLatencyMs, tol::kLatencyToleranceMs, median, p99,
                         tol::kInferenceMs, headroom));
}

// ---------------------------------------------------------------- 6

Outcome gate_dominance() {
  const auto t0 = Clock::now();
  Rng rng(6);
  const GateConfig cfg;
  std::size_t violations = 0, at_threshold = 0;
  for (int i = 0; i < 10000; ++i) {
    double p[3];
    double sum = 0.0;
    for (double& v : p) sum += (v = rng.uniform(1e-6, 1.0));
    ClassScores s;
    for (int k = 0; k < 3; ++k) s.log_probs[static_cast<std::size_t>(k)] = std::log(p[k] / sum);
    double db = rng.uniform(-100.0, 0.0);
    if (i % 50 == 0) {
      db = cfg.threshold_dbfs;
      ++at_threshold;
    }
    const auto d = gate(s, Loudness{db, 512}, cfg);
    const DecisionClass expect = db <= cfg.threshold_dbfs ? DecisionClass::NoContact
                                 : s.log_probs[0] > s.log_probs[1] ? DecisionClass::Rough
                                                                    : DecisionClass::Smooth;
    violations += d.cls != expect;
  }
  const double elapsed = seconds_since(t0);
  return verdict(violations == 0 && elapsed < tol::kGateSeconds,
                 fmt("%zu violations in 10000 pairs (%zu exactly at -26 dBFS); %.2f s", violations, at_threshold,
                     elapsed));
}

// ---------------------------------------------------------------- 7

Outcome synthesis_targets() {
  TargetConfig hard;
  hard.mode = ModulationMode::Hard;
  auto targets = [&](DecisionClass c) {
    Decision d;
    d.cls = c;
    d.probabilities = {0.5, 0.5, 0.0};
    return decision_to_targets(d, hard);
  };
  std::string detail;
  bool ok = true;
  for (const auto cls : {DecisionClass::Rough, DecisionClass::Smooth}) {
    Oscillator osc;
    osc.render(targets(cls), 24000);  // settle
    const auto y = osc.render(targets(cls), 48000);
    const double f = oracle::peak_frequency(y, 48000, 35, 1000);
    const double lvl = 20 * std::log10(oracle::peak_abs(y));
    const bool rough = cls == DecisionClass::Rough;
    const double want_f = rough ? 60.0 : 120.0, want_l = rough ? 0.0 : -25.0;
    const double tol_l = rough ? tol::kRoughLevelDb : tol::kSmoothLevelDb;
    ok = ok && std::fabs(f - want_f) <= tol::kFreqHz && std::fabs(lvl - want_l) <= tol_l;
    detail += fmt("%s %.2f Hz %.2f dBFS; ", to_string(cls).c_str(), f, lvl);
  }

  // Switches: the per-sample change never exceeds what a continuous sine
  // with smoothed amplitude can produce.
  Oscillator osc;
  std::vector<float> y;
  const DecisionClass seq[] = {DecisionClass::Rough, DecisionClass::Smooth, DecisionClass::Rough,
                               DecisionClass::NoContact, DecisionClass::Smooth};
  for (const auto c : seq) {
    const auto part = osc.render(targets(c), 2400);
    y.insert(y.end(), part.begin(), part.end());
  }
  const double bound = 2 * std::numbers::pi * 120.0 / 48000 + (1.0 - osc.amp_pole()) + 1e-6;
  double worst_step = 0.0;
  for (std::size_t i = 1; i < y.size(); ++i) worst_step = std::max(worst_step, std::fabs(double(y[i]) - y[i - 1]));
  ok = ok && worst_step <= bound;
  detail += fmt("max step %.4f (<= %.4f); ", worst_step, bound);

  Oscillator one, blocks;
  const auto t = targets(DecisionClass::Smooth);
  const auto whole = one.render(t, 30000);
  blocks.set_targets(t);
  std::vector<float> pieces;
  Rng rng(7);
  while (pieces.size() < whole.size()) {
    std::vector<float> b(std::min<std::size_t>(1 + rng.below(1000), whole.size() - pieces.size()));
    blocks.render(b);
    pieces.insert(pieces.end(), b.begin(), b.end());
  }
  const bool exact = pieces == whole;
  ok = ok && exact;
  detail += exact ? "block-wise == one-shot" : "block-wise != one-shot";
  return verdict(ok, detail);
}

// ---------------------------------------------------------------- 8

Outcome transport() {
  const auto t0 = Clock::now();
  const StreamConfig stream;
  const auto input = synth_recording({{SyntheticTexture::Rough, 2.0}, {SyntheticTexture::Smooth, 2.0}}, 8);
  const auto buffers = split_into_buffers(input, stream);

  // Lossless loopback over UDP.
  auto rx = UdpSocket::bind(Endpoint{"127.0.0.1", 0});
  SenderConfig scfg;
  scfg.destination = Endpoint{"127.0.0.1", rx.local_port()};
  scfg.speed = 10.0;
  std::thread tx([&] { run_sender(input, scfg); });
  const auto codecs = CodecRegistry::with_defaults();
  JitterBuffer jb(stream, codecs);
  std::vector<PlayoutBuffer> out;
  std::vector<std::uint8_t> dg(FramePacket::kHeaderSize + FrameEncoder::kDefaultMaxPayload);
  while (auto n = rx.receive(dg, 2.0)) {
    for (auto& p : jb.receive_datagram(std::span<const std::uint8_t>(dg.data(), *n))) out.push_back(std::move(p));
    if (jb.counters().received == buffers.size()) break;
  }
  tx.join();
  for (auto& p : jb.flush()) out.push_back(std::move(p));
  bool exact = out.size() == buffers.size();
  for (std::size_t i = 0; exact && i < out.size(); ++i)
    exact = out[i].buffer.piezo == buffers[i].piezo && out[i].buffer.mems == buffers[i].mems;

  // Seeded 10 % loss: one decision per buffer period after warm-up.
  Rng rng(9);
  MlpArchitecture arch;
  ModelParams model{Mlp<float>::he_uniform(arch, rng), FeatureConfig{}, {}};
  SimulationConfig lossy;
  lossy.use_transport = true;
  lossy.impairment = ImpairmentConfig{0.10, 0.0, 0.0, 10};
  const auto sim = simulate(input, model, lossy);
  const bool cadence = sim.buffers == buffers.size() && sim.decisions.size() == buffers.size() - 23 &&
                       sim.transport && sim.transport->lost > 0 &&
                       sim.transport->delivered + sim.transport->lost == buffers.size();

  // Seeded reordering: output timestamps strictly increase.
  bool monotonic = true;
  for (std::uint64_t seed = 1; seed <= 20 && monotonic; ++seed) {
    SimulationConfig cfg;
    cfg.use_transport = true;
    cfg.impairment = ImpairmentConfig{0.05, 0.3, 8.0, seed};
    const auto r = simulate(input, model, cfg);
    for (std::size_t i = 1; i < r.decisions.size(); ++i)
      monotonic = monotonic && r.decisions[i].timestamp_s > r.decisions[i - 1].timestamp_s;
  }
  const double elapsed = seconds_since(t0);
  return verdict(exact && cadence && monotonic && elapsed < tol::kTransportSeconds,
                 fmt("loopback %s (%zu buffers); 10%% loss: %zu decisions for %zu buffers, %.1f%% concealed; "
                     "reordered timestamps %s; %.1f s",
                     exact ? "bit-exact" : "MISMATCH", out.size(), sim.decisions.size(), sim.buffers,
                     sim.transport ? 100.0 * sim.transport->loss_ratio() : 0.0,
                     monotonic ? "strictly increasing" : "NOT increasing", elapsed));
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "dsp-oracle-equivalence", dsp_oracle},
      {2, "gradient-correctness", gradient_check},
      {3, "synthetic-end-to-end-learning", synthetic_learning},
      {4, "published-number-replication", published_replication},
      {5, "latency-budget", latency},
      {6, "gate-dominance", gate_dominance},
      {7, "synthesis-targets", synthesis_targets},
      {8, "transport-robustness", transport},
  };
  std::vector<Outcome> outcomes;
  for (const auto& c : criteria) {
    try {
      outcomes.push_back(c.run());
    } catch (const std::exception& e) {
      outcomes.push_back(fail(std::string("exception: ") + e.what()));
    }
  }
  // Without the published dataset, criterion 4 stands for criteria 1-3 and 5-7.
  auto& fourth = outcomes[3];
  if (fourth.status == Outcome::Status::Skipped) {
    bool others = true;
    for (std::size_t i = 0; i < outcomes.size(); ++i)
      if (i != 3 && i != 7) others = others && outcomes[i].status == Outcome::Status::Pass;
    fourth.status = others ? Outcome::Status::Pass : Outcome::Status::Fail;
    fourth.detail += others ? " (all pass)" : " (not all pass)";
  }
  int failures = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const bool ok = outcomes[i].status == Outcome::Status::Pass;
    failures += !ok;
    std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", criteria[i].id, criteria[i].name,
                outcomes[i].detail.c_str());
  }
  return failures == 0 ? 0 : 1;
}
