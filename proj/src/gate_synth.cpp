#include "texsense/gate_synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "texsense/error.hpp"

namespace texsense {

std::string to_string(DecisionClass c) {
  switch (c) {
    case DecisionClass::Rough:
      return "rough";
    case DecisionClass::Smooth:
      return "smooth";
    default:
      return "no_contact";
  }
}

std::string to_string(ModulationMode m) {
  return m == ModulationMode::Hard ? "hard" : "confidence";
}

void GateConfig::validate() const {
  if (!(threshold_dbfs < 0.0)) throw ConfigError("contact threshold must be below 0 dBFS");
}

Decision gate(const ClassScores& scores, const Loudness& piezo_loudness, const GateConfig& cfg,
              double timestamp_s) {
  Decision d;
  d.probabilities = scores.probabilities();
  d.piezo_loudness = piezo_loudness;
  d.timestamp_s = timestamp_s;
  if (piezo_loudness.dbfs <= cfg.threshold_dbfs) {
    d.cls = DecisionClass::NoContact;
  } else {
    const auto r = static_cast<std::size_t>(ClassIndex::Rough);
    const auto s = static_cast<std::size_t>(ClassIndex::Smooth);
    // Ties go to Smooth.
    d.cls = scores.log_probs[r] > scores.log_probs[s] ? DecisionClass::Rough : DecisionClass::Smooth;
  }
  return d;
}

SynthTargets decision_to_targets(const Decision& d, const TargetConfig& cfg) {
  SynthTargets t;
  if (d.cls == DecisionClass::NoContact) return t;

  double freq;
  double level;
  const double pr = d.probabilities[static_cast<std::size_t>(ClassIndex::Rough)];
  const double ps = d.probabilities[static_cast<std::size_t>(ClassIndex::Smooth)];
  if (cfg.mode == ModulationMode::Confidence && pr + ps > 0.0) {
    const double w = pr / (pr + ps);
    freq = w * cfg.rough_freq_hz + (1.0 - w) * cfg.smooth_freq_hz;
    level = w * cfg.rough_level_dbfs + (1.0 - w) * cfg.smooth_level_dbfs;
  } else if (d.cls == DecisionClass::Rough) {
    freq = cfg.rough_freq_hz;
    level = cfg.rough_level_dbfs;
  } else {
    freq = cfg.smooth_freq_hz;
    level = cfg.smooth_level_dbfs;
  }
  t.freq_hz = std::clamp(freq, cfg.min_freq_hz, cfg.max_freq_hz);
  t.level_dbfs = std::min(level, 0.0);
  return t;
}

Oscillator::Oscillator(const OscillatorConfig& cfg)
    : cfg_(cfg),
      amp_pole_(std::exp(-1.0 / (cfg.amp_time_constant_s * cfg.sample_rate_hz))),
      freq_pole_(std::exp(-1.0 / (cfg.freq_time_constant_s * cfg.sample_rate_hz))),
      freq_(std::clamp(cfg.initial_freq_hz, cfg.min_freq_hz, cfg.max_freq_hz)),
      target_freq_(freq_) {
  if (cfg.sample_rate_hz <= 0 || cfg.amp_time_constant_s <= 0.0 || cfg.freq_time_constant_s <= 0.0)
    throw ConfigError("oscillator rate and time constants must be positive");
}

void Oscillator::set_targets(const SynthTargets& targets) {
  if (targets.freq_hz) target_freq_ = std::clamp(*targets.freq_hz, cfg_.min_freq_hz, cfg_.max_freq_hz);
  target_amp_ = std::min(dbfs_to_linear(targets.level_dbfs), 1.0);
}

void Oscillator::render(std::span<float> out) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double inv_rate = 1.0 / cfg_.sample_rate_hz;
  for (float& y : out) {
    amp_ = target_amp_ + amp_pole_ * (amp_ - target_amp_);
    freq_ = target_freq_ + freq_pole_ * (freq_ - target_freq_);
    y = static_cast<float>(amp_ * std::sin(phase_));
    phase_ += two_pi * freq_ * inv_rate;
    if (phase_ >= two_pi) phase_ -= two_pi;
  }
}

std::vector<float> Oscillator::render(const SynthTargets& targets, std::size_t n) {
  set_targets(targets);
  std::vector<float> out(n);
  render(out);
  return out;
}

}  // namespace texsense
