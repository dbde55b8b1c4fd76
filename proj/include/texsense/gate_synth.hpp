#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "texsense/audio_core.hpp"
#include "texsense/mlp.hpp"

namespace texsense {

enum class DecisionClass : std::uint8_t { Rough = 0, Smooth = 1, NoContact = 2 };

std::string to_string(DecisionClass c);

struct GateConfig {
  double threshold_dbfs = -26.0;

  /// Throws ConfigError unless the threshold is below 0 dBFS.
  void validate() const;
};

/// Ternary output of one analysis update.
struct Decision {
  DecisionClass cls = DecisionClass::NoContact;
  std::array<double, kNumClasses> probabilities{};  // rough, smooth, non-valid
  Loudness piezo_loudness;
  double timestamp_s = 0.0;
};

/// Contact gate: NoContact whenever piezo loudness <= threshold, otherwise
/// the more probable of Rough and Smooth. The non-valid score never decides.
Decision gate(const ClassScores& scores, const Loudness& piezo_loudness, const GateConfig& cfg,
              double timestamp_s = 0.0);

enum class ModulationMode : std::uint8_t {
  /// Interpolate between the rough and smooth targets by p_rough / (p_rough + p_smooth).
  Confidence = 0,
  /// Use the winning class's targets as-is.
  Hard = 1,
};

std::string to_string(ModulationMode m);

struct TargetConfig {
  double rough_freq_hz = 60.0;
  double rough_level_dbfs = 0.0;
  double smooth_freq_hz = 120.0;
  double smooth_level_dbfs = -25.0;
  /// Actuator band.
  double min_freq_hz = 35.0;
  double max_freq_hz = 1000.0;
  ModulationMode mode = ModulationMode::Confidence;
};

/// Oscillator targets. Level is the sine's peak amplitude in dBFS; an empty
/// frequency means "hold the current frequency".
struct SynthTargets {
  std::optional<double> freq_hz;
  double level_dbfs = -std::numeric_limits<double>::infinity();
};

SynthTargets decision_to_targets(const Decision& d, const TargetConfig& cfg = {});

struct OscillatorConfig {
  int sample_rate_hz = 48000;
  double amp_time_constant_s = 0.015;
  double freq_time_constant_s = 0.030;
  double initial_freq_hz = 60.0;
  double min_freq_hz = 35.0;
  double max_freq_hz = 1000.0;
};

/// Phase-continuous sine oscillator with one-pole smoothing of amplitude and
/// frequency. Per sample: smooth, emit amp * sin(phase), advance phase.
class Oscillator {
 public:
  explicit Oscillator(const OscillatorConfig& cfg = {});

  void set_targets(const SynthTargets& targets);
  void render(std::span<float> out);
  std::vector<float> render(const SynthTargets& targets, std::size_t n);

  double phase() const { return phase_; }
  double frequency_hz() const { return freq_; }
  double amplitude() const { return amp_; }
  double target_frequency_hz() const { return target_freq_; }
  double target_amplitude() const { return target_amp_; }
  /// Per-sample retention factors of the two one-pole smoothers.
  double amp_pole() const { return amp_pole_; }
  double freq_pole() const { return freq_pole_; }
  const OscillatorConfig& config() const { return cfg_; }

 private:
  OscillatorConfig cfg_;
  double amp_pole_;
  double freq_pole_;
  double phase_ = 0.0;
  double freq_;
  double amp_ = 0.0;
  double target_freq_;
  double target_amp_ = 0.0;
};

}  // namespace texsense
