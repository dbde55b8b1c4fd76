#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "texsense/audio_core.hpp"

namespace texsense {

/// Kaiser-windowed sinc low-pass specification for the anti-alias stage.
///
/// The -6 dB point sits at `cutoff_hz`; the transition band is centred on it,
/// so the passband edge is cutoff - transition/2 and the stopband starts at
/// cutoff + transition/2.
struct LowpassSpec {
  int sample_rate_hz = 48000;
  double cutoff_hz = 900.0;
  double transition_hz = 200.0;
  double stopband_db = 70.0;

  double passband_edge_hz() const { return cutoff_hz - transition_hz / 2; }
  double stopband_edge_hz() const { return cutoff_hz + transition_hz / 2; }
};

/// Linear-phase FIR taps meeting `spec`, normalized to unity DC gain.
/// Always an odd number of taps (type I).
std::vector<double> design_lowpass(const LowpassSpec& spec);

/// |H(f)| of `taps` at `freq_hz`, evaluated directly from the DTFT.
double frequency_response(std::span<const double> taps, double freq_hz, int sample_rate_hz);

/// Streaming single-channel FIR decimator.
///
/// Emits one output every `factor` inputs regardless of how the input is
/// split into blocks, so block-wise and whole-signal processing agree
/// sample-for-sample. Output n is the filter evaluated at input sample
/// index (n + 1) * factor - 1.
class FirDecimator {
 public:
  FirDecimator(std::vector<double> taps, int factor);

  /// Appends the outputs made ready by `in` to `out`; returns how many.
  std::size_t process(std::span<const float> in, std::vector<float>& out);

  void reset();

  int factor() const { return factor_; }
  std::size_t num_taps() const { return reversed_.size(); }
  std::span<const double> taps() const { return taps_; }
  /// Group delay in input samples.
  double group_delay() const { return (static_cast<double>(taps_.size()) - 1.0) / 2.0; }

 private:
  double dot_at(std::size_t newest) const;

  std::vector<double> taps_;
  std::vector<double> reversed_;
  std::vector<float> line_;  // doubled circular delay line
  std::size_t pos_ = 0;
  int factor_;
  int phase_ = 0;
};

/// Block of analysis-rate samples produced from one AudioBuffer.
struct DecimatedBlock {
  std::vector<float> piezo;
  std::vector<float> mems;
};

/// Dual-channel decimator with independent per-channel state.
class Decimator {
 public:
  /// Reference anti-alias design for `cfg`.
  explicit Decimator(const StreamConfig& cfg = {});
  Decimator(std::vector<double> taps, int factor);

  DecimatedBlock process(const AudioBuffer& buf);
  void reset();

  int factor() const { return piezo_.factor(); }
  const FirDecimator& channel() const { return piezo_; }

 private:
  FirDecimator piezo_;
  FirDecimator mems_;
};

/// Anti-alias design used by the reference configuration.
LowpassSpec reference_lowpass(const StreamConfig& cfg);

}  // namespace texsense
