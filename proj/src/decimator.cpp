#include "texsense/decimator.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "texsense/error.hpp"

namespace texsense {

namespace {

double kaiser_beta(double attenuation_db) {
  if (attenuation_db > 50.0) return 0.1102 * (attenuation_db - 8.7);
  if (attenuation_db >= 21.0)
    return 0.5842 * std::pow(attenuation_db - 21.0, 0.4) + 0.07886 * (attenuation_db - 21.0);
  return 0.0;
}

}  // namespace

LowpassSpec reference_lowpass(const StreamConfig& cfg) {
  LowpassSpec spec;
  spec.sample_rate_hz = cfg.sample_rate_hz;
  const double nyquist_out = cfg.analysis_rate_hz / 2.0;
  spec.transition_hz = 0.2 * nyquist_out;
  spec.cutoff_hz = nyquist_out - spec.transition_hz / 2.0;
  return spec;
}

std::vector<double> design_lowpass(const LowpassSpec& spec) {
  if (spec.sample_rate_hz <= 0 || spec.cutoff_hz <= 0.0 || spec.transition_hz <= 0.0 ||
      spec.stopband_edge_hz() >= spec.sample_rate_hz / 2.0)
    throw ConfigError("invalid low-pass specification");

  const double fs = spec.sample_rate_hz;
  const double delta_omega = 2.0 * std::numbers::pi * spec.transition_hz / fs;
  auto n = static_cast<std::size_t>(
      std::ceil((spec.stopband_db - 7.95) / (2.285 * delta_omega))) + 1;
  if (n % 2 == 0) ++n;

  const double beta = kaiser_beta(spec.stopband_db);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  const double fc = spec.cutoff_hz / fs;  // cycles per sample
  const double mid = (static_cast<double>(n) - 1.0) / 2.0;

  std::vector<double> taps(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) - mid;
    const double sinc = t == 0.0 ? 2.0 * fc
                                 : std::sin(2.0 * std::numbers::pi * fc * t) / (std::numbers::pi * t);
    const double r = t / mid;
    const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    taps[i] = sinc * w;
    sum += taps[i];
  }
  for (auto& t : taps) t /= sum;
  // Force exact symmetry against rounding in the window evaluation.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double avg = 0.5 * (taps[i] + taps[n - 1 - i]);
    taps[i] = taps[n - 1 - i] = avg;
  }
  return taps;
}

double frequency_response(std::span<const double> taps, double freq_hz, int sample_rate_hz) {
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t k = 0; k < taps.size(); ++k)
    acc += taps[k] * std::polar(1.0, -w * static_cast<double>(k));
  return std::abs(acc);
}

FirDecimator::FirDecimator(std::vector<double> taps, int factor)
    : taps_(std::move(taps)), factor_(factor) {
  if (taps_.empty()) throw ConfigError("decimator needs at least one tap");
  if (factor_ < 1) throw ConfigError("decimation factor must be >= 1");
  reversed_.assign(taps_.rbegin(), taps_.rend());
  line_.assign(2 * taps_.size(), 0.0f);
}

void FirDecimator::reset() {
  std::fill(line_.begin(), line_.end(), 0.0f);
  pos_ = 0;
  phase_ = 0;
}

double FirDecimator::dot_at(std::size_t newest) const {
  // line_[newest + 1 .. newest + L] holds the last L inputs, oldest first.
  const std::size_t len = reversed_.size();
  const float* x = line_.data() + newest + 1;
  const double* h = reversed_.data();
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= len; k += 4) {
    a0 += h[k] * x[k];
    a1 += h[k + 1] * x[k + 1];
    a2 += h[k + 2] * x[k + 2];
    a3 += h[k + 3] * x[k + 3];
  }
  for (; k < len; ++k) a0 += h[k] * x[k];
  return (a0 + a1) + (a2 + a3);
}

std::size_t FirDecimator::process(std::span<const float> in, std::vector<float>& out) {
  const std::size_t len = reversed_.size();
  std::size_t emitted = 0;
  for (const float s : in) {
    line_[pos_] = s;
    line_[pos_ + len] = s;
    if (++phase_ == factor_) {
      phase_ = 0;
      out.push_back(static_cast<float>(dot_at(pos_)));
      ++emitted;
    }
    pos_ = pos_ + 1 == len ? 0 : pos_ + 1;
  }
  return emitted;
}

Decimator::Decimator(const StreamConfig& cfg)
    : Decimator(design_lowpass(reference_lowpass(cfg)), cfg.decimation_factor()) {}

Decimator::Decimator(std::vector<double> taps, int factor)
    : piezo_(taps, factor), mems_(std::move(taps), factor) {}

DecimatedBlock Decimator::process(const AudioBuffer& buf) {
  if (buf.piezo.size() != buf.mems.size())
    throw ArgumentError("channel length mismatch in decimator input");
  DecimatedBlock out;
  const std::size_t expected = buf.size() / static_cast<std::size_t>(factor()) + 1;
  out.piezo.reserve(expected);
  out.mems.reserve(expected);
  piezo_.process(buf.piezo, out.piezo);
  mems_.process(buf.mems, out.mems);
  return out;
}

void Decimator::reset() {
  piezo_.reset();
  mems_.reset();
}

}  // namespace texsense
