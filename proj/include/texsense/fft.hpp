#pragma once

#include <complex>
#include <span>
#include <vector>

namespace texsense {

/// In-place iterative radix-2 FFT (forward, unscaled). Size must be a power of two.
void fft_inplace(std::span<std::complex<double>> data);

/// Magnitudes of the N/2 + 1 non-negative frequency bins of a real signal.
std::vector<double> real_fft_magnitude(std::span<const double> signal);

}  // namespace texsense
