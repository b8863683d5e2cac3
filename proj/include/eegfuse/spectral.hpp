#pragma once

#include <complex>
#include <vector>

#include "eegfuse/bands.hpp"
#include "eegfuse/tensor.hpp"

namespace eegfuse {

// STFT layout for band-power estimation: Hann sub-windows averaged into one
// PSD per channel. With the 2 s / 128 Hz defaults this gives 1 Hz bins.
struct StftConfig {
  size_t segment_len{128};
  size_t hop{64};
};

// In-place iterative radix-2 FFT; x.size() must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& x);

// Averaged one-sided PSD of a real signal, normalized so the bins sum to the
// mean power of the segment. Entry k is the mass at frequency k * fs / N.
std::vector<double> averaged_psd(const double* signal, size_t n, const StftConfig& cfg);

// Per-channel band power of a [C x W] window: PSD bins whose center frequency
// lies in [f_lo, f_hi), summed per band. Result is [C x B], all entries >= 0.
// Throws ConfigError if any band reaches above Nyquist or W < segment_len.
Tensor band_power(const Tensor& window, double fs_hz, const BandSet& bands,
                  const StftConfig& cfg = {});

// Total PSD mass over [lo, hi) per channel; same binning as band_power.
std::vector<double> total_power(const Tensor& window, double fs_hz, double lo_hz,
                                double hi_hz, const StftConfig& cfg = {});

// Differential entropy of a Gaussian band signal with variance p, in nats:
// 0.5 * ln(2*pi*e*p). p is clamped below at 1e-12.
double differential_entropy(double p);

}  // namespace eegfuse
