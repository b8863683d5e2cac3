#include "eegfuse/spectral.hpp"

#include <cmath>

#include "eegfuse/errors.hpp"

namespace eegfuse {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Periodic Hann window.
std::vector<double> hann(size_t n) {
  std::vector<double> w(n);
  for (size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n)));
  return w;
}

std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * kPi * static_cast<double>(k * j) / static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

}  // namespace

void fft_inplace(std::vector<std::complex<double>>& x) {
  const size_t n = x.size();
  if (!is_pow2(n)) throw ConfigError("fft: length must be a power of two");
  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = x[i + j];
        const std::complex<double> v = x[i + j + len / 2] * w;
        x[i + j] = u + v;
        x[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::vector<double> averaged_psd(const double* signal, size_t n, const StftConfig& cfg) {
  const size_t seg = cfg.segment_len;
  const size_t hop = cfg.hop;
  if (seg < 2 || hop < 1) throw ConfigError("stft: bad segment/hop");
  if (n < seg)
    throw ConfigError("stft: window shorter than sub-window (" + std::to_string(n) +
                      " < " + std::to_string(seg) + ")");

  const std::vector<double> w = hann(seg);
  double wsum2 = 0.0;
  for (double v : w) wsum2 += v * v;
  const double norm = 1.0 / (static_cast<double>(seg) * wsum2);

  const size_t n_segments = (n - seg) / hop + 1;
  const size_t n_bins = seg / 2 + 1;
  std::vector<double> psd(n_bins, 0.0);
  std::vector<std::complex<double>> buf(seg);

  for (size_t s = 0; s < n_segments; ++s) {
    const double* x = signal + s * hop;
    for (size_t i = 0; i < seg; ++i) buf[i] = {x[i] * w[i], 0.0};
    if (is_pow2(seg)) {
      fft_inplace(buf);
    } else {
      buf = dft(buf);
    }
    for (size_t k = 0; k < n_bins; ++k) {
      const double mag2 = std::norm(buf[k]);
      const double fold = (k == 0 || 2 * k == seg) ? 1.0 : 2.0;
      psd[k] += fold * mag2 * norm;
    }
  }
  for (double& v : psd) v /= static_cast<double>(n_segments);
  return psd;
}

Tensor band_power(const Tensor& window, double fs_hz, const BandSet& bands,
                  const StftConfig& cfg) {
  if (window.rank() != 2)
    throw ValidationError("band_power: expected [C x W], got " + shape_str(window.shape));
  bands.validate();
  for (const Band& b : bands.bands)
    if (b.f_hi_hz > 0.5 * fs_hz)
      throw ConfigError("band " + b.name + " reaches above Nyquist (" +
                        std::to_string(0.5 * fs_hz) + " Hz)");

  const size_t channels = window.dim(0);
  const size_t n = window.dim(1);
  Tensor out({channels, bands.size()});

  for (size_t c = 0; c < channels; ++c) {
    const std::vector<double> psd = averaged_psd(window.row(c), n, cfg);
    const double df = fs_hz / static_cast<double>(cfg.segment_len);
    for (size_t b = 0; b < bands.size(); ++b) {
      double acc = 0.0;
      for (size_t k = 0; k < psd.size(); ++k) {
        const double f = df * static_cast<double>(k);
        if (f >= bands[b].f_lo_hz && f < bands[b].f_hi_hz) acc += psd[k];
      }
      out(c, b) = acc;
    }
  }
  return out;
}

std::vector<double> total_power(const Tensor& window, double fs_hz, double lo_hz,
                                double hi_hz, const StftConfig& cfg) {
  BandSet one{{{"total", lo_hz, hi_hz}}};
  const Tensor t = band_power(window, fs_hz, one, cfg);
  std::vector<double> out(t.dim(0));
  for (size_t c = 0; c < t.dim(0); ++c) out[c] = t(c, 0);
  return out;
}

double differential_entropy(double p) {
  constexpr double kEps = 1e-12;
  constexpr double kTwoPiE = 2.0 * kPi * 2.71828182845904523536;
  return 0.5 * std::log(kTwoPiE * std::max(p, kEps));
}

}  // namespace eegfuse
