#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "eegfuse/errors.hpp"
#include "eegfuse/tensor.hpp"

namespace eegfuse {

// Sliding-window segmentation: width window_s, step hop_s.
struct WindowConfig {
  double window_s{2.0};
  double hop_s{0.125};
  double sample_rate_hz{128.0};

  size_t window_len() const { return to_samples(window_s, "window_s"); }
  size_t hop_len() const { return to_samples(hop_s, "hop_s"); }

  void validate() const {
    if (!(hop_s > 0.0) || hop_s > window_s)
      throw ConfigError("window config: need 0 < hop_s <= window_s");
    if (window_len() < 1 || hop_len() < 1)
      throw ConfigError("window config: window and hop must be >= 1 sample");
  }

 private:
  size_t to_samples(double seconds, const char* what) const {
    const double exact = seconds * sample_rate_hz;
    const double rounded = std::round(exact);
    if (!(rounded >= 1.0) || std::abs(exact - rounded) > 1e-6)
      throw ConfigError(std::string("window config: ") + what + " * sample_rate (" +
                        std::to_string(exact) + ") is not a positive sample count");
    return static_cast<size_t>(rounded);
  }
};

inline size_t window_count(size_t n_samples, size_t window_len, size_t hop_len) {
  if (n_samples < window_len) return 0;
  return (n_samples - window_len) / hop_len + 1;
}

// Splits [C x N] into floor((N - W) / H) + 1 windows of shape [C x W];
// window k covers samples [kH, kH + W). Throws ValidationError when N < W.
inline std::vector<Tensor> sliding_windows(const Tensor& signal, const WindowConfig& cfg) {
  cfg.validate();
  if (signal.rank() != 2)
    throw ValidationError("sliding_windows: expected [C x N], got " +
                          shape_str(signal.shape));
  const size_t channels = signal.dim(0);
  const size_t n = signal.dim(1);
  const size_t w = cfg.window_len();
  const size_t h = cfg.hop_len();
  if (n < w)
    throw ValidationError("sliding_windows: signal shorter than window (" +
                          std::to_string(n) + " < " + std::to_string(w) + ")");

  const size_t count = window_count(n, w, h);
  std::vector<Tensor> out;
  out.reserve(count);
  for (size_t k = 0; k < count; ++k) {
    Tensor win({channels, w});
    const size_t start = k * h;
    for (size_t c = 0; c < channels; ++c)
      for (size_t i = 0; i < w; ++i) win(c, i) = signal(c, start + i);
    out.push_back(std::move(win));
  }
  return out;
}

}  // namespace eegfuse
