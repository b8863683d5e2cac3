#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eegfuse/recording.hpp"

namespace eegfuse {

// Desk-scale synthetic EEG: band-limited Gaussian background with a
// band-centred sinusoid injected into positive-label trials on a per-subject
// channel subset. effect_strength 0 leaves labels independent of the signal.
struct SyntheticSpec {
  int n_subjects{2};
  int n_trials{8};
  int n_channels{8};
  double duration_s{4.0};
  double sample_rate_hz{128.0};
  uint64_t seed{0};
  std::string signal_band{"alpha"};
  double effect_strength{1.0};
};

SyntheticSpec load_synthetic_spec(const std::string& path);
void validate_synthetic_spec(const SyntheticSpec& spec);

// One recording per subject; subject ids start at 1. Pure function of the
// spec: the same spec yields identical bytes.
std::vector<EegRecording> generate_synthetic(const SyntheticSpec& spec);

// Low-pass FIR used for the synthetic background (windowed sinc, Hamming).
std::vector<double> lowpass_kernel(double cutoff_hz, double fs_hz, int taps = 63);

}  // namespace eegfuse
