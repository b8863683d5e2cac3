#pragma once

#include <string>
#include <vector>

#include "eegfuse/tensor.hpp"

namespace eegfuse {

// One subject's converted recording. DEAP's preprocessed layout maps to
// trials [40 x 32 x 7680] at 128 Hz with ratings in [1, 9]; any
// [trials x channels x samples] layout with >= 2 channels is accepted.
struct EegRecording {
  int subject_id{0};
  Tensor trials;         // [n_trials x n_channels x n_samples], microvolt scale
  double sample_rate_hz{0.0};
  Tensor ratings;        // [n_trials x 2], (valence, arousal) in [1, 9]

  size_t n_trials() const { return trials.rank() == 3 ? trials.dim(0) : 0; }
  size_t n_channels() const { return trials.rank() == 3 ? trials.dim(1) : 0; }
  size_t n_samples() const { return trials.rank() == 3 ? trials.dim(2) : 0; }
};

// Throws ValidationError on any broken invariant.
void validate_recording(const EegRecording& rec);

// Recording bundle on disk: a directory holding signals.nft
// [trials x channels x samples], ratings.nft [trials x 2] (a 4-column
// container is accepted and truncated to valence/arousal), and meta.txt
// with subject_id= and sample_rate_hz= lines.
void save_recording(const EegRecording& rec, const std::string& dir);
EegRecording load_recording(const std::string& dir);

// Loads every recording bundle found one level below `dir`, sorted by
// directory name.
std::vector<EegRecording> load_recording_set(const std::string& dir);

}  // namespace eegfuse
