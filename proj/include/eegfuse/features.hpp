#pragma once

#include <string>
#include <vector>

#include "eegfuse/bands.hpp"
#include "eegfuse/recording.hpp"
#include "eegfuse/spectral.hpp"
#include "eegfuse/windowing.hpp"

namespace eegfuse {

enum class LabelDim { valence, arousal };

LabelDim parse_label_dim(const std::string& s);
const char* label_dim_name(LabelDim d);

// One windowed example. raw is standardized per channel within the window;
// de holds the per-channel differential entropy over the band set, computed
// from the unstandardized signal.
struct FeatureSample {
  Tensor raw;      // [C x W]
  Tensor de;       // [C x B]
  int label{0};    // rating > 5.0 in the chosen dimension
  int subject_id{0};
  int trial_id{0};
  int window_id{0};
};

// One FeatureSample per (trial, window).
std::vector<FeatureSample> featurize(const EegRecording& rec, const WindowConfig& cfg,
                                     const BandSet& bands, LabelDim label_dim);

// Feature cache on disk: raw.nft [S x C x W] (f32), de.nft [S x C x B],
// labels.nft [S], and index.txt mapping sample -> (subject, trial, window).
void save_feature_cache(const std::vector<FeatureSample>& samples, const std::string& dir);
std::vector<FeatureSample> load_feature_cache(const std::string& dir);

}  // namespace eegfuse
