#pragma once

#include <functional>
#include <string>
#include <vector>

#include "eegfuse/features.hpp"
#include "eegfuse/model.hpp"
#include "eegfuse/recording.hpp"

namespace eegfuse {

// Optimization and protocol settings. Mirrored 1:1 by the key=value config
// file format (the head count uses the key "H").
struct TrainConfig {
  double lr{0.001};
  size_t batch_size{64};
  size_t max_epochs{50};
  uint64_t seed{0};
  LabelDim label_dim{LabelDim::valence};
  EncoderKind encoder_kind{EncoderKind::gcn};
  FusionMode fusion_mode{FusionMode::two_step};
  size_t k_nn{5};
  size_t n_heads{8};
};

KvList train_config_kv(const TrainConfig& cfg);
TrainConfig train_config_from_kv(const KvList& kv);
TrainConfig load_train_config(const std::string& path);

// Architecture implied by a training configuration plus the data's shape.
ModelConfig model_config_for(const TrainConfig& cfg, size_t n_channels,
                             size_t window_len, size_t n_bands);

struct DataDims {
  size_t n_channels{0};
  size_t window_len{0};
  size_t n_bands{0};
};

// Shape of a feature set; throws when samples are empty or inconsistent.
DataDims data_dims(const std::vector<FeatureSample>& samples);

// Invoked after every epoch with the mean training loss; returning false
// stops training early (used by callers that watch their own metric).
using EpochCallback = std::function<bool(size_t epoch, double mean_loss)>;

// Mini-batch Adam training on samples[idx]; returns the per-epoch mean loss
// curve. Deterministic in (data, config): epoch shuffles come from a seeded
// generator. Throws ValidationError when the selection holds fewer than two
// classes.
std::vector<double> train_model(Model<float>& model,
                                const std::vector<FeatureSample>& samples,
                                const std::vector<size_t>& idx,
                                const TrainConfig& cfg,
                                const EpochCallback& on_epoch = {});

// Argmax accuracy of the model on samples[idx] (batch-norm in eval mode).
double evaluate_model(Model<float>& model,
                      const std::vector<FeatureSample>& samples,
                      const std::vector<size_t>& idx,
                      double* mean_loss = nullptr);

struct FoldReport {
  int subject{0};
  size_t n_test{0};
  double accuracy{0.0};
  std::vector<double> loss_curve;
};

struct LosoReport {
  std::vector<FoldReport> folds;
  double mean_accuracy{0.0};
};

// Windows every recording with the standard 2 s / 0.125 s sliding window at
// its own sample rate and concatenates the per-trial feature samples.
std::vector<FeatureSample> featurize_recordings(
    const std::vector<EegRecording>& recs, LabelDim label_dim);

// Leave-one-subject-out: one fold per distinct subject id, folds in subject
// order, each fold's model seeded from (cfg.seed, subject). The mean is the
// unweighted average over folds.
LosoReport run_loso(const std::vector<FeatureSample>& samples,
                    const TrainConfig& cfg);

struct AblationRow {
  FusionMode mode;
  LosoReport report;
};

// Runs the full cross-validation once per fusion mode, in the fixed order
// sdee_only, tdee_only, concat, one_step, two_step, sharing data and seed.
std::vector<AblationRow> run_ablation(const std::vector<FeatureSample>& samples,
                                      const TrainConfig& cfg);

// Report rendering: a tab-separated table followed by a key=value summary.
// Pure text functions so outputs are byte-stable for identical inputs.
std::string loso_report_text(const LosoReport& report, const TrainConfig& cfg);
std::string ablation_report_text(const std::vector<AblationRow>& rows,
                                 const TrainConfig& cfg);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace eegfuse
