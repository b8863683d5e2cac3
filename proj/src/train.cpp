#include "eegfuse/train.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "eegfuse/adam.hpp"

namespace eegfuse {

namespace {

constexpr uint64_t kTagEpochShuffle = 21;

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_lr(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

size_t parse_size(const std::string& s, const std::string& key) {
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw FormatError("config: bad value '" + s + "' for " + key);
  }
}

// Copies samples[idx[from, to)] into float batch tensors.
void pack_batch(const std::vector<FeatureSample>& samples,
                const std::vector<size_t>& idx, size_t from, size_t to,
                TensorF& raw, TensorF& de, std::vector<int>& labels) {
  const size_t n = to - from;
  const FeatureSample& first = samples[idx[from]];
  raw = TensorF({n, first.raw.dim(0), first.raw.dim(1)});
  de = TensorF({n, first.de.dim(0), first.de.dim(1)});
  labels.assign(n, 0);
  const size_t raw_len = first.raw.size(), de_len = first.de.size();
  for (size_t i = 0; i < n; ++i) {
    const FeatureSample& s = samples[idx[from + i]];
    for (size_t j = 0; j < raw_len; ++j)
      raw[i * raw_len + j] = static_cast<float>(s.raw[j]);
    for (size_t j = 0; j < de_len; ++j)
      de[i * de_len + j] = static_cast<float>(s.de[j]);
    labels[i] = s.label;
  }
}

}  // namespace

KvList train_config_kv(const TrainConfig& cfg) {
  return {
      {"lr", fmt_lr(cfg.lr)},
      {"batch_size", std::to_string(cfg.batch_size)},
      {"max_epochs", std::to_string(cfg.max_epochs)},
      {"seed", std::to_string(cfg.seed)},
      {"label_dim", label_dim_name(cfg.label_dim)},
      {"encoder_kind", encoder_kind_name(cfg.encoder_kind)},
      {"fusion_mode", fusion_mode_name(cfg.fusion_mode)},
      {"k_nn", std::to_string(cfg.k_nn)},
      {"H", std::to_string(cfg.n_heads)},
  };
}

TrainConfig train_config_from_kv(const KvList& kv) {
  TrainConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key == "lr") {
      try {
        cfg.lr = std::stod(value);
      } catch (const std::exception&) {
        throw FormatError("config: bad value '" + value + "' for lr");
      }
    } else if (key == "batch_size") cfg.batch_size = parse_size(value, key);
    else if (key == "max_epochs") cfg.max_epochs = parse_size(value, key);
    else if (key == "seed") cfg.seed = parse_size(value, key);
    else if (key == "label_dim") cfg.label_dim = parse_label_dim(value);
    else if (key == "encoder_kind") cfg.encoder_kind = parse_encoder_kind(value);
    else if (key == "fusion_mode") cfg.fusion_mode = parse_fusion_mode(value);
    else if (key == "k_nn") cfg.k_nn = parse_size(value, key);
    else if (key == "H") cfg.n_heads = parse_size(value, key);
    else throw FormatError("config: unknown key '" + key + "'");
  }
  if (cfg.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (!(cfg.lr >= 0.0)) throw ConfigError("config: lr must be >= 0");
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  return train_config_from_kv(read_kv_file(path));
}

ModelConfig model_config_for(const TrainConfig& cfg, size_t n_channels,
                             size_t window_len, size_t n_bands) {
  ModelConfig m;
  m.n_channels = n_channels;
  m.window_len = window_len;
  m.n_bands = n_bands;
  m.encoder_kind = cfg.encoder_kind;
  m.fusion_mode = cfg.fusion_mode;
  m.k_nn = cfg.k_nn;
  m.n_heads = cfg.n_heads;
  validate_model_config(m);
  return m;
}

DataDims data_dims(const std::vector<FeatureSample>& samples) {
  if (samples.empty()) throw ValidationError("no feature samples");
  const FeatureSample& first = samples.front();
  if (first.raw.rank() != 2 || first.de.rank() != 2)
    throw ValidationError("feature samples must hold [C x W] raw and [C x B] bands");
  DataDims dims{first.raw.dim(0), first.raw.dim(1), first.de.dim(1)};
  for (const FeatureSample& s : samples)
    if (s.raw.shape != first.raw.shape || s.de.shape != first.de.shape)
      throw ValidationError("feature samples have inconsistent shapes");
  return dims;
}

std::vector<double> train_model(Model<float>& model,
                                const std::vector<FeatureSample>& samples,
                                const std::vector<size_t>& idx,
                                const TrainConfig& cfg,
                                const EpochCallback& on_epoch) {
  if (idx.empty()) throw ValidationError("train: empty training selection");
  bool seen[2] = {false, false};
  for (size_t i : idx) seen[samples.at(i).label ? 1 : 0] = true;
  if (!seen[0] || !seen[1])
    throw ValidationError("train: training data must contain both classes");

  Adam<float> opt(model.params(), static_cast<float>(cfg.lr));
  std::vector<size_t> order(idx);
  std::vector<double> curve;
  curve.reserve(cfg.max_epochs);
  TensorF raw, de;
  std::vector<int> labels;
  for (size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(cfg.seed, kTagEpochShuffle, epoch));
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (size_t from = 0; from < order.size(); from += cfg.batch_size) {
      const size_t to = std::min(order.size(), from + cfg.batch_size);
      pack_batch(samples, order, from, to, raw, de, labels);
      Tape<float> t;
      ModelOutput out = model.forward(t, raw, de, true);
      Var loss = cross_entropy(t, out.logits, labels);
      loss_sum += static_cast<double>(t.value(loss)[0]) *
                  static_cast<double>(to - from);
      t.backward(loss);
      opt.step(t, out.param_vars);
    }
    curve.push_back(loss_sum / static_cast<double>(order.size()));
    if (on_epoch && !on_epoch(epoch, curve.back())) break;
  }
  return curve;
}

double evaluate_model(Model<float>& model,
                      const std::vector<FeatureSample>& samples,
                      const std::vector<size_t>& idx, double* mean_loss) {
  if (idx.empty()) throw ValidationError("evaluate: empty selection");
  constexpr size_t kChunk = 64;
  size_t correct = 0;
  double loss_sum = 0.0;
  TensorF raw, de;
  std::vector<int> labels;
  for (size_t from = 0; from < idx.size(); from += kChunk) {
    const size_t to = std::min(idx.size(), from + kChunk);
    pack_batch(samples, idx, from, to, raw, de, labels);
    Tape<float> t;
    ModelOutput out = model.forward(t, raw, de, false);
    const TensorF& logits = t.value(out.logits);
    for (size_t i = 0; i < to - from; ++i) {
      size_t best = 0;
      for (size_t c = 1; c < logits.dim(1); ++c)
        if (logits(i, c) > logits(i, best)) best = c;
      if (static_cast<int>(best) == labels[i]) ++correct;
    }
    if (mean_loss) {
      Var loss = cross_entropy(t, out.logits, labels);
      loss_sum += static_cast<double>(t.value(loss)[0]) *
                  static_cast<double>(to - from);
    }
  }
  if (mean_loss) *mean_loss = loss_sum / static_cast<double>(idx.size());
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

std::vector<FeatureSample> featurize_recordings(
    const std::vector<EegRecording>& recs, LabelDim label_dim) {
  std::vector<FeatureSample> samples;
  const BandSet bands = BandSet::standard();
  for (const EegRecording& rec : recs) {
    WindowConfig wc;
    wc.sample_rate_hz = rec.sample_rate_hz;
    std::vector<FeatureSample> part = featurize(rec, wc, bands, label_dim);
    samples.insert(samples.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  }
  return samples;
}

LosoReport run_loso(const std::vector<FeatureSample>& samples,
                    const TrainConfig& cfg) {
  const DataDims dims = data_dims(samples);
  std::set<int> subjects;
  for (const FeatureSample& s : samples) subjects.insert(s.subject_id);
  if (subjects.size() < 2)
    throw ValidationError("loso: need at least two subjects, got " +
                          std::to_string(subjects.size()));

  LosoReport report;
  for (int held_out : subjects) {
    std::vector<size_t> train_idx, test_idx;
    for (size_t i = 0; i < samples.size(); ++i)
      (samples[i].subject_id == held_out ? test_idx : train_idx).push_back(i);

    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = mix_seed(cfg.seed, static_cast<uint64_t>(held_out));
    Model<float> model(
        model_config_for(cfg, dims.n_channels, dims.window_len, dims.n_bands),
        fold_cfg.seed);
    FoldReport fold;
    fold.subject = held_out;
    fold.n_test = test_idx.size();
    fold.loss_curve = train_model(model, samples, train_idx, fold_cfg);
    fold.accuracy = evaluate_model(model, samples, test_idx);
    report.folds.push_back(std::move(fold));
  }
  double sum = 0.0;
  for (const FoldReport& f : report.folds) sum += f.accuracy;
  report.mean_accuracy = sum / static_cast<double>(report.folds.size());
  return report;
}

std::vector<AblationRow> run_ablation(const std::vector<FeatureSample>& samples,
                                      const TrainConfig& cfg) {
  const FusionMode order[] = {FusionMode::sdee_only, FusionMode::tdee_only,
                              FusionMode::concat, FusionMode::one_step,
                              FusionMode::two_step};
  std::vector<AblationRow> rows;
  for (FusionMode mode : order) {
    TrainConfig mode_cfg = cfg;
    mode_cfg.fusion_mode = mode;
    rows.push_back(AblationRow{mode, run_loso(samples, mode_cfg)});
  }
  return rows;
}

std::string loso_report_text(const LosoReport& report, const TrainConfig& cfg) {
  std::string out = "subject\tn_test\taccuracy\n";
  for (const FoldReport& f : report.folds)
    out += std::to_string(f.subject) + "\t" + std::to_string(f.n_test) + "\t" +
           fmt6(f.accuracy) + "\n";
  out += "\n";
  out += "folds=" + std::to_string(report.folds.size()) + "\n";
  out += "mean_accuracy=" + fmt6(report.mean_accuracy) + "\n";
  for (const auto& [key, value] : train_config_kv(cfg))
    out += key + "=" + value + "\n";
  return out;
}

std::string ablation_report_text(const std::vector<AblationRow>& rows,
                                 const TrainConfig& cfg) {
  std::string out = "fusion_mode\tmean_accuracy\tfolds\n";
  for (const AblationRow& row : rows)
    out += fusion_mode_name(row.mode) + "\t" + fmt6(row.report.mean_accuracy) +
           "\t" + std::to_string(row.report.folds.size()) + "\n";
  out += "\n";
  for (const AblationRow& row : rows)
    out += "mean_accuracy_" + fusion_mode_name(row.mode) + "=" +
           fmt6(row.report.mean_accuracy) + "\n";
  for (const auto& [key, value] : train_config_kv(cfg))
    if (key != "fusion_mode") out += key + "=" + value + "\n";
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("failed while writing " + path);
}

}  // namespace eegfuse
