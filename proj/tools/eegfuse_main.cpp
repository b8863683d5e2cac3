// Command-line front end: synthetic data generation, preprocessing, training,
// leave-one-subject-out evaluation, ablation and checkpoint scoring.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eegfuse/errors.hpp"
#include "eegfuse/synthetic.hpp"
#include "eegfuse/train.hpp"

namespace {

using namespace eegfuse;

std::string bundle_name(int subject_id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%02d", subject_id);
  return buf;
}

void cmd_synth(const std::string& spec_path, const std::string& out_dir) {
  const SyntheticSpec spec = load_synthetic_spec(spec_path);
  const std::vector<EegRecording> recs = generate_synthetic(spec);
  std::filesystem::create_directories(out_dir);
  for (const EegRecording& rec : recs)
    save_recording(rec, out_dir + "/" + bundle_name(rec.subject_id));
  std::printf("subjects=%zu trials=%zu channels=%zu samples=%zu\n", recs.size(),
              recs.front().n_trials(), recs.front().n_channels(),
              recs.front().n_samples());
}

void cmd_preprocess(const std::string& in_dir, const std::string& out_dir,
                    const std::string& label) {
  const LabelDim dim = parse_label_dim(label);
  const std::vector<EegRecording> recs = load_recording_set(in_dir);
  const std::vector<FeatureSample> samples = featurize_recordings(recs, dim);
  save_feature_cache(samples, out_dir);
  const DataDims dims = data_dims(samples);
  std::printf("samples=%zu channels=%zu window=%zu bands=%zu label_dim=%s\n",
              samples.size(), dims.n_channels, dims.window_len, dims.n_bands,
              label_dim_name(dim));
}

void cmd_train(const std::string& features_dir, const std::string& config_path,
               const std::string& ckpt_dir) {
  const TrainConfig cfg = load_train_config(config_path);
  const std::vector<FeatureSample> samples = load_feature_cache(features_dir);
  const DataDims dims = data_dims(samples);
  const ModelConfig mcfg =
      model_config_for(cfg, dims.n_channels, dims.window_len, dims.n_bands);
  Model<float> model(mcfg, cfg.seed);

  std::vector<size_t> idx(samples.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const std::vector<double> curve = train_model(model, samples, idx, cfg);
  const double accuracy = evaluate_model(model, samples, idx);

  save_checkpoint(model.params(), ckpt_dir, model_config_kv(mcfg));
  std::printf("epochs=%zu final_loss=%.6f train_accuracy=%.6f\n", curve.size(),
              curve.empty() ? 0.0 : curve.back(), accuracy);
}

void cmd_loso(const std::string& data_dir, const std::string& config_path,
              const std::string& report_path) {
  const TrainConfig cfg = load_train_config(config_path);
  const std::vector<EegRecording> recs = load_recording_set(data_dir);
  const std::vector<FeatureSample> samples =
      featurize_recordings(recs, cfg.label_dim);
  const LosoReport report = run_loso(samples, cfg);
  write_text_file(report_path, loso_report_text(report, cfg));
  std::printf("folds=%zu mean_accuracy=%.6f\n", report.folds.size(),
              report.mean_accuracy);
}

void cmd_ablate(const std::string& data_dir, const std::string& config_path,
                const std::string& report_path) {
  const TrainConfig cfg = load_train_config(config_path);
  const std::vector<EegRecording> recs = load_recording_set(data_dir);
  const std::vector<FeatureSample> samples =
      featurize_recordings(recs, cfg.label_dim);
  const std::vector<AblationRow> rows = run_ablation(samples, cfg);
  write_text_file(report_path, ablation_report_text(rows, cfg));
  for (const AblationRow& row : rows)
    std::printf("%s\t%.6f\n", fusion_mode_name(row.mode).c_str(),
                row.report.mean_accuracy);
}

void cmd_eval(const std::string& ckpt_dir, const std::string& features_dir) {
  KvList kv;
  ParamStore<float> store = load_checkpoint<float>(ckpt_dir, &kv);
  const ModelConfig mcfg = model_config_from_kv(kv);
  Model<float> model(mcfg, std::move(store));

  const std::vector<FeatureSample> samples = load_feature_cache(features_dir);
  std::vector<size_t> idx(samples.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  double loss = 0.0;
  const double accuracy = evaluate_model(model, samples, idx, &loss);
  std::printf("samples=%zu accuracy=%.6f mean_loss=%.6f\n", samples.size(),
              accuracy, loss);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-domain EEG emotion classification"};
  app.require_subcommand(1);

  std::string spec_path, in_dir, out_dir, label{"valence"};
  std::string features_dir, config_path, ckpt_dir, data_dir, report_path;

  CLI::App* synth = app.add_subcommand("synth", "generate synthetic recordings");
  synth->add_option("--spec", spec_path, "generator spec file")->required();
  synth->add_option("--out", out_dir, "output recording directory")->required();

  CLI::App* preprocess =
      app.add_subcommand("preprocess", "window recordings into a feature cache");
  preprocess->add_option("--in", in_dir, "recording directory")->required();
  preprocess->add_option("--out", out_dir, "feature cache directory")->required();
  preprocess->add_option("--label", label, "label dimension (valence|arousal)");

  CLI::App* train = app.add_subcommand("train", "train on a feature cache");
  train->add_option("--features", features_dir, "feature cache")->required();
  train->add_option("--config", config_path, "key=value config file")->required();
  train->add_option("--out", ckpt_dir, "checkpoint directory")->required();

  CLI::App* loso =
      app.add_subcommand("loso", "leave-one-subject-out cross-validation");
  loso->add_option("--data", data_dir, "recording directory")->required();
  loso->add_option("--config", config_path, "key=value config file")->required();
  loso->add_option("--report", report_path, "report output path")->required();

  CLI::App* ablate =
      app.add_subcommand("ablate", "cross-validate every fusion mode");
  ablate->add_option("--data", data_dir, "recording directory")->required();
  ablate->add_option("--config", config_path, "key=value config file")->required();
  ablate->add_option("--report", report_path, "report output path")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "score a checkpoint");
  eval_cmd->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();
  eval_cmd->add_option("--features", features_dir, "feature cache")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) cmd_synth(spec_path, out_dir);
    else if (preprocess->parsed()) cmd_preprocess(in_dir, out_dir, label);
    else if (train->parsed()) cmd_train(features_dir, config_path, ckpt_dir);
    else if (loso->parsed()) cmd_loso(data_dir, config_path, report_path);
    else if (ablate->parsed()) cmd_ablate(data_dir, config_path, report_path);
    else if (eval_cmd->parsed()) cmd_eval(ckpt_dir, features_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
