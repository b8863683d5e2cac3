#include "eegfuse/features.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eegfuse/errors.hpp"
#include "eegfuse/tensor_io.hpp"

namespace fs = std::filesystem;

namespace eegfuse {

LabelDim parse_label_dim(const std::string& s) {
  if (s == "valence") return LabelDim::valence;
  if (s == "arousal") return LabelDim::arousal;
  throw ConfigError("label dimension must be 'valence' or 'arousal', got '" + s + "'");
}

const char* label_dim_name(LabelDim d) {
  return d == LabelDim::valence ? "valence" : "arousal";
}

std::vector<FeatureSample> featurize(const EegRecording& rec, const WindowConfig& cfg,
                                     const BandSet& bands, LabelDim label_dim) {
  validate_recording(rec);
  cfg.validate();
  if (std::abs(cfg.sample_rate_hz - rec.sample_rate_hz) > 1e-9)
    throw ConfigError("featurize: window config sample rate (" +
                      std::to_string(cfg.sample_rate_hz) +
                      ") does not match recording (" +
                      std::to_string(rec.sample_rate_hz) + ")");

  const size_t n_ch = rec.n_channels();
  const size_t rating_col = label_dim == LabelDim::valence ? 0 : 1;

  std::vector<FeatureSample> out;
  out.reserve(rec.n_trials() * window_count(rec.n_samples(), cfg.window_len(), cfg.hop_len()));

  Tensor trial({n_ch, rec.n_samples()});
  for (size_t t = 0; t < rec.n_trials(); ++t) {
    for (size_t c = 0; c < n_ch; ++c)
      for (size_t n = 0; n < rec.n_samples(); ++n) trial(c, n) = rec.trials(t, c, n);

    const int label = rec.ratings(t, rating_col) > 5.0 ? 1 : 0;
    std::vector<Tensor> windows = sliding_windows(trial, cfg);

    for (size_t w = 0; w < windows.size(); ++w) {
      FeatureSample sample;
      sample.subject_id = rec.subject_id;
      sample.trial_id = static_cast<int>(t);
      sample.window_id = static_cast<int>(w);
      sample.label = label;

      const Tensor power = band_power(windows[w], rec.sample_rate_hz, bands);
      sample.de = Tensor({n_ch, bands.size()});
      for (size_t c = 0; c < n_ch; ++c)
        for (size_t b = 0; b < bands.size(); ++b)
          sample.de(c, b) = differential_entropy(power(c, b));

      // Standardize per channel within the window.
      sample.raw = std::move(windows[w]);
      const size_t len = sample.raw.dim(1);
      for (size_t c = 0; c < n_ch; ++c) {
        double* row = sample.raw.row(c);
        double mean = 0.0;
        for (size_t i = 0; i < len; ++i) mean += row[i];
        mean /= static_cast<double>(len);
        double var = 0.0;
        for (size_t i = 0; i < len; ++i) var += (row[i] - mean) * (row[i] - mean);
        var /= static_cast<double>(len);
        const double inv = 1.0 / std::sqrt(std::max(var, 1e-24));
        for (size_t i = 0; i < len; ++i) row[i] = (row[i] - mean) * inv;
      }
      out.push_back(std::move(sample));
    }
  }
  return out;
}

void save_feature_cache(const std::vector<FeatureSample>& samples, const std::string& dir) {
  if (samples.empty()) throw ValidationError("feature cache: no samples");
  const size_t s = samples.size();
  const size_t c = samples[0].raw.dim(0);
  const size_t w = samples[0].raw.dim(1);
  const size_t b = samples[0].de.dim(1);

  Tensor raw({s, c, w});
  Tensor de({s, c, b});
  Tensor labels({s});
  std::ostringstream index;
  index << "# sample\tsubject\ttrial\twindow\n";
  for (size_t i = 0; i < s; ++i) {
    const FeatureSample& fs_i = samples[i];
    require_shape(fs_i.raw, {c, w}, "feature cache raw");
    require_shape(fs_i.de, {c, b}, "feature cache de");
    std::copy(fs_i.raw.data.begin(), fs_i.raw.data.end(), raw.data.begin() + i * c * w);
    std::copy(fs_i.de.data.begin(), fs_i.de.data.end(), de.data.begin() + i * c * b);
    labels[i] = fs_i.label;
    index << i << "\t" << fs_i.subject_id << "\t" << fs_i.trial_id << "\t"
          << fs_i.window_id << "\n";
  }

  fs::create_directories(dir);
  save_tensor(raw, dir + "/raw.nft", DType::f32);
  save_tensor(de, dir + "/de.nft", DType::f64);
  save_tensor(labels, dir + "/labels.nft", DType::f64);
  std::ofstream idx(dir + "/index.txt", std::ios::trunc);
  if (!idx) throw IoError("cannot write " + dir + "/index.txt");
  idx << index.str();
}

std::vector<FeatureSample> load_feature_cache(const std::string& dir) {
  const Tensor raw = load_tensor(dir + "/raw.nft");
  const Tensor de = load_tensor(dir + "/de.nft");
  const Tensor labels = load_tensor(dir + "/labels.nft");
  if (raw.rank() != 3 || de.rank() != 3 || labels.rank() != 1)
    throw FormatError("feature cache: unexpected ranks");
  const size_t s = raw.dim(0);
  if (de.dim(0) != s || labels.dim(0) != s)
    throw FormatError("feature cache: sample counts disagree");

  std::ifstream idx(dir + "/index.txt");
  if (!idx) throw IoError("cannot open " + dir + "/index.txt");

  std::vector<FeatureSample> out(s);
  const size_t c = raw.dim(1), w = raw.dim(2), b = de.dim(2);
  for (size_t i = 0; i < s; ++i) {
    out[i].raw = Tensor({c, w});
    out[i].de = Tensor({c, b});
    std::copy(raw.data.begin() + i * c * w, raw.data.begin() + (i + 1) * c * w,
              out[i].raw.data.begin());
    std::copy(de.data.begin() + i * c * b, de.data.begin() + (i + 1) * c * b,
              out[i].de.data.begin());
    out[i].label = labels[i] > 0.5 ? 1 : 0;
  }

  std::string line;
  while (std::getline(idx, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    size_t i = 0;
    int subject = 0, trial = 0, window = 0;
    if (!(ss >> i >> subject >> trial >> window) || i >= s)
      throw FormatError("feature cache index: bad line '" + line + "'");
    out[i].subject_id = subject;
    out[i].trial_id = trial;
    out[i].window_id = window;
  }
  return out;
}

}  // namespace eegfuse
