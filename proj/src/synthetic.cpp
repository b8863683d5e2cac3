#include "eegfuse/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "eegfuse/bands.hpp"
#include "eegfuse/errors.hpp"
#include "eegfuse/rng.hpp"

namespace eegfuse {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBackgroundStdUv = 10.0;  // microvolt-scale background

// Substream tags so labels, noise, phases and channel subsets never share a
// random stream.
enum : uint64_t { kTagSubset = 1, kTagLabel = 2, kTagNoise = 3, kTagPhase = 4 };

std::vector<double> filter_same(const std::vector<double>& x, const std::vector<double>& h) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(h.size());
  const int half = m / 2;
  std::vector<double> y(x.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < m; ++k) {
      const int j = i + half - k;
      if (j >= 0 && j < n) acc += h[k] * x[j];
    }
    y[i] = acc;
  }
  return y;
}

}  // namespace

std::vector<double> lowpass_kernel(double cutoff_hz, double fs_hz, int taps) {
  if (taps % 2 == 0) ++taps;
  const double fc = cutoff_hz / fs_hz;  // normalized cutoff, cycles/sample
  const int half = taps / 2;
  std::vector<double> h(taps);
  double sum = 0.0;
  for (int i = 0; i < taps; ++i) {
    const int n = i - half;
    const double sinc = n == 0 ? 2.0 * fc : std::sin(2.0 * kPi * fc * n) / (kPi * n);
    const double hamming = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (taps - 1));
    h[i] = sinc * hamming;
    sum += h[i];
  }
  for (double& v : h) v /= sum;  // unit DC gain
  return h;
}

void validate_synthetic_spec(const SyntheticSpec& spec) {
  if (spec.n_subjects < 2) throw ConfigError("synthetic: n_subjects must be >= 2");
  if (spec.n_trials < 1) throw ConfigError("synthetic: n_trials must be >= 1");
  if (spec.n_channels < 2) throw ConfigError("synthetic: n_channels must be >= 2");
  if (!(spec.duration_s > 0.0)) throw ConfigError("synthetic: duration_s must be > 0");
  if (!(spec.sample_rate_hz > 0.0))
    throw ConfigError("synthetic: sample_rate_hz must be > 0");
  if (spec.effect_strength < 0.0)
    throw ConfigError("synthetic: effect_strength must be >= 0");
  if (BandSet::standard().index_of(spec.signal_band) < 0)
    throw ConfigError("synthetic: unknown band '" + spec.signal_band + "'");
}

std::vector<EegRecording> generate_synthetic(const SyntheticSpec& spec) {
  validate_synthetic_spec(spec);

  const BandSet bands = BandSet::standard();
  const Band& band = bands[static_cast<size_t>(bands.index_of(spec.signal_band))];
  const double f0 = 0.5 * (band.f_lo_hz + band.f_hi_hz);
  const size_t n_samples =
      static_cast<size_t>(std::llround(spec.duration_s * spec.sample_rate_hz));
  const size_t n_ch = static_cast<size_t>(spec.n_channels);
  const size_t n_tr = static_cast<size_t>(spec.n_trials);

  // Skip the low-pass when 45 Hz already exceeds Nyquist.
  const bool do_filter = 45.0 < 0.5 * spec.sample_rate_hz;
  const std::vector<double> kernel =
      do_filter ? lowpass_kernel(45.0, spec.sample_rate_hz) : std::vector<double>{};

  std::vector<EegRecording> out;
  out.reserve(static_cast<size_t>(spec.n_subjects));

  for (int s = 0; s < spec.n_subjects; ++s) {
    EegRecording rec;
    rec.subject_id = s + 1;
    rec.sample_rate_hz = spec.sample_rate_hz;
    rec.trials = Tensor({n_tr, n_ch, n_samples});
    rec.ratings = Tensor({n_tr, 2});

    // Channel subset carrying the effect, fixed per subject.
    std::vector<size_t> channels(n_ch);
    std::iota(channels.begin(), channels.end(), size_t{0});
    Rng subset_rng(mix_seed(spec.seed, static_cast<uint64_t>(s), kTagSubset));
    subset_rng.shuffle(channels);
    const size_t subset_size = std::max<size_t>(1, (n_ch + 1) / 2);
    channels.resize(subset_size);

    for (size_t t = 0; t < n_tr; ++t) {
      Rng label_rng(mix_seed(spec.seed, static_cast<uint64_t>(s), t, kTagLabel));
      const bool positive = label_rng.bernoulli(0.5);
      rec.ratings(t, 0) = positive ? 8.0 : 2.0;
      rec.ratings(t, 1) = positive ? 8.0 : 2.0;

      Rng noise_rng(mix_seed(spec.seed, static_cast<uint64_t>(s), t, kTagNoise));
      Rng phase_rng(mix_seed(spec.seed, static_cast<uint64_t>(s), t, kTagPhase));

      for (size_t c = 0; c < n_ch; ++c) {
        std::vector<double> noise(n_samples);
        for (double& v : noise) v = noise_rng.normal();
        if (do_filter) noise = filter_same(noise, kernel);
        for (double& v : noise) v *= kBackgroundStdUv;

        double mean = 0.0, sq = 0.0;
        for (double v : noise) {
          mean += v;
          sq += v * v;
        }
        mean /= static_cast<double>(n_samples);
        const double var = sq / static_cast<double>(n_samples) - mean * mean;
        const double noise_std = std::sqrt(std::max(var, 0.0));

        const double phase = phase_rng.uniform(0.0, 2.0 * kPi);
        const bool inject = positive && spec.effect_strength > 0.0 &&
                            std::find(channels.begin(), channels.end(), c) != channels.end();
        const double amp = inject ? spec.effect_strength * noise_std : 0.0;

        for (size_t n = 0; n < n_samples; ++n) {
          double v = noise[n];
          if (amp != 0.0)
            v += amp * std::sin(2.0 * kPi * f0 * static_cast<double>(n) /
                                    spec.sample_rate_hz +
                                phase);
          rec.trials(t, c, n) = v;
        }
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

SyntheticSpec load_synthetic_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec file: " + path);
  SyntheticSpec spec;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("spec file: expected key=value, got '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "n_subjects") spec.n_subjects = std::stoi(val);
    else if (key == "n_trials") spec.n_trials = std::stoi(val);
    else if (key == "n_channels") spec.n_channels = std::stoi(val);
    else if (key == "duration_s") spec.duration_s = std::stod(val);
    else if (key == "sample_rate_hz") spec.sample_rate_hz = std::stod(val);
    else if (key == "seed") spec.seed = std::stoull(val);
    else if (key == "signal_band") spec.signal_band = val;
    else if (key == "effect_strength") spec.effect_strength = std::stod(val);
    else throw FormatError("spec file: unknown key '" + key + "'");
  }
  validate_synthetic_spec(spec);
  return spec;
}

}  // namespace eegfuse
