#include "eegfuse/recording.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eegfuse/errors.hpp"
#include "eegfuse/tensor_io.hpp"

namespace fs = std::filesystem;

namespace eegfuse {

void validate_recording(const EegRecording& rec) {
  if (rec.trials.rank() != 3)
    throw ValidationError("recording: trials must have rank 3, got " +
                          shape_str(rec.trials.shape));
  if (rec.n_channels() < 2) throw ValidationError("recording: need at least 2 channels");
  if (rec.n_samples() < 1) throw ValidationError("recording: empty trials");
  if (!(rec.sample_rate_hz > 0.0))
    throw ValidationError("recording: sample rate must be positive");
  if (!rec.trials.all_finite())
    throw ValidationError("recording: trial data contains NaN/Inf");
  if (rec.ratings.rank() != 2 || rec.ratings.dim(0) != rec.n_trials() ||
      rec.ratings.dim(1) != 2)
    throw ValidationError("recording: ratings must be [n_trials x 2], got " +
                          shape_str(rec.ratings.shape));
  for (double r : rec.ratings.data)
    if (!(r >= 1.0 && r <= 9.0))
      throw ValidationError("recording: rating " + std::to_string(r) +
                            " outside [1, 9]");
}

void save_recording(const EegRecording& rec, const std::string& dir) {
  validate_recording(rec);
  fs::create_directories(dir);
  save_tensor(rec.trials, dir + "/signals.nft", DType::f64);
  save_tensor(rec.ratings, dir + "/ratings.nft", DType::f64);
  std::ofstream meta(dir + "/meta.txt", std::ios::trunc);
  if (!meta) throw IoError("cannot write " + dir + "/meta.txt");
  meta << "subject_id=" << rec.subject_id << "\n";
  meta << "sample_rate_hz=" << rec.sample_rate_hz << "\n";
}

EegRecording load_recording(const std::string& dir) {
  EegRecording rec;
  rec.trials = load_tensor(dir + "/signals.nft");
  if (rec.trials.rank() != 3)
    throw FormatError("signals.nft: expected rank 3, got " + shape_str(rec.trials.shape));

  Tensor ratings = load_tensor(dir + "/ratings.nft");
  if (ratings.rank() != 2 || ratings.dim(0) != rec.trials.dim(0) || ratings.dim(1) < 2)
    throw FormatError("ratings.nft: expected [n_trials x >=2], got " +
                      shape_str(ratings.shape));
  // DEAP-converted bundles carry four rating columns; only valence and
  // arousal are retained.
  rec.ratings = Tensor({ratings.dim(0), 2});
  for (size_t t = 0; t < ratings.dim(0); ++t) {
    rec.ratings(t, 0) = ratings(t, 0);
    rec.ratings(t, 1) = ratings(t, 1);
  }

  std::ifstream meta(dir + "/meta.txt");
  if (!meta) throw IoError("cannot open " + dir + "/meta.txt");
  std::string line;
  bool have_id = false, have_rate = false;
  while (std::getline(meta, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "subject_id") {
      rec.subject_id = std::stoi(val);
      have_id = true;
    } else if (key == "sample_rate_hz") {
      rec.sample_rate_hz = std::stod(val);
      have_rate = true;
    }
  }
  if (!have_id || !have_rate)
    throw FormatError(dir + "/meta.txt: missing subject_id or sample_rate_hz");

  validate_recording(rec);
  return rec;
}

std::vector<EegRecording> load_recording_set(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> subdirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory() && fs::exists(entry.path() / "signals.nft"))
      subdirs.push_back(entry.path().string());
  std::sort(subdirs.begin(), subdirs.end());
  if (subdirs.empty()) throw IoError("no recording bundles under " + dir);

  std::vector<EegRecording> out;
  out.reserve(subdirs.size());
  for (const std::string& d : subdirs) out.push_back(load_recording(d));
  return out;
}

}  // namespace eegfuse
