#include "eegfuse/model.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace eegfuse {

namespace {

std::string join_sizes(const std::vector<size_t>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<size_t> split_sizes(const std::string& s, const std::string& key) {
  std::vector<size_t> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      out.push_back(std::stoull(part));
    } catch (const std::exception&) {
      throw FormatError("config: bad value '" + s + "' for " + key);
    }
  }
  if (out.empty()) throw FormatError("config: empty value for " + key);
  return out;
}

size_t parse_size(const std::string& s, const std::string& key) {
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw FormatError("config: bad value '" + s + "' for " + key);
  }
}

}  // namespace

EncoderKind parse_encoder_kind(const std::string& s) {
  std::string low(s.size(), '\0');
  std::transform(s.begin(), s.end(), low.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (low == "gcn") return EncoderKind::gcn;
  if (low == "gat") return EncoderKind::gat;
  throw ConfigError("unknown encoder kind '" + s + "' (want gcn or gat)");
}

FusionMode parse_fusion_mode(const std::string& s) {
  if (s == "sdee_only") return FusionMode::sdee_only;
  if (s == "tdee_only") return FusionMode::tdee_only;
  if (s == "concat") return FusionMode::concat;
  if (s == "one_step") return FusionMode::one_step;
  if (s == "two_step") return FusionMode::two_step;
  throw ConfigError("unknown fusion mode '" + s + "'");
}

std::string encoder_kind_name(EncoderKind k) {
  return k == EncoderKind::gcn ? "gcn" : "gat";
}

std::string fusion_mode_name(FusionMode m) {
  switch (m) {
    case FusionMode::sdee_only: return "sdee_only";
    case FusionMode::tdee_only: return "tdee_only";
    case FusionMode::concat: return "concat";
    case FusionMode::one_step: return "one_step";
    case FusionMode::two_step: return "two_step";
  }
  throw ConfigError("bad fusion mode value");
}

size_t conv_stack_out_len(const ModelConfig& cfg) {
  size_t len = cfg.window_len;
  for (size_t i = 0; i < cfg.conv_kernels.size(); ++i) {
    if (len < cfg.conv_kernels[i])
      throw ConfigError("window length " + std::to_string(cfg.window_len) +
                        " too short for the convolution stack");
    len = (len - cfg.conv_kernels[i]) / cfg.conv_strides[i] + 1;
  }
  return len;
}

size_t fused_dim(const ModelConfig& cfg) {
  switch (cfg.fusion_mode) {
    case FusionMode::sdee_only: return cfg.d_model;
    case FusionMode::tdee_only: return cfg.lstm_hidden;
    case FusionMode::concat: return cfg.d_model + cfg.lstm_hidden;
    case FusionMode::one_step: return cfg.d_model;
    case FusionMode::two_step: return 2 * cfg.d_model + cfg.lstm_hidden;
  }
  throw ConfigError("bad fusion mode value");
}

void validate_model_config(const ModelConfig& cfg) {
  if (cfg.n_channels < 1) throw ConfigError("model: need at least one channel");
  if (cfg.n_bands < 1 || cfg.d_model < 1 || cfg.classifier_hidden < 1 ||
      cfg.bilstm_hidden < 1 || cfg.lstm_hidden < 1 || cfg.conv_width < 1)
    throw ConfigError("model: layer widths must be positive");
  if (cfg.n_classes < 2) throw ConfigError("model: need at least two classes");
  if (cfg.sdee_layers < 1)
    throw ConfigError("model: need at least one graph layer");
  if (cfg.conv_kernels.empty() ||
      cfg.conv_kernels.size() != cfg.conv_strides.size())
    throw ConfigError("model: kernel/stride lists must align");
  for (size_t i = 0; i < cfg.conv_kernels.size(); ++i)
    if (cfg.conv_kernels[i] < 1 || cfg.conv_strides[i] < 1)
      throw ConfigError("model: kernels and strides must be positive");

  if (uses_tdee(cfg.fusion_mode)) conv_stack_out_len(cfg);  // throws if too short
  if (uses_sdee(cfg.fusion_mode)) {
    if (cfg.n_channels < 2)
      throw ConfigError("model: the graph branch needs at least two channels");
    if (cfg.k_nn < 1 || cfg.k_nn >= cfg.n_channels)
      throw ConfigError("model: k_nn must be in [1, n_channels)");
  }
  if (uses_attention(cfg.fusion_mode)) {
    if (cfg.n_heads < 1 || cfg.d_model % cfg.n_heads != 0)
      throw ConfigError("model: head count must divide d_model");
    if (cfg.lstm_hidden != cfg.d_model)
      throw ConfigError(
          "model: attention needs the temporal width to equal d_model");
  }
}

KvList model_config_kv(const ModelConfig& cfg) {
  return {
      {"n_channels", std::to_string(cfg.n_channels)},
      {"window_len", std::to_string(cfg.window_len)},
      {"n_bands", std::to_string(cfg.n_bands)},
      {"encoder_kind", encoder_kind_name(cfg.encoder_kind)},
      {"fusion_mode", fusion_mode_name(cfg.fusion_mode)},
      {"k_nn", std::to_string(cfg.k_nn)},
      {"n_heads", std::to_string(cfg.n_heads)},
      {"d_model", std::to_string(cfg.d_model)},
      {"conv_kernels", join_sizes(cfg.conv_kernels)},
      {"conv_strides", join_sizes(cfg.conv_strides)},
      {"conv_width", std::to_string(cfg.conv_width)},
      {"bilstm_hidden", std::to_string(cfg.bilstm_hidden)},
      {"lstm_hidden", std::to_string(cfg.lstm_hidden)},
      {"sdee_layers", std::to_string(cfg.sdee_layers)},
      {"classifier_hidden", std::to_string(cfg.classifier_hidden)},
      {"n_classes", std::to_string(cfg.n_classes)},
  };
}

ModelConfig model_config_from_kv(const KvList& kv) {
  ModelConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key == "n_channels") cfg.n_channels = parse_size(value, key);
    else if (key == "window_len") cfg.window_len = parse_size(value, key);
    else if (key == "n_bands") cfg.n_bands = parse_size(value, key);
    else if (key == "encoder_kind") cfg.encoder_kind = parse_encoder_kind(value);
    else if (key == "fusion_mode") cfg.fusion_mode = parse_fusion_mode(value);
    else if (key == "k_nn") cfg.k_nn = parse_size(value, key);
    else if (key == "n_heads") cfg.n_heads = parse_size(value, key);
    else if (key == "d_model") cfg.d_model = parse_size(value, key);
    else if (key == "conv_kernels") cfg.conv_kernels = split_sizes(value, key);
    else if (key == "conv_strides") cfg.conv_strides = split_sizes(value, key);
    else if (key == "conv_width") cfg.conv_width = parse_size(value, key);
    else if (key == "bilstm_hidden") cfg.bilstm_hidden = parse_size(value, key);
    else if (key == "lstm_hidden") cfg.lstm_hidden = parse_size(value, key);
    else if (key == "sdee_layers") cfg.sdee_layers = parse_size(value, key);
    else if (key == "classifier_hidden")
      cfg.classifier_hidden = parse_size(value, key);
    else if (key == "n_classes") cfg.n_classes = parse_size(value, key);
    else throw FormatError("config: unknown model key '" + key + "'");
  }
  validate_model_config(cfg);
  return cfg;
}

}  // namespace eegfuse
