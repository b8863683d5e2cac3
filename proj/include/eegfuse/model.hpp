#pragma once

#include <string>
#include <vector>

#include "eegfuse/adam.hpp"
#include "eegfuse/attention.hpp"
#include "eegfuse/autodiff.hpp"
#include "eegfuse/graph.hpp"
#include "eegfuse/graph_layers.hpp"
#include "eegfuse/layers.hpp"
#include "eegfuse/params.hpp"
#include "eegfuse/rng.hpp"

namespace eegfuse {

enum class EncoderKind { gcn, gat };
enum class FusionMode { sdee_only, tdee_only, concat, one_step, two_step };

EncoderKind parse_encoder_kind(const std::string& s);
FusionMode parse_fusion_mode(const std::string& s);
std::string encoder_kind_name(EncoderKind k);
std::string fusion_mode_name(FusionMode m);

// Static architecture description. The temporal branch turns raw windows into
// a sequence embedding via strided convolutions, batch norm and recurrent
// layers; the spatial branch embeds per-channel band-power features and mixes
// them over a KNN channel graph; cross-attention lets the spatial tokens
// query the temporal sequence. fusion_mode decides which branches exist and
// what feeds the classifier.
struct ModelConfig {
  size_t n_channels{0};
  size_t window_len{256};
  size_t n_bands{5};
  EncoderKind encoder_kind{EncoderKind::gcn};
  FusionMode fusion_mode{FusionMode::two_step};
  size_t k_nn{5};
  size_t n_heads{8};
  size_t d_model{64};
  std::vector<size_t> conv_kernels{7, 5, 3};
  std::vector<size_t> conv_strides{2, 2, 2};
  size_t conv_width{64};
  size_t bilstm_hidden{32};
  size_t lstm_hidden{64};
  size_t sdee_layers{2};
  size_t classifier_hidden{64};
  size_t n_classes{2};
};

void validate_model_config(const ModelConfig& cfg);
size_t conv_stack_out_len(const ModelConfig& cfg);  // sequence length after convs
size_t fused_dim(const ModelConfig& cfg);           // classifier input width
KvList model_config_kv(const ModelConfig& cfg);
ModelConfig model_config_from_kv(const KvList& kv);

// Whether a fusion mode needs the spatial branch, temporal branch, attention.
inline bool uses_sdee(FusionMode m) { return m != FusionMode::tdee_only; }
inline bool uses_tdee(FusionMode m) { return m != FusionMode::sdee_only; }
inline bool uses_attention(FusionMode m) {
  return m == FusionMode::one_step || m == FusionMode::two_step;
}

// One forward pass's tape handles. Vars keep id -1 when the block that would
// produce them is not part of the active fusion mode.
struct ModelOutput {
  Var logits{};
  Var x_alpha{}, x_beta{}, x_cm{};
  Var pooled_alpha{}, pooled_beta{}, pooled_cm{};
  Var fused{};
  std::vector<Var> param_vars;  // parallel to the parameter store
};

template <typename T>
class Model {
 public:
  // Fresh model: every parameter drawn from uniform(-1/sqrt(fan_in),
  // 1/sqrt(fan_in)) on its own named substream, so parameter creation order
  // does not influence the values.
  Model(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
    validate_model_config(cfg_);
    build_params(seed);
  }

  // Model restored from checkpointed parameters.
  Model(const ModelConfig& cfg, ParamStore<T> store)
      : cfg_(cfg), store_(std::move(store)) {
    validate_model_config(cfg_);
    check_params();
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }

  ModelOutput forward(Tape<T>& t, const TensorT<T>& raw, const TensorT<T>& de,
                      bool train,
                      std::vector<std::vector<std::vector<T>>>* cda_attn = nullptr) {
    const FusionMode mode = cfg_.fusion_mode;
    ModelOutput out;
    out.param_vars.assign(store_.size(), Var{});

    size_t n = 0;
    if (uses_tdee(mode)) {
      if (raw.rank() != 3)
        throw ValidationError("model: raw windows must be [N x C x W]");
      require_shape(raw, {raw.dim(0), cfg_.n_channels, cfg_.window_len},
                    "model: raw windows");
      n = raw.dim(0);
    }
    if (uses_sdee(mode)) {
      if (de.rank() != 3)
        throw ValidationError("model: band features must be [N x C x B]");
      require_shape(de, {de.dim(0), cfg_.n_channels, cfg_.n_bands},
                    "model: band features");
      if (n != 0 && de.dim(0) != n)
        throw ValidationError("model: raw/feature batch sizes disagree");
      n = de.dim(0);
    }
    if (n == 0) throw ValidationError("model: empty batch");

    auto use = [&](const std::string& name) {
      const size_t idx = store_.find(name);
      Var v = leaf(t, store_.entry(idx).value);
      out.param_vars[idx] = v;
      return v;
    };

    if (uses_tdee(mode)) {
      Var h = leaf(t, raw);
      h = relu(t, conv1d(t, h, use("tdee.conv1.w"), cfg_.conv_strides[0]));
      h = relu(t, conv1d(t, h, use("tdee.conv2.w"), cfg_.conv_strides[1]));
      h = conv1d(t, h, use("tdee.conv3.w"), cfg_.conv_strides[2]);
      BatchNormState<T> bn{store_.value("tdee.bn.running_mean"),
                           store_.value("tdee.bn.running_var")};
      h = batch_norm(t, h, use("tdee.bn.gamma"), use("tdee.bn.beta"), &bn, train);
      if (train) {
        store_.value("tdee.bn.running_mean") = bn.running_mean;
        store_.value("tdee.bn.running_var") = bn.running_var;
      }
      h = transpose_12(t, h);
      h = bilstm(t, h, use("tdee.bilstm.fwd.wx"), use("tdee.bilstm.fwd.wh"),
                 use("tdee.bilstm.fwd.b"), use("tdee.bilstm.bwd.wx"),
                 use("tdee.bilstm.bwd.wh"), use("tdee.bilstm.bwd.b"));
      out.x_beta = lstm(t, h, use("tdee.lstm.wx"), use("tdee.lstm.wh"),
                        use("tdee.lstm.b"));
      out.pooled_beta = mean_axis1(t, out.x_beta);
    }

    if (uses_sdee(mode)) {
      std::vector<ChannelGraph> graphs;
      graphs.reserve(n);
      for (size_t s = 0; s < n; ++s) {
        Tensor feats({cfg_.n_channels, cfg_.n_bands});
        for (size_t i = 0; i < feats.size(); ++i)
          feats[i] = static_cast<double>(de[s * feats.size() + i]);
        graphs.push_back(build_graph(feats, cfg_.k_nn));
      }
      Var h = linear(t, leaf(t, de), use("sdee.embed.w"), use("sdee.embed.b"));
      for (size_t l = 1; l <= cfg_.sdee_layers; ++l) {
        const std::string base = "sdee.layer" + std::to_string(l);
        if (cfg_.encoder_kind == EncoderKind::gcn)
          h = gcn_layer(t, h, use(base + ".w"), graphs);
        else
          h = gat_layer(t, h, use(base + ".w"), use(base + ".a"), graphs);
      }
      out.x_alpha = h;
      out.pooled_alpha = mean_axis1(t, out.x_alpha);
    }

    if (uses_attention(mode)) {
      out.x_cm = cross_domain_attention(
          t, out.x_alpha, out.x_beta, use("cda.wq"), use("cda.wk"),
          use("cda.wv"), use("cda.wo"), cfg_.n_heads, cda_attn);
      out.pooled_cm = mean_axis1(t, out.x_cm);
    }

    switch (mode) {
      case FusionMode::sdee_only:
        out.fused = out.pooled_alpha;
        break;
      case FusionMode::tdee_only:
        out.fused = out.pooled_beta;
        break;
      case FusionMode::concat:
        out.fused = concat_lastdim(t, {out.pooled_alpha, out.pooled_beta});
        break;
      case FusionMode::one_step:
        out.fused = out.pooled_cm;
        break;
      case FusionMode::two_step:
        out.fused = concat_lastdim(
            t, {out.pooled_alpha, out.pooled_beta, out.pooled_cm});
        break;
    }

    Var hc = relu(t, linear(t, out.fused, use("clf.fc1.w"), use("clf.fc1.b")));
    out.logits = linear(t, hc, use("clf.fc2.w"), use("clf.fc2.b"));
    return out;
  }

 private:
  void add_init(const std::string& name, std::vector<size_t> shape,
                size_t fan_in, uint64_t seed, bool trainable = true) {
    Rng rng(mix_seed(seed, fnv1a(name)));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    TensorT<T> value(shape);
    for (auto& v : value.data) v = static_cast<T>(rng.uniform(-bound, bound));
    store_.add(name, std::move(value), trainable);
  }

  void add_lstm_params(const std::string& base, size_t d_in, size_t hidden,
                       uint64_t seed) {
    add_init(base + ".wx", {d_in, 4 * hidden}, d_in, seed);
    add_init(base + ".wh", {hidden, 4 * hidden}, hidden, seed);
    add_init(base + ".b", {4 * hidden}, hidden, seed);
    // bias the forget gate open at the start
    TensorT<T>& b = store_.value(base + ".b");
    for (size_t j = hidden; j < 2 * hidden; ++j) b[j] += T(1);
  }

  void build_params(uint64_t seed) {
    const FusionMode mode = cfg_.fusion_mode;
    if (uses_tdee(mode)) {
      add_init("tdee.conv1.w",
               {cfg_.conv_width, cfg_.n_channels, cfg_.conv_kernels[0]},
               cfg_.n_channels * cfg_.conv_kernels[0], seed);
      add_init("tdee.conv2.w",
               {cfg_.conv_width, cfg_.conv_width, cfg_.conv_kernels[1]},
               cfg_.conv_width * cfg_.conv_kernels[1], seed);
      add_init("tdee.conv3.w",
               {cfg_.conv_width, cfg_.conv_width, cfg_.conv_kernels[2]},
               cfg_.conv_width * cfg_.conv_kernels[2], seed);
      store_.add("tdee.bn.gamma", TensorT<T>({cfg_.conv_width}, T(1)));
      store_.add("tdee.bn.beta", TensorT<T>({cfg_.conv_width}, T(0)));
      store_.add("tdee.bn.running_mean", TensorT<T>({cfg_.conv_width}, T(0)),
                 false);
      store_.add("tdee.bn.running_var", TensorT<T>({cfg_.conv_width}, T(1)),
                 false);
      add_lstm_params("tdee.bilstm.fwd", cfg_.conv_width, cfg_.bilstm_hidden, seed);
      add_lstm_params("tdee.bilstm.bwd", cfg_.conv_width, cfg_.bilstm_hidden, seed);
      add_lstm_params("tdee.lstm", 2 * cfg_.bilstm_hidden, cfg_.lstm_hidden, seed);
    }
    if (uses_sdee(mode)) {
      add_init("sdee.embed.w", {cfg_.n_bands, cfg_.d_model}, cfg_.n_bands, seed);
      add_init("sdee.embed.b", {cfg_.d_model}, cfg_.n_bands, seed);
      for (size_t l = 1; l <= cfg_.sdee_layers; ++l) {
        const std::string base = "sdee.layer" + std::to_string(l);
        add_init(base + ".w", {cfg_.d_model, cfg_.d_model}, cfg_.d_model, seed);
        if (cfg_.encoder_kind == EncoderKind::gat)
          add_init(base + ".a", {2 * cfg_.d_model}, 2 * cfg_.d_model, seed);
      }
    }
    if (uses_attention(mode)) {
      for (const char* w : {"cda.wq", "cda.wk", "cda.wv", "cda.wo"})
        add_init(w, {cfg_.d_model, cfg_.d_model}, cfg_.d_model, seed);
    }
    const size_t fd = fused_dim(cfg_);
    add_init("clf.fc1.w", {fd, cfg_.classifier_hidden}, fd, seed);
    add_init("clf.fc1.b", {cfg_.classifier_hidden}, fd, seed);
    add_init("clf.fc2.w", {cfg_.classifier_hidden, cfg_.n_classes},
             cfg_.classifier_hidden, seed);
    add_init("clf.fc2.b", {cfg_.n_classes}, cfg_.classifier_hidden, seed);
  }

  // Restored parameters must exactly mirror what build_params would create.
  void check_params() {
    ParamStore<T> loaded;
    using std::swap;
    swap(loaded, store_);
    build_params(0);
    if (loaded.size() != store_.size())
      throw FormatError("checkpoint: expected " + std::to_string(store_.size()) +
                        " parameters, got " + std::to_string(loaded.size()));
    for (size_t i = 0; i < loaded.size(); ++i) {
      const ParamEntry<T>& got = loaded.entry(i);
      const ParamEntry<T>& want = store_.entry(i);
      if (got.name != want.name || got.trainable != want.trainable ||
          got.value.shape != want.value.shape)
        throw FormatError("checkpoint: parameter " + std::to_string(i) +
                          " (" + got.name + ") does not fit the configuration");
    }
    swap(loaded, store_);
  }

  ModelConfig cfg_;
  ParamStore<T> store_;
};

}  // namespace eegfuse
