#include <cmath>
#include <cstring>

#include "doctest.h"
#include "eegfuse/model.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace eegfuse;

namespace {

// Small-but-complete configuration so whole-network tests stay fast.
ModelConfig tiny_config(FusionMode mode, EncoderKind kind = EncoderKind::gcn) {
  ModelConfig cfg;
  cfg.n_channels = 3;
  cfg.window_len = 32;
  cfg.n_bands = 5;
  cfg.encoder_kind = kind;
  cfg.fusion_mode = mode;
  cfg.k_nn = 1;
  cfg.n_heads = 2;
  cfg.d_model = 8;
  cfg.conv_kernels = {5, 3, 3};
  cfg.conv_strides = {2, 2, 2};
  cfg.conv_width = 6;
  cfg.bilstm_hidden = 4;
  cfg.lstm_hidden = 8;
  cfg.sdee_layers = 2;
  cfg.classifier_hidden = 6;
  return cfg;
}

struct Batch {
  Tensor raw, de;
};

Batch tiny_batch(const ModelConfig& cfg, size_t n, uint64_t seed) {
  Rng rng(seed);
  Batch b{gradcheck::random_tensor({n, cfg.n_channels, cfg.window_len}, rng),
          gradcheck::random_tensor({n, cfg.n_channels, cfg.n_bands}, rng)};
  return b;
}

bool has_param(const ParamStore<double>& store, const std::string& name) {
  return store.find(name) != ParamStore<double>::npos;
}

}  // namespace

TEST_CASE("default architecture produces the documented shapes") {
  ModelConfig cfg;
  cfg.n_channels = 8;
  cfg.fusion_mode = FusionMode::two_step;
  CHECK(conv_stack_out_len(cfg) == 30);
  CHECK(fused_dim(cfg) == 192);

  Model<double> model(cfg, 7);
  Batch b = tiny_batch(cfg, 2, 40);
  Tape<double> t;
  ModelOutput out = model.forward(t, b.raw, b.de, false);
  CHECK(t.value(out.x_beta).shape == std::vector<size_t>{2, 30, 64});
  CHECK(t.value(out.x_alpha).shape == std::vector<size_t>{2, 8, 64});
  CHECK(t.value(out.x_cm).shape == std::vector<size_t>{2, 8, 64});
  CHECK(t.value(out.fused).shape == std::vector<size_t>{2, 192});
  CHECK(t.value(out.logits).shape == std::vector<size_t>{2, 2});
  CHECK(t.value(out.logits).all_finite());
}

TEST_CASE("each fusion mode creates exactly the parameters it uses") {
  const struct {
    FusionMode mode;
    bool tdee, sdee, cda;
    size_t fc1_in;
  } rows[] = {
      {FusionMode::sdee_only, false, true, false, 8},
      {FusionMode::tdee_only, true, false, false, 8},
      {FusionMode::concat, true, true, false, 16},
      {FusionMode::one_step, true, true, true, 8},
      {FusionMode::two_step, true, true, true, 24},
  };
  for (const auto& row : rows) {
    Model<double> model(tiny_config(row.mode), 3);
    const ParamStore<double>& store = model.params();
    CHECK(has_param(store, "tdee.conv1.w") == row.tdee);
    CHECK(has_param(store, "tdee.lstm.wx") == row.tdee);
    CHECK(has_param(store, "sdee.embed.w") == row.sdee);
    CHECK(has_param(store, "sdee.layer2.w") == row.sdee);
    CHECK(has_param(store, "cda.wq") == row.cda);
    CHECK(has_param(store, "clf.fc1.w"));
    CHECK(store.value("clf.fc1.w").dim(0) == row.fc1_in);
    CHECK_FALSE(has_param(store, "sdee.layer1.a"));  // gcn has no attention vec
  }
  Model<double> gat_model(tiny_config(FusionMode::sdee_only, EncoderKind::gat), 3);
  CHECK(has_param(gat_model.params(), "sdee.layer1.a"));
  CHECK(has_param(gat_model.params(), "sdee.layer2.a"));
}

TEST_CASE("fused vector is the ordered concatenation of the pooled embeddings") {
  ModelConfig cfg = tiny_config(FusionMode::two_step);
  Model<double> model(cfg, 11);
  Batch b = tiny_batch(cfg, 3, 41);
  Tape<double> t;
  ModelOutput out = model.forward(t, b.raw, b.de, false);
  const Tensor& fused = t.value(out.fused);
  const Tensor& pa = t.value(out.pooled_alpha);
  const Tensor& pb = t.value(out.pooled_beta);
  const Tensor& pc = t.value(out.pooled_cm);
  const size_t d = cfg.d_model;
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = 0; j < d; ++j) {
      CHECK(fused(i, j) == pa(i, j));
      CHECK(fused(i, d + j) == pb(i, j));
      CHECK(fused(i, 2 * d + j) == pc(i, j));
    }

  // the intermediate-fusion mode feeds the attention embedding directly
  ModelConfig cfg1 = tiny_config(FusionMode::one_step);
  Model<double> m1(cfg1, 11);
  Tape<double> t1;
  ModelOutput o1 = m1.forward(t1, b.raw, b.de, false);
  const Tensor& f1 = t1.value(o1.fused);
  const Tensor& p1 = t1.value(o1.pooled_cm);
  for (size_t i = 0; i < f1.size(); ++i) CHECK(f1[i] == p1[i]);
}

TEST_CASE("pooled graph embedding is invariant to channel permutations") {
  ModelConfig cfg = tiny_config(FusionMode::sdee_only);
  cfg.n_channels = 5;
  cfg.k_nn = 2;
  Model<double> model(cfg, 13);
  Batch b = tiny_batch(cfg, 2, 42);

  std::vector<size_t> perm{3, 0, 4, 1, 2};
  Tensor de_p({2, 5, cfg.n_bands});
  for (size_t s = 0; s < 2; ++s)
    for (size_t c = 0; c < 5; ++c)
      for (size_t q = 0; q < cfg.n_bands; ++q)
        de_p(s, c, q) = b.de(s, perm[c], q);

  Tape<double> t;
  ModelOutput o1 = model.forward(t, b.raw, b.de, false);
  ModelOutput o2 = model.forward(t, b.raw, de_p, false);
  const Tensor& p1 = t.value(o1.pooled_alpha);
  const Tensor& p2 = t.value(o2.pooled_alpha);
  for (size_t i = 0; i < p1.size(); ++i)
    CHECK(p1[i] == doctest::Approx(p2[i]).epsilon(1e-10));
}

TEST_CASE("gcn and gat encoders give different embeddings") {
  ModelConfig a = tiny_config(FusionMode::sdee_only, EncoderKind::gcn);
  ModelConfig b = tiny_config(FusionMode::sdee_only, EncoderKind::gat);
  Model<double> ma(a, 5), mb(b, 5);
  Batch batch = tiny_batch(a, 2, 43);
  Tape<double> t;
  const Tensor& ya = t.value(ma.forward(t, batch.raw, batch.de, false).logits);
  const Tensor& yb = t.value(mb.forward(t, batch.raw, batch.de, false).logits);
  bool differ = false;
  for (size_t i = 0; i < ya.size(); ++i)
    if (ya[i] != yb[i]) differ = true;
  CHECK(differ);
}

TEST_CASE("initialization is seed-deterministic and name-keyed") {
  ModelConfig cfg = tiny_config(FusionMode::two_step);
  Model<double> m1(cfg, 99), m2(cfg, 99), m3(cfg, 100);
  REQUIRE(m1.params().size() == m2.params().size());
  for (size_t i = 0; i < m1.params().size(); ++i) {
    const auto& a = m1.params().entry(i);
    const auto& b = m2.params().entry(i);
    CHECK(a.name == b.name);
    CHECK(std::memcmp(a.value.data.data(), b.value.data.data(),
                      a.value.size() * sizeof(double)) == 0);
  }
  CHECK(m3.params().value("clf.fc2.w").data != m1.params().value("clf.fc2.w").data);

  // a parameter shared between two modes initializes identically, because
  // seeding is keyed on the parameter name rather than creation order
  Model<double> sdee_only(tiny_config(FusionMode::sdee_only), 99);
  CHECK(sdee_only.params().value("sdee.embed.w").data ==
        m1.params().value("sdee.embed.w").data);
}

TEST_CASE("checkpointed models reproduce their forward pass exactly") {
  ModelConfig cfg = tiny_config(FusionMode::two_step, EncoderKind::gat);
  Model<double> model(cfg, 21);
  Batch b = tiny_batch(cfg, 2, 44);

  // run one training pass so batch-norm running state is nontrivial
  Tape<double> warm;
  model.forward(warm, b.raw, b.de, true);

  const std::string dir = fresh_dir("model_ckpt");
  save_checkpoint(model.params(), dir, model_config_kv(cfg));

  KvList kv;
  ParamStore<double> loaded = load_checkpoint<double>(dir, &kv);
  ModelConfig cfg2 = model_config_from_kv(kv);
  CHECK(cfg2.fusion_mode == cfg.fusion_mode);
  CHECK(cfg2.encoder_kind == cfg.encoder_kind);
  Model<double> restored(cfg2, std::move(loaded));

  Tape<double> t1, t2;
  const Tensor& y1 = t1.value(model.forward(t1, b.raw, b.de, false).logits);
  const Tensor& y2 = t2.value(restored.forward(t2, b.raw, b.de, false).logits);
  CHECK(std::memcmp(y1.data.data(), y2.data.data(),
                    y1.size() * sizeof(double)) == 0);

  // parameters from one mode cannot restore a different architecture
  ModelConfig other = tiny_config(FusionMode::sdee_only);
  CHECK_THROWS_AS(Model<double>(other, load_checkpoint<double>(dir)), FormatError);
}

TEST_CASE("batch norm state advances in training and holds in eval") {
  ModelConfig cfg = tiny_config(FusionMode::tdee_only);
  Model<double> model(cfg, 31);
  Batch b = tiny_batch(cfg, 4, 45);

  const Tensor before = model.params().value("tdee.bn.running_mean");
  Tape<double> t1;
  model.forward(t1, b.raw, b.de, true);
  const Tensor after_train = model.params().value("tdee.bn.running_mean");
  CHECK(before.data != after_train.data);

  Tape<double> t2;
  model.forward(t2, b.raw, b.de, false);
  CHECK(model.params().value("tdee.bn.running_mean").data == after_train.data);
}

TEST_CASE("model validates configuration and input shapes") {
  ModelConfig bad = tiny_config(FusionMode::two_step);
  bad.lstm_hidden = 6;  // attention needs temporal width == d_model
  CHECK_THROWS_AS(validate_model_config(bad), ConfigError);

  ModelConfig bad_k = tiny_config(FusionMode::sdee_only);
  bad_k.k_nn = 3;
  CHECK_THROWS_AS(validate_model_config(bad_k), ConfigError);

  ModelConfig bad_w = tiny_config(FusionMode::tdee_only);
  bad_w.window_len = 4;
  CHECK_THROWS_AS(validate_model_config(bad_w), ConfigError);

  ModelConfig bad_h = tiny_config(FusionMode::one_step);
  bad_h.n_heads = 3;
  CHECK_THROWS_AS(validate_model_config(bad_h), ConfigError);

  ModelConfig cfg = tiny_config(FusionMode::two_step);
  Model<double> model(cfg, 1);
  Batch b = tiny_batch(cfg, 2, 46);
  Tape<double> t;
  Tensor bad_raw({2, cfg.n_channels, cfg.window_len + 1});
  CHECK_THROWS_AS(model.forward(t, bad_raw, b.de, false), ValidationError);
  Tensor bad_de({3, cfg.n_channels, cfg.n_bands});
  CHECK_THROWS_AS(model.forward(t, b.raw, bad_de, false), ValidationError);
  Tensor empty_raw({0, cfg.n_channels, cfg.window_len});
  Tensor empty_de({0, cfg.n_channels, cfg.n_bands});
  CHECK_THROWS_AS(model.forward(t, empty_raw, empty_de, false), ValidationError);
}

TEST_CASE("model config kv round-trips and rejects unknown keys") {
  ModelConfig cfg = tiny_config(FusionMode::concat, EncoderKind::gat);
  const KvList kv = model_config_kv(cfg);
  ModelConfig back = model_config_from_kv(kv);
  CHECK(back.n_channels == cfg.n_channels);
  CHECK(back.window_len == cfg.window_len);
  CHECK(back.encoder_kind == cfg.encoder_kind);
  CHECK(back.fusion_mode == cfg.fusion_mode);
  CHECK(back.conv_kernels == cfg.conv_kernels);
  CHECK(back.bilstm_hidden == cfg.bilstm_hidden);

  KvList bad = kv;
  bad.emplace_back("mystery", "1");
  CHECK_THROWS_AS(model_config_from_kv(bad), FormatError);
}

TEST_CASE("float model runs forward with finite outputs") {
  ModelConfig cfg = tiny_config(FusionMode::two_step, EncoderKind::gat);
  Model<float> model(cfg, 77);
  Rng rng(47);
  TensorF raw({2, cfg.n_channels, cfg.window_len});
  TensorF de({2, cfg.n_channels, cfg.n_bands});
  for (auto& v : raw.data) v = static_cast<float>(rng.normal());
  for (auto& v : de.data) v = static_cast<float>(rng.normal());
  Tape<float> t;
  ModelOutput out = model.forward(t, raw, de, true);
  CHECK(t.value(out.logits).all_finite());
  t.backward(cross_entropy(t, out.logits, std::vector<int>{0, 1}));
}

TEST_CASE("whole-network parameter gradients match finite differences") {
  for (EncoderKind kind : {EncoderKind::gcn, EncoderKind::gat}) {
    ModelConfig cfg = tiny_config(FusionMode::two_step, kind);
    const uint64_t seed = 55;
    Batch b = tiny_batch(cfg, 2, 48);
    const std::vector<int> labels{0, 1};

    auto loss_with = [&](const ParamStore<double>& params) {
      Model<double> m(cfg, params);
      Tape<double> t;
      ModelOutput out = m.forward(t, b.raw, b.de, true);
      return t.value(cross_entropy(t, out.logits, labels))[0];
    };

    Model<double> model(cfg, seed);
    const ParamStore<double> base = model.params();
    Tape<double> t;
    ModelOutput out = model.forward(t, b.raw, b.de, true);
    t.backward(cross_entropy(t, out.logits, labels));

    Rng pick(49);
    for (size_t i = 0; i < base.size(); ++i) {
      if (!base.entry(i).trainable) continue;
      REQUIRE(out.param_vars[i].id >= 0);
      const Tensor& g = t.grad(out.param_vars[i]);
      const size_t n_checks = std::min<size_t>(3, g.size());
      for (size_t c = 0; c < n_checks; ++c) {
        const size_t j = pick.below(g.size());
        ParamStore<double> probe = base;
        const double x0 = probe.entry(i).value[j];
        const double h = 1e-5 * std::max(1.0, std::abs(x0));
        probe.entry(i).value[j] = x0 + h;
        const double lp = loss_with(probe);
        probe.entry(i).value[j] = x0 - h;
        const double lm = loss_with(probe);
        const double num = (lp - lm) / (2.0 * h);
        const double ana = g[j];
        const double err = std::abs(num - ana) /
                           std::max({1.0, std::abs(num), std::abs(ana)});
        INFO(base.entry(i).name << "[" << j << "] analytic " << ana
                                << " numeric " << num);
        CHECK(err < 1e-4);
      }
    }
  }
}
