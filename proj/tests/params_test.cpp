#include <cstring>
#include <fstream>

#include "doctest.h"
#include "eegfuse/params.hpp"
#include "eegfuse/rng.hpp"
#include "test_util.hpp"

using namespace eegfuse;

TEST_CASE("param store keeps order and rejects duplicates") {
  ParamStore<double> store;
  CHECK(store.add("a.w", Tensor({2, 3}, 1.0)) == 0);
  CHECK(store.add("a.b", Tensor({3}, 0.0), false) == 1);
  CHECK(store.size() == 2);
  CHECK(store.find("a.b") == 1);
  CHECK(store.find("nope") == ParamStore<double>::npos);
  CHECK(store.value("a.w").size() == 6);
  CHECK_FALSE(store.entry(1).trainable);
  CHECK(store.total_scalars() == 9);
  CHECK_THROWS_AS(store.add("a.w", Tensor({1}, 0.0)), ValidationError);
  CHECK_THROWS_AS(store.value("missing"), ValidationError);
}

TEST_CASE("checkpoint directory round-trips parameters, flags and config") {
  const std::string dir = fresh_dir("ckpt_roundtrip");
  Rng rng(100);
  ParamStore<double> store;
  Tensor w({4, 3});
  for (auto& v : w.data) v = rng.normal();
  Tensor b({3});
  for (auto& v : b.data) v = rng.uniform(-1.0, 1.0);
  store.add("enc.w", w);
  store.add("enc.b", b);
  store.add("bn.running_mean", Tensor({3}, 0.25), false);

  const KvList config{{"encoder_kind", "gcn"}, {"lr", "0.001"}, {"seed", "7"}};
  save_checkpoint(store, dir, config);

  KvList loaded_config;
  ParamStore<double> loaded = load_checkpoint<double>(dir, &loaded_config);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded.entry(0).name == "enc.w");
  CHECK(loaded.entry(1).name == "enc.b");
  CHECK(loaded.entry(2).name == "bn.running_mean");
  CHECK(loaded.entry(0).trainable);
  CHECK_FALSE(loaded.entry(2).trainable);
  for (size_t i = 0; i < 3; ++i) {
    const Tensor& a = store.entry(i).value;
    const Tensor& c = loaded.entry(i).value;
    REQUIRE(a.shape == c.shape);
    CHECK(std::memcmp(a.data.data(), c.data.data(),
                      a.size() * sizeof(double)) == 0);
  }
  CHECK(loaded_config == config);
}

TEST_CASE("float parameter stores survive the f64 persistence exactly") {
  const std::string dir = fresh_dir("ckpt_float");
  Rng rng(101);
  ParamStore<float> store;
  TensorF w({5, 2});
  for (auto& v : w.data) v = static_cast<float>(rng.normal());
  store.add("w", w);
  save_checkpoint(store, dir, {});
  ParamStore<float> loaded = load_checkpoint<float>(dir);
  REQUIRE(loaded.entry(0).value.shape == w.shape);
  CHECK(std::memcmp(loaded.entry(0).value.data.data(), w.data.data(),
                    w.size() * sizeof(float)) == 0);
}

TEST_CASE("checkpoint loading rejects inconsistent manifests") {
  const std::string dir = fresh_dir("ckpt_bad");
  ParamStore<double> store;
  store.add("w", Tensor({2, 2}, 1.0));
  save_checkpoint(store, dir, {});

  SUBCASE("missing directory") {
    CHECK_THROWS_AS(load_checkpoint<double>(dir + "_nope"), IoError);
  }
  SUBCASE("dims disagree with the stored tensor") {
    std::ofstream m(dir + "/manifest.txt", std::ios::trunc);
    m << "0\tw\t1\t2x3\n";
    m.close();
    CHECK_THROWS_AS(load_checkpoint<double>(dir), FormatError);
  }
  SUBCASE("bad trainable flag") {
    std::ofstream m(dir + "/manifest.txt", std::ios::trunc);
    m << "0\tw\tyes\t2x2\n";
    m.close();
    CHECK_THROWS_AS(load_checkpoint<double>(dir), FormatError);
  }
  SUBCASE("out-of-order index") {
    std::ofstream m(dir + "/manifest.txt", std::ios::trunc);
    m << "1\tw\t1\t2x2\n";
    m.close();
    CHECK_THROWS_AS(load_checkpoint<double>(dir), FormatError);
  }
  SUBCASE("missing param file") {
    std::ofstream m(dir + "/manifest.txt", std::ios::app);
    m << "1\tw2\t1\t2x2\n";
    m.close();
    CHECK_THROWS_AS(load_checkpoint<double>(dir), IoError);
  }
  SUBCASE("truncated manifest line") {
    std::ofstream m(dir + "/manifest.txt", std::ios::trunc);
    m << "0\tw\t1\n";
    m.close();
    CHECK_THROWS_AS(load_checkpoint<double>(dir), FormatError);
  }
}

TEST_CASE("key=value files parse with comments and reject malformed lines") {
  const std::string dir = fresh_dir("kv_files");
  {
    std::ofstream out(dir + "/good.txt");
    out << "# comment\n\nalpha=1\nbeta=two=three\n";
  }
  const KvList kv = read_kv_file(dir + "/good.txt");
  REQUIRE(kv.size() == 2);
  CHECK(kv[0] == std::pair<std::string, std::string>{"alpha", "1"});
  CHECK(kv[1] == std::pair<std::string, std::string>{"beta", "two=three"});

  {
    std::ofstream out(dir + "/bad.txt");
    out << "no_equals_here\n";
  }
  CHECK_THROWS_AS(read_kv_file(dir + "/bad.txt"), FormatError);
  CHECK_THROWS_AS(read_kv_file(dir + "/missing.txt"), IoError);
}
