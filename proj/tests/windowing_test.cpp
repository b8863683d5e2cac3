#include "doctest.h"
#include "eegfuse/errors.hpp"
#include "eegfuse/windowing.hpp"

using namespace eegfuse;

TEST_CASE("one-minute trial at the default geometry gives 465 windows") {
  WindowConfig cfg;  // 2 s window, 0.125 s hop, 128 Hz
  CHECK(cfg.window_len() == 256);
  CHECK(cfg.hop_len() == 16);
  CHECK(window_count(7680, cfg.window_len(), cfg.hop_len()) == 465);

  Tensor signal({2, 7680});
  CHECK(sliding_windows(signal, cfg).size() == 465);
}

TEST_CASE("window k covers samples [kH, kH + W)") {
  WindowConfig cfg;
  cfg.window_s = 2.0;
  cfg.hop_s = 0.125;
  Tensor signal({2, 300});
  for (size_t c = 0; c < 2; ++c)
    for (size_t n = 0; n < 300; ++n) signal(c, n) = static_cast<double>(1000 * c + n);

  const auto windows = sliding_windows(signal, cfg);
  REQUIRE(windows.size() == 3);  // floor((300-256)/16)+1
  for (size_t k = 0; k < windows.size(); ++k) {
    REQUIRE(windows[k].shape == std::vector<size_t>{2, 256});
    for (size_t c = 0; c < 2; ++c)
      for (size_t i = 0; i < 256; ++i)
        CHECK(windows[k](c, i) == static_cast<double>(1000 * c + 16 * k + i));
  }
}

TEST_CASE("signal equal to one window yields exactly that window") {
  WindowConfig cfg;
  Tensor signal({3, 256});
  for (size_t i = 0; i < signal.size(); ++i) signal[i] = static_cast<double>(i);
  const auto windows = sliding_windows(signal, cfg);
  REQUIRE(windows.size() == 1);
  CHECK(windows[0].data == signal.data);
}

TEST_CASE("window count formula edge cases") {
  CHECK(window_count(256, 256, 16) == 1);
  CHECK(window_count(255, 256, 16) == 0);
  CHECK(window_count(256 + 2 * 16 + 1, 256, 16) == 3);
  CHECK(window_count(256 + 2 * 16, 256, 16) == 3);
  CHECK(window_count(256 + 2 * 16 - 1, 256, 16) == 2);
}

TEST_CASE("too-short signals and bad geometry are rejected") {
  WindowConfig cfg;
  Tensor tiny({2, 200});
  CHECK_THROWS_AS(sliding_windows(tiny, cfg), ValidationError);

  WindowConfig swapped;
  swapped.window_s = 0.125;
  swapped.hop_s = 2.0;
  CHECK_THROWS_AS(swapped.validate(), ConfigError);

  WindowConfig fractional;
  fractional.window_s = 0.3;  // 38.4 samples at 128 Hz
  CHECK_THROWS_AS(fractional.window_len(), ConfigError);

  // rounding noise well inside the tolerance is accepted
  WindowConfig nearly;
  nearly.window_s = 2.0 + 1e-10;
  CHECK(nearly.window_len() == 256);
}
