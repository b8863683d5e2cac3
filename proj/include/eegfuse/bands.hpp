#pragma once

#include <string>
#include <vector>

#include "eegfuse/errors.hpp"

namespace eegfuse {

struct Band {
  std::string name;
  double f_lo_hz{0.0};
  double f_hi_hz{0.0};
};

// Ordered set of frequency bands. Bands own the half-open ranges
// [f_lo, f_hi); interiors must not overlap.
struct BandSet {
  std::vector<Band> bands;

  size_t size() const { return bands.size(); }
  const Band& operator[](size_t i) const { return bands[i]; }

  // Clinical bands truncated to the 45 Hz bandwidth of preprocessed EEG.
  static BandSet standard() {
    return BandSet{{{"delta", 1.0, 4.0},
                    {"theta", 4.0, 8.0},
                    {"alpha", 8.0, 13.0},
                    {"beta", 13.0, 30.0},
                    {"gamma", 30.0, 45.0}}};
  }

  int index_of(const std::string& name) const {
    for (size_t i = 0; i < bands.size(); ++i)
      if (bands[i].name == name) return static_cast<int>(i);
    return -1;
  }

  void validate() const {
    for (const Band& b : bands)
      if (!(b.f_lo_hz < b.f_hi_hz))
        throw ConfigError("band " + b.name + ": f_lo must be < f_hi");
    for (size_t i = 0; i < bands.size(); ++i)
      for (size_t j = i + 1; j < bands.size(); ++j) {
        const Band& a = bands[i];
        const Band& b = bands[j];
        if (a.f_lo_hz < b.f_hi_hz && b.f_lo_hz < a.f_hi_hz)
          throw ConfigError("bands " + a.name + " and " + b.name + " overlap");
      }
  }
};

}  // namespace eegfuse
