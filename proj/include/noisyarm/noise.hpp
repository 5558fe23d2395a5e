#pragma once

#include <cstdint>
#include <string>

#include "noisyarm/series.hpp"

namespace noisyarm {

enum class NoiseFamily { cutout, salt_pepper, gaussian };

std::string to_string(NoiseFamily family);
NoiseFamily noise_family_from_string(const std::string& name);

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::cutout;
  int level_percent = 10;         // one of {10,20,30,40,50}
  std::size_t region_size = 10;   // cutout window length
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument on a bad spec
};

// All injectors are pure: the input series is never modified.

// Zeroes randomly placed contiguous time windows (all channels) of exactly
// region_size frames until the zeroed fraction is the closest whole-window
// count to level_percent/100.
Series apply_cutout(const Series& series, const NoiseSpec& spec);

// Each cell is independently selected with probability level_percent/100 and
// set to its channel's max (salt) or min (pepper), 50/50.
Series apply_salt_pepper(const Series& series, const NoiseSpec& spec);

// Adds i.i.d. zero-mean Gaussian noise per cell with sigma =
// (level_percent/100) * (channel max - channel min).
Series apply_gaussian(const Series& series, const NoiseSpec& spec);

// Dispatch by spec.family. Identical (series, spec) -> identical output.
Series apply(const Series& series, const NoiseSpec& spec);

}  // namespace noisyarm
