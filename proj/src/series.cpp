#include "noisyarm/series.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace noisyarm {

Series::Series(std::size_t channels, std::size_t timesteps, std::vector<double> values,
               std::vector<std::string> channel_names)
    : channels_(channels),
      timesteps_(timesteps),
      values_(std::move(values)),
      channel_names_(std::move(channel_names)) {
  if (channels_ == 0 || timesteps_ == 0) {
    throw std::invalid_argument("series: channels and timesteps must be positive");
  }
  if (values_.size() != channels_ * timesteps_) {
    throw std::invalid_argument("series: expected " + std::to_string(channels_ * timesteps_) +
                                " values, got " + std::to_string(values_.size()));
  }
  if (channel_names_.size() != channels_) {
    throw std::invalid_argument("series: expected " + std::to_string(channels_) +
                                " channel names, got " + std::to_string(channel_names_.size()));
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : channel_names_) {
    if (!seen.insert(name).second) {
      throw std::invalid_argument("series: duplicate channel name '" + name + "'");
    }
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("series: non-finite value");
  }
}

Dataset::Dataset(std::vector<LabeledSample> samples, std::vector<std::string> class_names,
                 Provenance provenance)
    : samples_(std::move(samples)),
      class_names_(std::move(class_names)),
      provenance_(std::move(provenance)) {
  if (class_names_.size() != kNumClasses) {
    throw std::invalid_argument("dataset: expected " + std::to_string(kNumClasses) +
                                " class names");
  }
  if (samples_.empty()) throw std::invalid_argument("dataset: no samples");
  const std::size_t c = samples_[0].series.channels();
  const std::size_t t = samples_[0].series.timesteps();
  std::vector<int> per_class(kNumClasses, 0);
  for (const auto& s : samples_) {
    if (s.label < 0 || s.label >= kNumClasses) {
      throw std::invalid_argument("dataset: sample '" + s.sample_id + "' has label " +
                                  std::to_string(s.label) + " outside [0,8]");
    }
    if (s.series.channels() != c || s.series.timesteps() != t) {
      throw std::invalid_argument("dataset: sample '" + s.sample_id +
                                  "' shape differs from the first sample");
    }
    ++per_class[s.label];
  }
  for (int k = 0; k < kNumClasses; ++k) {
    if (per_class[k] == 0) {
      throw std::invalid_argument("dataset: class " + std::to_string(k) + " has no samples");
    }
  }
}

std::vector<std::string> default_class_names() {
  std::vector<std::string> names;
  names.reserve(kNumClasses);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) names.push_back("cell_r" + std::to_string(r) + "_c" + std::to_string(c));
  return names;
}

}  // namespace noisyarm
