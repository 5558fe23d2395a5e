#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace noisyarm {

inline constexpr int kNumClasses = 9;

// One multichannel keypoint time series (channels x timesteps, row-major).
// The unit of classification.
class Series {
 public:
  Series() = default;
  Series(std::size_t channels, std::size_t timesteps, std::vector<double> values,
         std::vector<std::string> channel_names);

  std::size_t channels() const { return channels_; }
  std::size_t timesteps() const { return timesteps_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::vector<std::string>& channel_names() const { return channel_names_; }

  double at(std::size_t channel, std::size_t t) const { return values_[channel * timesteps_ + t]; }
  double& at(std::size_t channel, std::size_t t) { return values_[channel * timesteps_ + t]; }
  const double* channel(std::size_t c) const { return values_.data() + c * timesteps_; }
  double* channel(std::size_t c) { return values_.data() + c * timesteps_; }

 private:
  std::size_t channels_ = 0;
  std::size_t timesteps_ = 0;
  std::vector<double> values_;
  std::vector<std::string> channel_names_;
};

struct LabeledSample {
  Series series;
  int label = 0;  // target cell index in [0, 8]
  std::string sample_id;
};

// Synthetic generator knobs. Defaults mirror the recording setup the data
// stands in for: 481 frames, 50 samples per class, 2 cameras, 11 keypoints.
struct GeneratorParams {
  std::size_t timesteps = 481;
  std::size_t samples_per_class = 50;
  std::size_t cameras = 2;
  std::size_t keypoints = 11;
  double jitter_std = 0.01;      // fraction of the workspace span
  double timing_jitter = 0.05;   // fraction of the trajectory duration
  std::uint64_t seed = 1;
};

struct Provenance {
  enum class Kind { synthetic, ingested };
  Kind kind = Kind::synthetic;
  GeneratorParams params;  // synthetic only
  std::string path;        // ingested only
};

// Labeled collection of series. All samples share (channels, timesteps) and
// every class appears at least once.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<LabeledSample> samples, std::vector<std::string> class_names,
          Provenance provenance);

  const std::vector<LabeledSample>& samples() const { return samples_; }
  std::vector<LabeledSample>& samples() { return samples_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const Provenance& provenance() const { return provenance_; }

  std::size_t size() const { return samples_.size(); }
  std::size_t channels() const { return samples_.empty() ? 0 : samples_[0].series.channels(); }
  std::size_t timesteps() const { return samples_.empty() ? 0 : samples_[0].series.timesteps(); }

 private:
  std::vector<LabeledSample> samples_;
  std::vector<std::string> class_names_;
  Provenance provenance_;
};

std::vector<std::string> default_class_names();

}  // namespace noisyarm
