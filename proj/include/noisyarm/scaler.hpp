#pragma once

#include <vector>

#include "noisyarm/series.hpp"

namespace noisyarm {

// Per-channel min-max scaling to [0,1], fitted on training data only.
// Channels that are constant in the fit data map to 0.
class MinMaxScaler {
 public:
  void fit(const std::vector<const Series*>& train);
  Series transform(const Series& s) const;

  bool fitted() const { return !mins_.empty(); }
  const std::vector<double>& mins() const { return mins_; }
  const std::vector<double>& maxs() const { return maxs_; }

 private:
  std::vector<double> mins_;
  std::vector<double> maxs_;
};

}  // namespace noisyarm
