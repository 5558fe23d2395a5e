#include "noisyarm/scaler.hpp"

#include <limits>
#include <stdexcept>

namespace noisyarm {

void MinMaxScaler::fit(const std::vector<const Series*>& train) {
  if (train.empty()) throw std::invalid_argument("scaler: no fit data");
  const std::size_t channels = train[0]->channels();
  mins_.assign(channels, std::numeric_limits<double>::infinity());
  maxs_.assign(channels, -std::numeric_limits<double>::infinity());
  for (const Series* s : train) {
    if (s->channels() != channels) throw std::invalid_argument("scaler: channel count mismatch");
    for (std::size_t c = 0; c < channels; ++c) {
      const double* row = s->channel(c);
      for (std::size_t t = 0; t < s->timesteps(); ++t) {
        mins_[c] = std::min(mins_[c], row[t]);
        maxs_[c] = std::max(maxs_[c], row[t]);
      }
    }
  }
}

Series MinMaxScaler::transform(const Series& s) const {
  if (!fitted()) throw std::logic_error("scaler: transform before fit");
  if (s.channels() != mins_.size()) throw std::invalid_argument("scaler: channel count mismatch");
  std::vector<double> values(s.values().size());
  for (std::size_t c = 0; c < s.channels(); ++c) {
    const double range = maxs_[c] - mins_[c];
    const double* in = s.channel(c);
    double* out = values.data() + c * s.timesteps();
    if (range > 0.0) {
      const double inv = 1.0 / range;
      for (std::size_t t = 0; t < s.timesteps(); ++t) out[t] = (in[t] - mins_[c]) * inv;
    } else {
      for (std::size_t t = 0; t < s.timesteps(); ++t) out[t] = 0.0;
    }
  }
  return Series(s.channels(), s.timesteps(), std::move(values), s.channel_names());
}

}  // namespace noisyarm
