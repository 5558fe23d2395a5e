#include "noisyarm/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "noisyarm/rng.hpp"

namespace noisyarm {

std::string to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::cutout: return "cutout";
    case NoiseFamily::salt_pepper: return "salt_pepper";
    case NoiseFamily::gaussian: return "gaussian";
  }
  return "?";
}

NoiseFamily noise_family_from_string(const std::string& name) {
  if (name == "cutout") return NoiseFamily::cutout;
  if (name == "salt_pepper") return NoiseFamily::salt_pepper;
  if (name == "gaussian") return NoiseFamily::gaussian;
  throw std::invalid_argument("unknown noise family: " + name);
}

void NoiseSpec::validate() const {
  if (level_percent < 10 || level_percent > 50 || level_percent % 10 != 0) {
    throw std::invalid_argument("noise: level_percent must be one of {10,20,30,40,50}, got " +
                                std::to_string(level_percent));
  }
  if (family == NoiseFamily::cutout && region_size == 0) {
    throw std::invalid_argument("noise: cutout region_size must be positive");
  }
}

namespace {

void channel_min_max(const Series& s, std::size_t c, double& lo, double& hi) {
  const double* row = s.channel(c);
  lo = row[0];
  hi = row[0];
  for (std::size_t t = 1; t < s.timesteps(); ++t) {
    lo = std::min(lo, row[t]);
    hi = std::max(hi, row[t]);
  }
}

}  // namespace

Series apply_cutout(const Series& series, const NoiseSpec& spec) {
  spec.validate();
  const std::size_t t_count = series.timesteps();
  if (spec.region_size > t_count) {
    throw std::invalid_argument("cutout: region_size " + std::to_string(spec.region_size) +
                                " exceeds series length " + std::to_string(t_count));
  }
  const double target = static_cast<double>(t_count) * spec.level_percent / 100.0;
  std::size_t windows = static_cast<std::size_t>(std::llround(target / spec.region_size));
  windows = std::min(windows, t_count / spec.region_size);

  Series out = series;
  if (windows == 0) return out;

  // Disjoint placement sampled via the gap bijection: draws in
  // [0, T - n*region] sorted, then shifted by one window per predecessor.
  Rng rng(spec.seed);
  std::vector<std::size_t> draws(windows);
  const std::size_t slack = t_count - windows * spec.region_size;
  for (auto& d : draws) d = rng.uniform_index(slack + 1);
  std::sort(draws.begin(), draws.end());
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t start = draws[w] + w * spec.region_size;
    for (std::size_t c = 0; c < out.channels(); ++c) {
      double* row = out.channel(c);
      std::fill(row + start, row + start + spec.region_size, 0.0);
    }
  }
  return out;
}

Series apply_salt_pepper(const Series& series, const NoiseSpec& spec) {
  spec.validate();
  const double p = spec.level_percent / 100.0;
  Series out = series;
  Rng rng(spec.seed);
  for (std::size_t c = 0; c < out.channels(); ++c) {
    double lo, hi;
    channel_min_max(series, c, lo, hi);
    double* row = out.channel(c);
    for (std::size_t t = 0; t < out.timesteps(); ++t) {
      if (rng.uniform01() < p) row[t] = rng.uniform01() < 0.5 ? hi : lo;
    }
  }
  return out;
}

Series apply_gaussian(const Series& series, const NoiseSpec& spec) {
  spec.validate();
  const double level = spec.level_percent / 100.0;
  Series out = series;
  Rng rng(spec.seed);
  for (std::size_t c = 0; c < out.channels(); ++c) {
    double lo, hi;
    channel_min_max(series, c, lo, hi);
    const double sigma = level * (hi - lo);
    double* row = out.channel(c);
    if (sigma == 0.0) continue;
    for (std::size_t t = 0; t < out.timesteps(); ++t) row[t] += sigma * rng.normal();
  }
  return out;
}

Series apply(const Series& series, const NoiseSpec& spec) {
  switch (spec.family) {
    case NoiseFamily::cutout: return apply_cutout(series, spec);
    case NoiseFamily::salt_pepper: return apply_salt_pepper(series, spec);
    case NoiseFamily::gaussian: return apply_gaussian(series, spec);
  }
  throw std::invalid_argument("apply: unknown noise family");
}

}  // namespace noisyarm
