#include "noisyarm/splits.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "noisyarm/rng.hpp"

namespace noisyarm {

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& dataset) {
  std::vector<std::vector<std::size_t>> by_class(kNumClasses);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_class[static_cast<std::size_t>(dataset.samples()[i].label)].push_back(i);
  }
  return by_class;
}

}  // namespace

SplitIndices split(const Dataset& dataset, std::array<double, 3> fractions, std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("split: negative fraction");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split: fractions sum to " + std::to_string(sum) + ", expected 1");
  }
  std::size_t positive = 0;
  for (double f : fractions)
    if (f > 1e-9) ++positive;

  Rng rng(mix_seed(seed, "split"));
  SplitIndices out;
  auto by_class = indices_by_class(dataset);
  for (auto& members : by_class) {
    if (members.size() < positive) {
      throw std::invalid_argument("split: class with " + std::to_string(members.size()) +
                                  " samples cannot cover " + std::to_string(positive) +
                                  " non-empty partitions");
    }
    rng.shuffle(members);
    const double n = static_cast<double>(members.size());
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (int p = 0; p < 3; ++p) {
      const double ideal = n * fractions[p];
      counts[p] = static_cast<std::size_t>(std::floor(ideal));
      remainder[p] = ideal - std::floor(ideal);
      assigned += counts[p];
    }
    // Distribute the leftover by largest remainder; ties favor train first.
    while (assigned < members.size()) {
      int best = 0;
      for (int p = 1; p < 3; ++p)
        if (remainder[p] > remainder[best]) best = p;
      ++counts[best];
      remainder[best] = -1.0;
      ++assigned;
    }
    std::size_t pos = 0;
    for (std::size_t i = 0; i < counts[0]; ++i) out.train.push_back(members[pos++]);
    for (std::size_t i = 0; i < counts[1]; ++i) out.validation.push_back(members[pos++]);
    for (std::size_t i = 0; i < counts[2]; ++i) out.test.push_back(members[pos++]);
  }
  return out;
}

std::vector<SplitIndices> kfold(const Dataset& dataset, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold: k must be >= 2");
  auto by_class = indices_by_class(dataset);
  Rng rng(mix_seed(seed, "kfold"));
  std::vector<std::vector<std::size_t>> folds(k);
  for (auto& members : by_class) {
    if (members.size() < k) {
      throw std::invalid_argument("kfold: class with " + std::to_string(members.size()) +
                                  " samples is smaller than k=" + std::to_string(k));
    }
    rng.shuffle(members);
    for (std::size_t i = 0; i < members.size(); ++i) folds[i % k].push_back(members[i]);
  }
  std::vector<SplitIndices> out(k);
  for (std::size_t f = 0; f < k; ++f) {
    out[f].test = folds[f];
    out[f].validation = folds[(f + 1) % k];
    for (std::size_t g = 0; g < k; ++g) {
      if (g == f || g == (f + 1) % k) continue;
      out[f].train.insert(out[f].train.end(), folds[g].begin(), folds[g].end());
    }
  }
  return out;
}

}  // namespace noisyarm
