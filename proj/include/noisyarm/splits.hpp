#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "noisyarm/series.hpp"

namespace noisyarm {

// Index-based partition of a dataset; disjoint and exhaustive.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Stratified single split. fractions must sum to 1 within 1e-9.
SplitIndices split(const Dataset& dataset, std::array<double, 3> fractions, std::uint64_t seed);

inline SplitIndices split(const Dataset& dataset, std::uint64_t seed) {
  return split(dataset, {0.8, 0.1, 0.1}, seed);
}

// Stratified k-fold plan: fold f's test = fold f, validation = fold
// (f+1 mod k), train = the rest. Every sample lands in test exactly once.
std::vector<SplitIndices> kfold(const Dataset& dataset, std::size_t k, std::uint64_t seed);

}  // namespace noisyarm
