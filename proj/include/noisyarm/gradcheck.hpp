#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "noisyarm/autodiff.hpp"

namespace noisyarm {

// Central finite-difference verification of every op's backward rule plus
// both trainable architectures end-to-end on tiny shapes.
struct GradCheckReport {
  struct Entry {
    std::string name;
    double max_rel_error = 0.0;
  };
  std::vector<Entry> entries;

  double max_rel_error() const;
  bool passed(double tolerance = 1e-4) const { return max_rel_error() < tolerance; }
};

GradCheckReport run_gradient_checks(std::uint64_t seed);

// Checks one scalar-valued graph: builder must rebuild the loss from the
// same parameter leaves on every call. Entries per tensor are sampled when
// a tensor is larger than max_entries_per_tensor.
double check_gradients(const std::string& name,
                       const std::vector<NodePtr>& params,
                       const std::function<NodePtr()>& builder,
                       std::uint64_t seed,
                       std::size_t max_entries_per_tensor = 0 /* 0 = all */);

}  // namespace noisyarm
