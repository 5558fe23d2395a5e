#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "noisyarm/autodiff.hpp"
#include "noisyarm/tensor.hpp"

namespace noisyarm {

enum class OptimizerKind { sgd, rmsprop, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

// The paper's grid: rates {0.001, 0.01, 0.1} x kinds {sgd, rmsprop, adam}.
inline constexpr double kLearningRateGrid[] = {0.001, 0.01, 0.1};

// Per-parameter moment buffers plus a step counter. One state drives one
// parameter set; buffers are created lazily on the first step.
class OptimizerState {
 public:
  OptimizerState(OptimizerKind kind, double learning_rate);

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return learning_rate_; }
  std::uint64_t steps() const { return steps_; }

  // Applies one update: params[i] -= f(grads[i]). Shapes must align with the
  // first call's shapes.
  void step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);

  // Convenience for node-based parameters (uses node->grad).
  void step(const std::vector<NodePtr>& params);

  static constexpr double kAdamBeta1 = 0.9;
  static constexpr double kAdamBeta2 = 0.999;
  static constexpr double kRmspropDecay = 0.9;
  static constexpr double kEpsilon = 1e-8;

 private:
  OptimizerKind kind_;
  double learning_rate_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<double>> m1_;  // first moment / rmsprop accumulator
  std::vector<std::vector<double>> m2_;  // adam second moment
};

}  // namespace noisyarm
