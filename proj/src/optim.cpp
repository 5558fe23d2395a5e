#include "noisyarm/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace noisyarm {

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::rmsprop: return "rmsprop";
    case OptimizerKind::adam: return "adam";
  }
  return "?";
}

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  if (name == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer: " + name);
}

OptimizerState::OptimizerState(OptimizerKind kind, double learning_rate)
    : kind_(kind), learning_rate_(learning_rate) {
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("optimizer: learning rate must be positive");
  }
}

void OptimizerState::step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("optimizer: " + std::to_string(params.size()) + " params vs " +
                     std::to_string(grads.size()) + " grads");
  }
  if (m1_.empty()) {
    m1_.resize(params.size());
    m2_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m1_[i].assign(params[i]->size(), 0.0);
      if (kind_ == OptimizerKind::adam) m2_[i].assign(params[i]->size(), 0.0);
    }
  }
  ++steps_;
  const double lr = learning_rate_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    if (!p.same_shape(g)) {
      throw ShapeError("optimizer: param " + p.shape_str() + " vs grad " + g.shape_str());
    }
    double* pv = p.data();
    const double* gv = g.data();
    switch (kind_) {
      case OptimizerKind::sgd:
        for (std::size_t j = 0; j < p.size(); ++j) pv[j] -= lr * gv[j];
        break;
      case OptimizerKind::rmsprop: {
        double* acc = m1_[i].data();
        for (std::size_t j = 0; j < p.size(); ++j) {
          acc[j] = kRmspropDecay * acc[j] + (1.0 - kRmspropDecay) * gv[j] * gv[j];
          pv[j] -= lr * gv[j] / (std::sqrt(acc[j]) + kEpsilon);
        }
        break;
      }
      case OptimizerKind::adam: {
        double* m = m1_[i].data();
        double* v = m2_[i].data();
        const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(steps_));
        const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(steps_));
        for (std::size_t j = 0; j < p.size(); ++j) {
          m[j] = kAdamBeta1 * m[j] + (1.0 - kAdamBeta1) * gv[j];
          v[j] = kAdamBeta2 * v[j] + (1.0 - kAdamBeta2) * gv[j] * gv[j];
          const double mhat = m[j] / c1;
          const double vhat = v[j] / c2;
          pv[j] -= lr * mhat / (std::sqrt(vhat) + kEpsilon);
        }
        break;
      }
    }
    p.check_finite("optimizer_step");
  }
}

void OptimizerState::step(const std::vector<NodePtr>& params) {
  std::vector<Tensor*> p;
  std::vector<const Tensor*> g;
  p.reserve(params.size());
  g.reserve(params.size());
  for (const auto& node : params) {
    node->ensure_grad();
    p.push_back(&node->value);
    g.push_back(&node->grad);
  }
  step(p, g);
}

}  // namespace noisyarm
