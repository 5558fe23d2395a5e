#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "noisyarm/tensor.hpp"

namespace noisyarm {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One vertex of the computation graph. Graphs are built per forward pass;
// parameter nodes are long-lived leaves shared across graphs.
struct Node {
  Tensor value;
  Tensor grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;  // pulls from this->grad, pushes to parents
  const char* op = "leaf";

  void ensure_grad() {
    if (grad.empty()) grad = Tensor::zeros_like(value);
  }
};

NodePtr constant(Tensor value);
NodePtr parameter(Tensor value);

// Elementwise and structural ops.
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);  // Hadamard
NodePtr scale(const NodePtr& a, double c);
NodePtr relu(const NodePtr& x);
NodePtr flatten(const NodePtr& x);
NodePtr sum_all(const NodePtr& x);                         // -> shape (1)
NodePtr stack_rows(const std::vector<NodePtr>& rows);      // n x (d) -> (n,d)

// Linear algebra.
NodePtr matmul(const NodePtr& a, const NodePtr& b);  // (m,k)x(k,n) -> (m,n)
// x (n) or (T,n); w (n,m); b (m). Row-wise affine map.
NodePtr dense(const NodePtr& x, const NodePtr& w, const NodePtr& b);

// Sequence ops. conv1d input is channels x timesteps; attention input is
// timesteps x model_dim.
NodePtr conv1d(const NodePtr& x, const NodePtr& w, const NodePtr& b);  // w (Cout,Cin,k)
NodePtr maxpool1d(const NodePtr& x, std::size_t window);
NodePtr global_avg_pool1d(const NodePtr& x);  // (T,d) -> (d), mean over time
NodePtr softmax(const NodePtr& x);            // row-wise; rank 1 treated as one row
NodePtr layer_norm(const NodePtr& x, const NodePtr& gain, const NodePtr& bias);
NodePtr scaled_dot_product_attention(const NodePtr& q, const NodePtr& k, const NodePtr& v,
                                     std::size_t heads);

// Mean over the batch of -log softmax(logits)[label]; max-subtraction
// stabilized. logits (B,n), labels in [0,n).
NodePtr cross_entropy_loss(const NodePtr& logits, const std::vector<int>& labels);

// Reverse pass from a scalar loss (shape (1)). Visits each node exactly once
// in reverse topological order; gradients accumulate into Node::grad.
void backward(const NodePtr& loss);

// Zeroes grads of every node reachable from root (parameters included).
void zero_gradients(const NodePtr& root);

// Test/diagnostic helper: per-head attention probability matrices (T,T).
std::vector<Tensor> attention_probabilities(const Tensor& q, const Tensor& k, std::size_t heads);

}  // namespace noisyarm
