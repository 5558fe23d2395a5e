#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "noisyarm/autodiff.hpp"
#include "noisyarm/series.hpp"

namespace noisyarm {

enum class ModelKind { cnn, transformer, rocket };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct CnnConfig {
  std::size_t conv1_filters = 32;
  std::size_t conv1_kernel = 3;
  std::size_t pool1 = 2;
  std::size_t conv2_filters = 64;
  std::size_t conv2_kernel = 3;
  std::size_t pool2 = 2;
  std::size_t dense_hidden = 100;
  std::size_t classes = 9;
};

struct TransformerConfig {
  std::size_t heads = 4;
  std::size_t ffn_dim = 128;
  std::size_t blocks = 4;
  std::size_t model_dim = 64;
  std::size_t classes = 9;
};

// Smallest input length the conv/pool stack accepts (>= 1 timestep left).
std::size_t cnn_min_timesteps(const CnnConfig& cfg);
// Flattened feature width after the second pool stage.
std::size_t cnn_flatten_size(std::size_t channels, std::size_t timesteps, const CnnConfig& cfg);

// A parameter set plus a graph-building forward function. Parameters are
// leaf nodes shared across the per-sample graphs the forward builds.
class NetModel {
 public:
  virtual ~NetModel() = default;
  virtual NodePtr logits(const Series& sample) const = 0;
  virtual const std::vector<NodePtr>& parameters() const = 0;
  virtual ModelKind kind() const = 0;

  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& params);
  void zero_param_grads();
};

std::unique_ptr<NetModel> build_cnn(std::size_t channels, std::size_t timesteps,
                                    const CnnConfig& cfg, std::uint64_t init_seed);
std::unique_ptr<NetModel> build_transformer(std::size_t channels, std::size_t timesteps,
                                            const TransformerConfig& cfg, std::uint64_t init_seed,
                                            bool positional_encoding = true);

}  // namespace noisyarm
