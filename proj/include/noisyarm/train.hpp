#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisyarm/models.hpp"
#include "noisyarm/optim.hpp"
#include "noisyarm/rocket.hpp"
#include "noisyarm/series.hpp"

namespace noisyarm {

struct TrainConfig {
  std::size_t batch_size = 8;
  std::size_t max_iterations = 100000;  // mini-batch steps
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 0.001;
  std::size_t early_stopping_patience = 20;  // epochs without val improvement
  std::uint64_t seed = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

// Training failure with the last epoch that completed with finite loss.
class TrainDivergence : public std::runtime_error {
 public:
  TrainDivergence(const std::string& what, std::size_t epoch)
      : std::runtime_error(what), last_good_epoch(epoch) {}
  std::size_t last_good_epoch;
};

struct ModelSpecs {
  CnnConfig cnn;
  TransformerConfig transformer;
  RocketConfig rocket;
};

// A trained classifier: either a parameter snapshot of a graph net or the
// rocket state (kernels + feature scaler + ridge). Config and history travel
// with the parameters; the file format round-trips losslessly.
struct TrainedModel {
  ModelKind kind = ModelKind::cnn;
  std::size_t channels = 0;
  std::size_t timesteps = 0;

  CnnConfig cnn_cfg;
  TransformerConfig transformer_cfg;
  std::vector<Tensor> params;

  RocketConfig rocket_cfg;
  std::vector<RocketKernel> kernels;
  FeatureScaler feature_scaler;
  RidgeModel ridge;

  std::vector<EpochStats> history;
  TrainConfig train_cfg;

  // Argmax labels (ties -> lowest class index); optionally the per-class
  // scores (logits or ridge scores), one row of 9 per sample.
  std::vector<int> predict(const std::vector<const Series*>& samples,
                           std::vector<std::vector<double>>* scores = nullptr) const;
  double accuracy(const std::vector<const Series*>& samples,
                  const std::vector<int>& labels) const;
};

TrainedModel train(ModelKind kind, const ModelSpecs& specs,
                   const std::vector<const Series*>& train_x, const std::vector<int>& train_y,
                   const std::vector<const Series*>& val_x, const std::vector<int>& val_y,
                   const TrainConfig& cfg);

// Forward evaluation of a live net; returns (mean loss, accuracy).
std::pair<double, double> evaluate_net(const NetModel& model,
                                       const std::vector<const Series*>& samples,
                                       const std::vector<int>& labels);

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace noisyarm
