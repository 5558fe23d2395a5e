#pragma once

#include <cstdint>
#include <vector>

#include "noisyarm/series.hpp"

namespace noisyarm {

struct RocketConfig {
  std::size_t num_kernels = 10000;
  std::vector<double> ridge_lambda_grid = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  std::uint64_t seed = 0;
};

// One random dilated convolution kernel bound to a single input channel.
struct RocketKernel {
  std::vector<double> weights;  // length in {7,9,11}, N(0,1) mean-centered
  double bias = 0.0;            // U(-1,1)
  std::size_t dilation = 1;     // floor(2^u), u ~ U(0, log2((T-1)/(len-1)))
  bool padding = false;         // zero padding on/off with prob 0.5
  std::size_t channel = 0;
};

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  const double* row(std::size_t r) const { return data.data() + r * cols; }
};

std::vector<RocketKernel> sample_rocket_kernels(const RocketConfig& cfg, std::size_t channels,
                                                std::size_t timesteps);

// Per kernel: [ppv, max] of the dilated convolution output (bias included).
// Feature layout: column 2k = ppv of kernel k, column 2k+1 = max.
FeatureMatrix rocket_transform(const std::vector<const Series*>& samples,
                               const std::vector<RocketKernel>& kernels);

// Convenience: sample kernels from cfg, then transform.
FeatureMatrix rocket_transform(const std::vector<const Series*>& samples, const RocketConfig& cfg);

// Per-feature mean/std standardization fitted on training features.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> std;

  void fit(const FeatureMatrix& train);
  FeatureMatrix transform(const FeatureMatrix& x) const;
};

// One-vs-rest ridge regression on +-1 targets over standardized features,
// solved in the dual: W = X^T (X X^T + lambda I)^{-1} Yc, intercept = class
// mean of targets. Expects standardized features (mean 0, std 1 on train).
class RidgeModel {
 public:
  static RidgeModel fit(const FeatureMatrix& x, const std::vector<int>& labels, double lambda,
                        std::size_t classes = kNumClasses);

  // Lambda chosen by validation accuracy; ties -> first (smallest) lambda.
  static RidgeModel fit_grid(const FeatureMatrix& train_x, const std::vector<int>& train_labels,
                             const FeatureMatrix& val_x, const std::vector<int>& val_labels,
                             const std::vector<double>& lambda_grid,
                             std::size_t classes = kNumClasses);

  std::vector<double> scores(const double* features) const;
  int predict_row(const double* features) const;
  std::vector<int> predict(const FeatureMatrix& x) const;
  double accuracy(const FeatureMatrix& x, const std::vector<int>& labels) const;

  double lambda() const { return lambda_; }
  std::size_t classes() const { return classes_; }
  std::size_t feature_dim() const { return feature_dim_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& intercepts() const { return intercepts_; }

  // Serialization hooks (used by the trained-model file format).
  static RidgeModel from_raw(std::size_t classes, std::size_t feature_dim, double lambda,
                             std::vector<double> weights, std::vector<double> intercepts);

 private:
  std::size_t classes_ = 0;
  std::size_t feature_dim_ = 0;
  double lambda_ = 0.0;
  std::vector<double> weights_;     // feature_dim x classes, row-major
  std::vector<double> intercepts_;  // classes
};

// Symmetric positive definite solve via Cholesky; a is n x n row-major and
// is overwritten by its factor. Throws if a pivot is not positive.
void cholesky_solve_in_place(std::vector<double>& a, std::size_t n, std::vector<double>& rhs,
                             std::size_t rhs_cols);

}  // namespace noisyarm
