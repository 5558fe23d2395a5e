#include "noisyarm/rocket.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "noisyarm/rng.hpp"

namespace noisyarm {

std::vector<RocketKernel> sample_rocket_kernels(const RocketConfig& cfg, std::size_t channels,
                                                std::size_t timesteps) {
  if (cfg.num_kernels == 0) throw std::invalid_argument("rocket: num_kernels must be positive");
  constexpr std::size_t kLengths[] = {7, 9, 11};
  if (timesteps < 11) {
    throw std::invalid_argument("rocket: series length " + std::to_string(timesteps) +
                                " shorter than the maximum kernel length 11");
  }
  Rng rng(cfg.seed);
  std::vector<RocketKernel> kernels;
  kernels.reserve(cfg.num_kernels);
  for (std::size_t i = 0; i < cfg.num_kernels; ++i) {
    RocketKernel k;
    const std::size_t len = kLengths[rng.uniform_index(3)];
    k.weights.resize(len);
    double mean = 0.0;
    for (auto& w : k.weights) {
      w = rng.normal();
      mean += w;
    }
    mean /= static_cast<double>(len);
    for (auto& w : k.weights) w -= mean;
    k.bias = rng.uniform(-1.0, 1.0);
    const double max_exp =
        std::log2(static_cast<double>(timesteps - 1) / static_cast<double>(len - 1));
    k.dilation = static_cast<std::size_t>(std::floor(std::exp2(rng.uniform(0.0, max_exp))));
    k.dilation = std::max<std::size_t>(1, k.dilation);
    k.padding = rng.uniform01() < 0.5;
    k.channel = rng.uniform_index(channels);
    kernels.push_back(std::move(k));
  }
  return kernels;
}

namespace {

// PPV and max of one kernel applied to one channel.
void apply_kernel(const double* x, std::size_t t_count, const RocketKernel& k, double& ppv,
                  double& maxv) {
  const std::size_t len = k.weights.size();
  const std::ptrdiff_t span = static_cast<std::ptrdiff_t>((len - 1) * k.dilation);
  const std::ptrdiff_t pad = k.padding ? span / 2 : 0;
  const std::ptrdiff_t t_end = static_cast<std::ptrdiff_t>(t_count) + pad - span;
  std::size_t positives = 0, outputs = 0;
  maxv = -std::numeric_limits<double>::infinity();
  for (std::ptrdiff_t start = -pad; start < t_end; ++start) {
    double acc = k.bias;
    std::ptrdiff_t idx = start;
    for (std::size_t j = 0; j < len; ++j, idx += static_cast<std::ptrdiff_t>(k.dilation)) {
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(t_count)) acc += k.weights[j] * x[idx];
    }
    ++outputs;
    if (acc > 0.0) ++positives;
    if (acc > maxv) maxv = acc;
  }
  ppv = outputs == 0 ? 0.0 : static_cast<double>(positives) / static_cast<double>(outputs);
}

}  // namespace

FeatureMatrix rocket_transform(const std::vector<const Series*>& samples,
                               const std::vector<RocketKernel>& kernels) {
  if (samples.empty()) throw std::invalid_argument("rocket: no samples");
  const std::size_t channels = samples[0]->channels();
  const std::size_t t_count = samples[0]->timesteps();
  for (const Series* s : samples) {
    if (s->channels() != channels || s->timesteps() != t_count) {
      throw std::invalid_argument("rocket: samples must share (channels, timesteps)");
    }
  }
  for (const auto& k : kernels) {
    if ((k.weights.size() - 1) * k.dilation >= t_count) {
      throw std::invalid_argument("rocket: kernel span exceeds series length");
    }
    if (k.channel >= channels) throw std::invalid_argument("rocket: kernel channel out of range");
  }
  FeatureMatrix out;
  out.rows = samples.size();
  out.cols = 2 * kernels.size();
  out.data.resize(out.rows * out.cols);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    double* row = out.data.data() + r * out.cols;
    for (std::size_t j = 0; j < kernels.size(); ++j) {
      apply_kernel(samples[r]->channel(kernels[j].channel), t_count, kernels[j], row[2 * j],
                   row[2 * j + 1]);
    }
  }
  return out;
}

FeatureMatrix rocket_transform(const std::vector<const Series*>& samples,
                               const RocketConfig& cfg) {
  const auto kernels =
      sample_rocket_kernels(cfg, samples.at(0)->channels(), samples.at(0)->timesteps());
  return rocket_transform(samples, kernels);
}

void FeatureScaler::fit(const FeatureMatrix& train) {
  if (train.rows == 0) throw std::invalid_argument("feature scaler: no rows");
  mean.assign(train.cols, 0.0);
  std.assign(train.cols, 0.0);
  for (std::size_t r = 0; r < train.rows; ++r) {
    const double* row = train.row(r);
    for (std::size_t c = 0; c < train.cols; ++c) mean[c] += row[c];
  }
  for (auto& m : mean) m /= static_cast<double>(train.rows);
  for (std::size_t r = 0; r < train.rows; ++r) {
    const double* row = train.row(r);
    for (std::size_t c = 0; c < train.cols; ++c) {
      const double d = row[c] - mean[c];
      std[c] += d * d;
    }
  }
  for (auto& s : std) {
    s = std::sqrt(s / static_cast<double>(train.rows));
    if (s < 1e-12) s = 1.0;  // constant feature: leave centered at zero
  }
}

FeatureMatrix FeatureScaler::transform(const FeatureMatrix& x) const {
  if (x.cols != mean.size()) throw std::invalid_argument("feature scaler: column mismatch");
  FeatureMatrix out = x;
  for (std::size_t r = 0; r < out.rows; ++r) {
    double* row = out.data.data() + r * out.cols;
    for (std::size_t c = 0; c < out.cols; ++c) row[c] = (row[c] - mean[c]) / std[c];
  }
  return out;
}

void cholesky_solve_in_place(std::vector<double>& a, std::size_t n, std::vector<double>& rhs,
                             std::size_t rhs_cols) {
  // Lower-triangular factor, in place.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      if (i == j) {
        if (s <= 0.0) throw std::runtime_error("ridge: system not positive definite");
        a[i * n + i] = std::sqrt(s);
      } else {
        a[i * n + j] = s / a[j * n + j];
      }
    }
  }
  // Forward then backward substitution on all right-hand sides.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < rhs_cols; ++c) {
      double s = rhs[i * rhs_cols + c];
      for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * rhs[k * rhs_cols + c];
      rhs[i * rhs_cols + c] = s / a[i * n + i];
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t c = 0; c < rhs_cols; ++c) {
      double s = rhs[ii * rhs_cols + c];
      for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * rhs[k * rhs_cols + c];
      rhs[ii * rhs_cols + c] = s / a[ii * n + ii];
    }
  }
}

RidgeModel RidgeModel::fit(const FeatureMatrix& x, const std::vector<int>& labels, double lambda,
                           std::size_t classes) {
  if (x.rows < 2) throw std::invalid_argument("ridge: need at least 2 samples");
  if (labels.size() != x.rows) throw std::invalid_argument("ridge: labels/rows mismatch");
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge: lambda must be positive");
  const std::size_t n = x.rows, d = x.cols;

  RidgeModel model;
  model.classes_ = classes;
  model.feature_dim_ = d;
  model.lambda_ = lambda;
  model.intercepts_.assign(classes, 0.0);

  // +-1 one-vs-rest targets, centered per class; intercept is the class mean
  // (train features are standardized, so column means vanish).
  std::vector<double> targets(n * classes);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      const double y = labels[i] == static_cast<int>(c) ? 1.0 : -1.0;
      targets[i * classes + c] = y;
      model.intercepts_[c] += y;
    }
  }
  for (auto& b : model.intercepts_) b /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < classes; ++c) targets[i * classes + c] -= model.intercepts_[c];

  // Dual: alpha = (X X^T + lambda I)^{-1} Yc, W = X^T alpha.
  std::vector<double> gram(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ri = x.row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const double* rj = x.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += ri[k] * rj[k];
      gram[i * n + j] = s;
      gram[j * n + i] = s;
    }
    gram[i * n + i] += lambda;
  }
  cholesky_solve_in_place(gram, n, targets, classes);  // targets now holds alpha

  model.weights_.assign(d * classes, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ri = x.row(i);
    const double* ai = targets.data() + i * classes;
    for (std::size_t k = 0; k < d; ++k) {
      double* wrow = model.weights_.data() + k * classes;
      const double xv = ri[k];
      for (std::size_t c = 0; c < classes; ++c) wrow[c] += xv * ai[c];
    }
  }
  return model;
}

RidgeModel RidgeModel::fit_grid(const FeatureMatrix& train_x, const std::vector<int>& train_labels,
                                const FeatureMatrix& val_x, const std::vector<int>& val_labels,
                                const std::vector<double>& lambda_grid, std::size_t classes) {
  if (lambda_grid.empty()) throw std::invalid_argument("ridge: empty lambda grid");
  RidgeModel best;
  double best_acc = -1.0;
  for (double lambda : lambda_grid) {
    RidgeModel m = fit(train_x, train_labels, lambda, classes);
    const double acc = m.accuracy(val_x, val_labels);
    if (acc > best_acc) {
      best_acc = acc;
      best = std::move(m);
    }
  }
  return best;
}

std::vector<double> RidgeModel::scores(const double* features) const {
  std::vector<double> s(intercepts_);
  for (std::size_t k = 0; k < feature_dim_; ++k) {
    const double xv = features[k];
    const double* wrow = weights_.data() + k * classes_;
    for (std::size_t c = 0; c < classes_; ++c) s[c] += xv * wrow[c];
  }
  return s;
}

int RidgeModel::predict_row(const double* features) const {
  const auto s = scores(features);
  std::size_t best = 0;
  for (std::size_t c = 1; c < s.size(); ++c)
    if (s[c] > s[best]) best = c;  // ties keep the lowest index
  return static_cast<int>(best);
}

std::vector<int> RidgeModel::predict(const FeatureMatrix& x) const {
  if (x.cols != feature_dim_) throw std::invalid_argument("ridge: feature dim mismatch");
  std::vector<int> out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) out[r] = predict_row(x.row(r));
  return out;
}

double RidgeModel::accuracy(const FeatureMatrix& x, const std::vector<int>& labels) const {
  const auto pred = predict(x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == labels[i]) ++hits;
  return pred.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pred.size());
}

RidgeModel RidgeModel::from_raw(std::size_t classes, std::size_t feature_dim, double lambda,
                                std::vector<double> weights, std::vector<double> intercepts) {
  RidgeModel m;
  m.classes_ = classes;
  m.feature_dim_ = feature_dim;
  m.lambda_ = lambda;
  m.weights_ = std::move(weights);
  m.intercepts_ = std::move(intercepts);
  if (m.weights_.size() != feature_dim * classes || m.intercepts_.size() != classes) {
    throw std::invalid_argument("ridge: raw tensor sizes inconsistent");
  }
  return m;
}

}  // namespace noisyarm
