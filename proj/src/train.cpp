#include "noisyarm/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "noisyarm/rng.hpp"

namespace noisyarm {

namespace {

int argmax_row(const double* row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < n; ++j)
    if (row[j] > row[best]) best = j;
  return static_cast<int>(best);
}

double row_cross_entropy(const double* logits, std::size_t n, int label) {
  double m = logits[0];
  for (std::size_t j = 1; j < n; ++j) m = std::max(m, logits[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += std::exp(logits[j] - m);
  return m + std::log(sum) - logits[static_cast<std::size_t>(label)];
}

std::unique_ptr<NetModel> build_net(ModelKind kind, const ModelSpecs& specs, std::size_t channels,
                                    std::size_t timesteps, std::uint64_t init_seed) {
  if (kind == ModelKind::cnn) return build_cnn(channels, timesteps, specs.cnn, init_seed);
  return build_transformer(channels, timesteps, specs.transformer, init_seed);
}

TrainedModel train_rocket(const ModelSpecs& specs, const std::vector<const Series*>& train_x,
                          const std::vector<int>& train_y, const std::vector<const Series*>& val_x,
                          const std::vector<int>& val_y, const TrainConfig& cfg) {
  RocketConfig rcfg = specs.rocket;
  rcfg.seed = mix_seed(cfg.seed, "rocket_kernels");
  TrainedModel out;
  out.kind = ModelKind::rocket;
  out.channels = train_x[0]->channels();
  out.timesteps = train_x[0]->timesteps();
  out.rocket_cfg = rcfg;
  out.train_cfg = cfg;
  out.kernels = sample_rocket_kernels(rcfg, out.channels, out.timesteps);

  const FeatureMatrix train_raw = rocket_transform(train_x, out.kernels);
  out.feature_scaler.fit(train_raw);
  const FeatureMatrix train_std = out.feature_scaler.transform(train_raw);
  const FeatureMatrix val_std = out.feature_scaler.transform(rocket_transform(val_x, out.kernels));
  out.ridge = RidgeModel::fit_grid(train_std, train_y, val_std, val_y, rcfg.ridge_lambda_grid);
  return out;
}

}  // namespace

TrainedModel train(ModelKind kind, const ModelSpecs& specs,
                   const std::vector<const Series*>& train_x, const std::vector<int>& train_y,
                   const std::vector<const Series*>& val_x, const std::vector<int>& val_y,
                   const TrainConfig& cfg) {
  if (train_x.empty() || val_x.empty()) {
    throw std::invalid_argument("train: empty train or validation set");
  }
  if (train_x.size() != train_y.size() || val_x.size() != val_y.size()) {
    throw std::invalid_argument("train: samples/labels size mismatch");
  }
  if (cfg.batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");

  if (kind == ModelKind::rocket) {
    return train_rocket(specs, train_x, train_y, val_x, val_y, cfg);
  }

  auto model = build_net(kind, specs, train_x[0]->channels(), train_x[0]->timesteps(),
                         mix_seed(cfg.seed, "init"));
  OptimizerState optimizer(cfg.optimizer, cfg.learning_rate);
  Rng shuffle_rng(mix_seed(cfg.seed, "shuffle"));

  std::vector<std::size_t> order(train_x.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochStats> history;
  std::vector<Tensor> best_params = model->snapshot();
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t epochs_since_best = 0;
  std::size_t iterations = 0;
  std::size_t epoch = 0;

  const std::size_t classes = (kind == ModelKind::cnn) ? specs.cnn.classes
                                                       : specs.transformer.classes;
  while (iterations < cfg.max_iterations) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t loss_batches = 0, hits = 0, seen = 0;
    try {
      for (std::size_t pos = 0; pos < order.size() && iterations < cfg.max_iterations;
           pos += cfg.batch_size) {
        const std::size_t end = std::min(pos + cfg.batch_size, order.size());
        std::vector<NodePtr> rows;
        std::vector<int> labels;
        rows.reserve(end - pos);
        labels.reserve(end - pos);
        for (std::size_t i = pos; i < end; ++i) {
          rows.push_back(model->logits(*train_x[order[i]]));
          labels.push_back(train_y[order[i]]);
        }
        auto logits = stack_rows(rows);
        auto loss = cross_entropy_loss(logits, labels);
        model->zero_param_grads();
        backward(loss);
        optimizer.step(model->parameters());

        loss_sum += loss->value[0];
        ++loss_batches;
        for (std::size_t i = 0; i < labels.size(); ++i) {
          if (argmax_row(logits->value.data() + i * classes, classes) == labels[i]) ++hits;
        }
        seen += labels.size();
        ++iterations;
      }
    } catch (const NonFiniteError& e) {
      throw TrainDivergence(std::string("train: loss diverged (") + e.what() + ")",
                            history.empty() ? 0 : history.back().epoch);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_batches ? loss_sum / static_cast<double>(loss_batches) : 0.0;
    stats.train_accuracy = seen ? static_cast<double>(hits) / static_cast<double>(seen) : 0.0;
    std::tie(stats.val_loss, stats.val_accuracy) = evaluate_net(*model, val_x, val_y);
    history.push_back(stats);

    if (stats.val_loss < best_val_loss) {
      best_val_loss = stats.val_loss;
      best_params = model->snapshot();
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best > cfg.early_stopping_patience) break;
    }
    ++epoch;
  }

  model->restore(best_params);

  TrainedModel out;
  out.kind = kind;
  out.channels = train_x[0]->channels();
  out.timesteps = train_x[0]->timesteps();
  out.cnn_cfg = specs.cnn;
  out.transformer_cfg = specs.transformer;
  out.params = std::move(best_params);
  out.history = std::move(history);
  out.train_cfg = cfg;
  return out;
}

std::pair<double, double> evaluate_net(const NetModel& model,
                                       const std::vector<const Series*>& samples,
                                       const std::vector<int>& labels) {
  double loss = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto logits = model.logits(*samples[i]);
    const std::size_t n = logits->value.size();
    loss += row_cross_entropy(logits->value.data(), n, labels[i]);
    if (argmax_row(logits->value.data(), n) == labels[i]) ++hits;
  }
  const double count = static_cast<double>(samples.size());
  return {loss / count, static_cast<double>(hits) / count};
}

std::vector<int> TrainedModel::predict(const std::vector<const Series*>& samples,
                                       std::vector<std::vector<double>>* scores) const {
  std::vector<int> out;
  out.reserve(samples.size());
  if (scores) scores->clear();
  if (kind == ModelKind::rocket) {
    const FeatureMatrix feats = feature_scaler.transform(rocket_transform(samples, kernels));
    for (std::size_t r = 0; r < feats.rows; ++r) {
      auto s = ridge.scores(feats.row(r));
      out.push_back(argmax_row(s.data(), s.size()));
      if (scores) scores->push_back(std::move(s));
    }
    return out;
  }
  ModelSpecs specs;
  specs.cnn = cnn_cfg;
  specs.transformer = transformer_cfg;
  auto model = build_net(kind, specs, channels, timesteps, 0);
  model->restore(params);
  for (const Series* s : samples) {
    auto logits = model->logits(*s);
    out.push_back(argmax_row(logits->value.data(), logits->value.size()));
    if (scores) {
      scores->emplace_back(logits->value.values());
    }
  }
  return out;
}

double TrainedModel::accuracy(const std::vector<const Series*>& samples,
                              const std::vector<int>& labels) const {
  const auto pred = predict(samples);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == labels[i]) ++hits;
  return pred.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pred.size());
}

namespace {

void write_doubles(std::FILE* f, const std::vector<double>& v) {
  char buf[40];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), i ? " %.17g" : "%.17g", v[i]);
    std::fputs(buf, f);
  }
  std::fputc('\n', f);
}

std::vector<double> read_doubles(std::istream& in, std::size_t n, const char* what) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in >> v[i])) throw std::runtime_error(std::string("load_model: truncated ") + what);
  }
  return v;
}

void expect_tag(std::istream& in, const char* tag) {
  std::string got;
  if (!(in >> got) || got != tag) {
    throw std::runtime_error(std::string("load_model: expected '") + tag + "', got '" + got + "'");
  }
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("save_model: cannot open " + path);
  std::fprintf(f, "noisyarm-model 1\n");
  std::fprintf(f, "kind %s\n", to_string(model.kind).c_str());
  std::fprintf(f, "shape %zu %zu\n", model.channels, model.timesteps);
  std::fprintf(f, "train_cfg %zu %zu %s %.17g %zu %llu\n", model.train_cfg.batch_size,
               model.train_cfg.max_iterations, to_string(model.train_cfg.optimizer).c_str(),
               model.train_cfg.learning_rate, model.train_cfg.early_stopping_patience,
               static_cast<unsigned long long>(model.train_cfg.seed));
  std::fprintf(f, "history %zu\n", model.history.size());
  for (const auto& h : model.history) {
    std::fprintf(f, "%zu %.17g %.17g %.17g %.17g\n", h.epoch, h.train_loss, h.train_accuracy,
                 h.val_loss, h.val_accuracy);
  }
  switch (model.kind) {
    case ModelKind::cnn:
      std::fprintf(f, "cnn_cfg %zu %zu %zu %zu %zu %zu %zu %zu\n", model.cnn_cfg.conv1_filters,
                   model.cnn_cfg.conv1_kernel, model.cnn_cfg.pool1, model.cnn_cfg.conv2_filters,
                   model.cnn_cfg.conv2_kernel, model.cnn_cfg.pool2, model.cnn_cfg.dense_hidden,
                   model.cnn_cfg.classes);
      break;
    case ModelKind::transformer:
      std::fprintf(f, "transformer_cfg %zu %zu %zu %zu %zu\n", model.transformer_cfg.heads,
                   model.transformer_cfg.ffn_dim, model.transformer_cfg.blocks,
                   model.transformer_cfg.model_dim, model.transformer_cfg.classes);
      break;
    case ModelKind::rocket:
      std::fprintf(f, "rocket_cfg %zu %llu\n", model.rocket_cfg.num_kernels,
                   static_cast<unsigned long long>(model.rocket_cfg.seed));
      std::fprintf(f, "lambda_grid %zu", model.rocket_cfg.ridge_lambda_grid.size());
      for (double l : model.rocket_cfg.ridge_lambda_grid) std::fprintf(f, " %.17g", l);
      std::fputc('\n', f);
      break;
  }
  if (model.kind == ModelKind::rocket) {
    std::fprintf(f, "kernels %zu\n", model.kernels.size());
    for (const auto& k : model.kernels) {
      std::fprintf(f, "%zu", k.weights.size());
      for (double w : k.weights) std::fprintf(f, " %.17g", w);
      std::fprintf(f, " %.17g %zu %d %zu\n", k.bias, k.dilation, k.padding ? 1 : 0, k.channel);
    }
    std::fprintf(f, "scaler %zu\n", model.feature_scaler.mean.size());
    write_doubles(f, model.feature_scaler.mean);
    write_doubles(f, model.feature_scaler.std);
    std::fprintf(f, "ridge %zu %zu %.17g\n", model.ridge.classes(), model.ridge.feature_dim(),
                 model.ridge.lambda());
    write_doubles(f, model.ridge.weights());
    write_doubles(f, model.ridge.intercepts());
  } else {
    std::fprintf(f, "params %zu\n", model.params.size());
    for (const auto& t : model.params) {
      std::fprintf(f, "tensor %zu", t.rank());
      for (std::size_t d : t.shape()) std::fprintf(f, " %zu", d);
      std::fputc('\n', f);
      write_doubles(f, t.values());
    }
  }
  if (std::fclose(f) != 0) throw std::runtime_error("save_model: write to " + path + " failed");
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  expect_tag(in, "noisyarm-model");
  int version = 0;
  in >> version;
  if (version != 1) throw std::runtime_error("load_model: unsupported version");
  TrainedModel m;
  std::string word;
  expect_tag(in, "kind");
  in >> word;
  m.kind = model_kind_from_string(word);
  expect_tag(in, "shape");
  in >> m.channels >> m.timesteps;
  expect_tag(in, "train_cfg");
  {
    unsigned long long seed = 0;
    in >> m.train_cfg.batch_size >> m.train_cfg.max_iterations >> word >>
        m.train_cfg.learning_rate >> m.train_cfg.early_stopping_patience >> seed;
    m.train_cfg.optimizer = optimizer_from_string(word);
    m.train_cfg.seed = seed;
  }
  expect_tag(in, "history");
  std::size_t hist = 0;
  in >> hist;
  m.history.resize(hist);
  for (auto& h : m.history) {
    in >> h.epoch >> h.train_loss >> h.train_accuracy >> h.val_loss >> h.val_accuracy;
  }
  switch (m.kind) {
    case ModelKind::cnn:
      expect_tag(in, "cnn_cfg");
      in >> m.cnn_cfg.conv1_filters >> m.cnn_cfg.conv1_kernel >> m.cnn_cfg.pool1 >>
          m.cnn_cfg.conv2_filters >> m.cnn_cfg.conv2_kernel >> m.cnn_cfg.pool2 >>
          m.cnn_cfg.dense_hidden >> m.cnn_cfg.classes;
      break;
    case ModelKind::transformer:
      expect_tag(in, "transformer_cfg");
      in >> m.transformer_cfg.heads >> m.transformer_cfg.ffn_dim >> m.transformer_cfg.blocks >>
          m.transformer_cfg.model_dim >> m.transformer_cfg.classes;
      break;
    case ModelKind::rocket: {
      expect_tag(in, "rocket_cfg");
      unsigned long long seed = 0;
      in >> m.rocket_cfg.num_kernels >> seed;
      m.rocket_cfg.seed = seed;
      expect_tag(in, "lambda_grid");
      std::size_t n = 0;
      in >> n;
      m.rocket_cfg.ridge_lambda_grid = read_doubles(in, n, "lambda grid");
      break;
    }
  }
  if (m.kind == ModelKind::rocket) {
    expect_tag(in, "kernels");
    std::size_t n = 0;
    in >> n;
    m.kernels.resize(n);
    for (auto& k : m.kernels) {
      std::size_t len = 0;
      in >> len;
      k.weights = read_doubles(in, len, "kernel weights");
      int padding = 0;
      in >> k.bias >> k.dilation >> padding >> k.channel;
      k.padding = padding != 0;
    }
    expect_tag(in, "scaler");
    std::size_t dim = 0;
    in >> dim;
    m.feature_scaler.mean = read_doubles(in, dim, "scaler mean");
    m.feature_scaler.std = read_doubles(in, dim, "scaler std");
    expect_tag(in, "ridge");
    std::size_t classes = 0, fdim = 0;
    double lambda = 0.0;
    in >> classes >> fdim >> lambda;
    auto weights = read_doubles(in, fdim * classes, "ridge weights");
    auto intercepts = read_doubles(in, classes, "ridge intercepts");
    m.ridge = RidgeModel::from_raw(classes, fdim, lambda, std::move(weights),
                                   std::move(intercepts));
  } else {
    expect_tag(in, "params");
    std::size_t n = 0;
    in >> n;
    m.params.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      expect_tag(in, "tensor");
      std::size_t rank = 0;
      in >> rank;
      std::vector<std::size_t> shape(rank);
      std::size_t total = 1;
      for (auto& d : shape) {
        in >> d;
        total *= d;
      }
      auto values = read_doubles(in, total, "tensor values");
      m.params.emplace_back(std::move(shape), std::move(values), "load_model");
    }
  }
  if (!in) throw std::runtime_error("load_model: truncated file " + path);
  return m;
}

}  // namespace noisyarm
