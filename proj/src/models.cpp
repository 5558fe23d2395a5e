#include "noisyarm/models.hpp"

#include <cmath>
#include <stdexcept>

#include "noisyarm/rng.hpp"

namespace noisyarm {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::cnn: return "cnn";
    case ModelKind::transformer: return "transformer";
    case ModelKind::rocket: return "rocket";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "cnn") return ModelKind::cnn;
  if (name == "transformer") return ModelKind::transformer;
  if (name == "rocket") return ModelKind::rocket;
  throw std::invalid_argument("unknown model kind: " + name);
}

std::size_t cnn_min_timesteps(const CnnConfig& cfg) {
  // Invert conv(k1)->pool(p1)->conv(k2)->pool(p2) for one surviving step.
  return cfg.pool1 * (cfg.conv2_kernel + cfg.pool2 - 1) + cfg.conv1_kernel - 1;
}

std::size_t cnn_flatten_size(std::size_t channels, std::size_t timesteps, const CnnConfig& cfg) {
  (void)channels;
  if (timesteps < cnn_min_timesteps(cfg)) {
    throw std::invalid_argument("cnn: timesteps " + std::to_string(timesteps) +
                                " below the minimum " + std::to_string(cnn_min_timesteps(cfg)));
  }
  const std::size_t l1 = timesteps - cfg.conv1_kernel + 1;
  const std::size_t p1 = l1 / cfg.pool1;
  const std::size_t l2 = p1 - cfg.conv2_kernel + 1;
  const std::size_t p2 = l2 / cfg.pool2;
  return cfg.conv2_filters * p2;
}

std::vector<Tensor> NetModel::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(parameters().size());
  for (const auto& p : parameters()) out.push_back(p->value);
  return out;
}

void NetModel::restore(const std::vector<Tensor>& params) {
  const auto& mine = parameters();
  if (params.size() != mine.size()) {
    throw ShapeError("model restore: expected " + std::to_string(mine.size()) + " tensors, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (!mine[i]->value.same_shape(params[i])) {
      throw ShapeError("model restore: parameter " + std::to_string(i) + " shape " +
                       params[i].shape_str() + " != " + mine[i]->value.shape_str());
    }
    mine[i]->value = params[i];
  }
}

void NetModel::zero_param_grads() {
  for (const auto& p : parameters()) {
    if (!p->grad.empty()) p->grad.fill(0.0);
  }
}

namespace {

Tensor init_uniform(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor(std::move(shape), std::move(v), "init");
}

Tensor series_tensor(const Series& s) {
  return Tensor({s.channels(), s.timesteps()}, s.values(), "input");
}

Tensor series_tensor_transposed(const Series& s) {
  std::vector<double> v(s.values().size());
  const std::size_t c = s.channels(), t = s.timesteps();
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < t; ++j) v[j * c + i] = s.at(i, j);
  return Tensor({t, c}, std::move(v), "input");
}

class CnnModel final : public NetModel {
 public:
  CnnModel(std::size_t channels, std::size_t timesteps, const CnnConfig& cfg,
           std::uint64_t init_seed)
      : cfg_(cfg), channels_(channels), timesteps_(timesteps) {
    if (timesteps < cnn_min_timesteps(cfg)) {
      throw std::invalid_argument("cnn: timesteps " + std::to_string(timesteps) +
                                  " below the minimum " +
                                  std::to_string(cnn_min_timesteps(cfg)));
    }
    Rng rng(init_seed);
    const std::size_t flat = cnn_flatten_size(channels, timesteps, cfg);
    w1_ = parameter(init_uniform({cfg.conv1_filters, channels, cfg.conv1_kernel},
                                 channels * cfg.conv1_kernel, rng));
    b1_ = parameter(Tensor({cfg.conv1_filters}));
    w2_ = parameter(init_uniform({cfg.conv2_filters, cfg.conv1_filters, cfg.conv2_kernel},
                                 cfg.conv1_filters * cfg.conv2_kernel, rng));
    b2_ = parameter(Tensor({cfg.conv2_filters}));
    wd1_ = parameter(init_uniform({flat, cfg.dense_hidden}, flat, rng));
    bd1_ = parameter(Tensor({cfg.dense_hidden}));
    wd2_ = parameter(init_uniform({cfg.dense_hidden, cfg.classes}, cfg.dense_hidden, rng));
    bd2_ = parameter(Tensor({cfg.classes}));
    params_ = {w1_, b1_, w2_, b2_, wd1_, bd1_, wd2_, bd2_};
  }

  NodePtr logits(const Series& sample) const override {
    if (sample.channels() != channels_ || sample.timesteps() != timesteps_) {
      throw ShapeError("cnn: sample shape (" + std::to_string(sample.channels()) + "," +
                       std::to_string(sample.timesteps()) + ") != training shape (" +
                       std::to_string(channels_) + "," + std::to_string(timesteps_) + ")");
    }
    auto x = constant(series_tensor(sample));
    auto h = maxpool1d(relu(conv1d(x, w1_, b1_)), cfg_.pool1);
    h = maxpool1d(relu(conv1d(h, w2_, b2_)), cfg_.pool2);
    h = relu(dense(flatten(h), wd1_, bd1_));
    return dense(h, wd2_, bd2_);
  }

  const std::vector<NodePtr>& parameters() const override { return params_; }
  ModelKind kind() const override { return ModelKind::cnn; }

 private:
  CnnConfig cfg_;
  std::size_t channels_, timesteps_;
  NodePtr w1_, b1_, w2_, b2_, wd1_, bd1_, wd2_, bd2_;
  std::vector<NodePtr> params_;
};

Tensor sinusoidal_encoding(std::size_t timesteps, std::size_t dim) {
  std::vector<double> v(timesteps * dim);
  for (std::size_t t = 0; t < timesteps; ++t) {
    for (std::size_t i = 0; i < dim; i += 2) {
      const double rate = std::pow(10000.0, static_cast<double>(i) / static_cast<double>(dim));
      const double angle = static_cast<double>(t) / rate;
      v[t * dim + i] = std::sin(angle);
      if (i + 1 < dim) v[t * dim + i + 1] = std::cos(angle);
    }
  }
  return Tensor({timesteps, dim}, std::move(v), "positional_encoding");
}

class TransformerModel final : public NetModel {
 public:
  TransformerModel(std::size_t channels, std::size_t timesteps, const TransformerConfig& cfg,
                   std::uint64_t init_seed, bool positional)
      : cfg_(cfg), channels_(channels), timesteps_(timesteps), positional_(positional) {
    if (cfg.heads == 0 || cfg.model_dim % cfg.heads != 0) {
      throw std::invalid_argument("transformer: model_dim " + std::to_string(cfg.model_dim) +
                                  " not divisible by heads " + std::to_string(cfg.heads));
    }
    Rng rng(init_seed);
    const std::size_t d = cfg.model_dim;
    w_in_ = parameter(init_uniform({channels, d}, channels, rng));
    b_in_ = parameter(Tensor({d}));
    params_ = {w_in_, b_in_};
    blocks_.resize(cfg.blocks);
    for (auto& blk : blocks_) {
      blk.wq = parameter(init_uniform({d, d}, d, rng));
      blk.bq = parameter(Tensor({d}));
      blk.wk = parameter(init_uniform({d, d}, d, rng));
      blk.bk = parameter(Tensor({d}));
      blk.wv = parameter(init_uniform({d, d}, d, rng));
      blk.bv = parameter(Tensor({d}));
      blk.wo = parameter(init_uniform({d, d}, d, rng));
      blk.bo = parameter(Tensor({d}));
      blk.ln1_g = parameter(Tensor({d}, std::vector<double>(d, 1.0), "ln_gain"));
      blk.ln1_b = parameter(Tensor({d}));
      blk.wf1 = parameter(init_uniform({d, cfg.ffn_dim}, d, rng));
      blk.bf1 = parameter(Tensor({cfg.ffn_dim}));
      blk.wf2 = parameter(init_uniform({cfg.ffn_dim, d}, cfg.ffn_dim, rng));
      blk.bf2 = parameter(Tensor({d}));
      blk.ln2_g = parameter(Tensor({d}, std::vector<double>(d, 1.0), "ln_gain"));
      blk.ln2_b = parameter(Tensor({d}));
      for (const auto& p : {blk.wq, blk.bq, blk.wk, blk.bk, blk.wv, blk.bv, blk.wo, blk.bo,
                            blk.ln1_g, blk.ln1_b, blk.wf1, blk.bf1, blk.wf2, blk.bf2, blk.ln2_g,
                            blk.ln2_b}) {
        params_.push_back(p);
      }
    }
    w_out_ = parameter(init_uniform({d, cfg.classes}, d, rng));
    b_out_ = parameter(Tensor({cfg.classes}));
    params_.push_back(w_out_);
    params_.push_back(b_out_);
    pos_enc_ = sinusoidal_encoding(timesteps, d);
  }

  NodePtr logits(const Series& sample) const override {
    if (sample.channels() != channels_ || sample.timesteps() != timesteps_) {
      throw ShapeError("transformer: sample shape (" + std::to_string(sample.channels()) + "," +
                       std::to_string(sample.timesteps()) + ") != training shape (" +
                       std::to_string(channels_) + "," + std::to_string(timesteps_) + ")");
    }
    auto x = dense(constant(series_tensor_transposed(sample)), w_in_, b_in_);
    if (positional_) x = add(x, constant(pos_enc_));
    for (const auto& blk : blocks_) {
      auto q = dense(x, blk.wq, blk.bq);
      auto k = dense(x, blk.wk, blk.bk);
      auto v = dense(x, blk.wv, blk.bv);
      auto att = dense(scaled_dot_product_attention(q, k, v, cfg_.heads), blk.wo, blk.bo);
      x = layer_norm(add(x, att), blk.ln1_g, blk.ln1_b);
      auto ff = dense(relu(dense(x, blk.wf1, blk.bf1)), blk.wf2, blk.bf2);
      x = layer_norm(add(x, ff), blk.ln2_g, blk.ln2_b);
    }
    return dense(global_avg_pool1d(x), w_out_, b_out_);
  }

  const std::vector<NodePtr>& parameters() const override { return params_; }
  ModelKind kind() const override { return ModelKind::transformer; }

 private:
  struct Block {
    NodePtr wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, wf1, bf1, wf2, bf2, ln2_g, ln2_b;
  };
  TransformerConfig cfg_;
  std::size_t channels_, timesteps_;
  bool positional_;
  NodePtr w_in_, b_in_, w_out_, b_out_;
  std::vector<Block> blocks_;
  std::vector<NodePtr> params_;
  Tensor pos_enc_;
};

}  // namespace

std::unique_ptr<NetModel> build_cnn(std::size_t channels, std::size_t timesteps,
                                    const CnnConfig& cfg, std::uint64_t init_seed) {
  return std::make_unique<CnnModel>(channels, timesteps, cfg, init_seed);
}

std::unique_ptr<NetModel> build_transformer(std::size_t channels, std::size_t timesteps,
                                            const TransformerConfig& cfg, std::uint64_t init_seed,
                                            bool positional_encoding) {
  return std::make_unique<TransformerModel>(channels, timesteps, cfg, init_seed,
                                            positional_encoding);
}

}  // namespace noisyarm
