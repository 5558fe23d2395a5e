#include "noisyarm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "noisyarm/models.hpp"
#include "noisyarm/rng.hpp"
#include "noisyarm/series.hpp"

namespace noisyarm {

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

double check_gradients(const std::string& name, const std::vector<NodePtr>& params,
                       const std::function<NodePtr()>& builder, std::uint64_t seed,
                       std::size_t max_entries_per_tensor) {
  constexpr double eps = 1e-4;
  auto loss = builder();
  zero_gradients(loss);
  for (const auto& p : params) {
    if (!p->grad.empty()) p->grad.fill(0.0);
  }
  backward(loss);

  Rng rng(mix_seed(seed, name));
  double worst = 0.0;
  for (const auto& p : params) {
    p->ensure_grad();
    std::vector<std::size_t> entries;
    if (max_entries_per_tensor == 0 || p->value.size() <= max_entries_per_tensor) {
      entries.resize(p->value.size());
      for (std::size_t i = 0; i < entries.size(); ++i) entries[i] = i;
    } else {
      for (std::size_t i = 0; i < max_entries_per_tensor; ++i) {
        entries.push_back(rng.uniform_index(p->value.size()));
      }
    }
    for (std::size_t idx : entries) {
      const double saved = p->value[idx];
      p->value[idx] = saved + eps;
      const double up = builder()->value[0];
      p->value[idx] = saved - eps;
      const double down = builder()->value[0];
      p->value[idx] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad[idx];
      const double denom = std::max({1e-3, std::abs(analytic), std::abs(numeric)});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

namespace {

NodePtr random_param(std::vector<std::size_t> shape, Rng& rng) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return parameter(Tensor(std::move(shape), std::move(v), "gradcheck"));
}

// Fixed random weights turning an op output into a scalar so every output
// entry influences the loss. Created once per check; reused across rebuilds.
NodePtr reduction_weights(const std::vector<std::size_t>& shape, Rng& rng) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return constant(Tensor(shape, std::move(v), "gradcheck"));
}

Series random_series(std::size_t channels, std::size_t timesteps, Rng& rng) {
  std::vector<double> v(channels * timesteps);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  std::vector<std::string> names;
  for (std::size_t c = 0; c < channels; ++c) names.push_back("ch" + std::to_string(c));
  return Series(channels, timesteps, std::move(v), std::move(names));
}

}  // namespace

GradCheckReport run_gradient_checks(std::uint64_t seed) {
  GradCheckReport report;
  Rng rng(seed);
  auto record = [&](const std::string& name, const std::vector<NodePtr>& params,
                    const std::function<NodePtr()>& builder, std::size_t max_entries = 0) {
    report.entries.push_back({name, check_gradients(name, params, builder, seed, max_entries)});
  };
  // Builds the op once to size the reduction weights, then returns a
  // rebuildable scalar loss.
  auto scalarize = [&rng](const std::function<NodePtr()>& op) {
    auto w = reduction_weights(op()->value.shape(), rng);
    return std::function<NodePtr()>([op, w] { return sum_all(mul(op(), w)); });
  };

  {
    auto a = random_param({3, 4}, rng);
    auto b = random_param({3, 4}, rng);
    record("add", {a, b}, scalarize([=] { return add(a, b); }));
  }
  {
    auto a = random_param({3, 4}, rng);
    auto b = random_param({3, 4}, rng);
    record("mul", {a, b}, scalarize([=] { return mul(a, b); }));
  }
  {
    auto a = random_param({2, 5}, rng);
    record("scale", {a}, scalarize([=] { return scale(a, -1.7); }));
  }
  {
    // Inputs away from the kink at zero.
    auto a = parameter(Tensor({6}, {0.9, -0.7, 0.4, -1.3, 2.2, -0.2}, "gradcheck"));
    record("relu", {a}, scalarize([=] { return relu(a); }));
  }
  {
    auto a = random_param({2, 3, 2}, rng);
    record("flatten", {a}, scalarize([=] { return flatten(a); }));
  }
  {
    auto a = random_param({4, 3}, rng);
    record("sum", {a}, [=] { return sum_all(a); });
  }
  {
    auto a = random_param({5}, rng);
    auto b = random_param({5}, rng);
    auto c = random_param({5}, rng);
    record("stack_rows", {a, b, c}, scalarize([=] { return stack_rows({a, b, c}); }));
  }
  {
    auto a = random_param({3, 4}, rng);
    auto b = random_param({4, 5}, rng);
    record("matmul", {a, b}, scalarize([=] { return matmul(a, b); }));
  }
  {
    auto x = random_param({6}, rng);
    auto w = random_param({6, 4}, rng);
    auto b = random_param({4}, rng);
    record("dense_vector", {x, w, b}, scalarize([=] { return dense(x, w, b); }));
  }
  {
    auto x = random_param({5, 3}, rng);
    auto w = random_param({3, 4}, rng);
    auto b = random_param({4}, rng);
    record("dense_rows", {x, w, b}, scalarize([=] { return dense(x, w, b); }));
  }
  {
    auto x = random_param({2, 9}, rng);
    auto w = random_param({3, 2, 3}, rng);
    auto b = random_param({3}, rng);
    record("conv1d", {x, w, b}, scalarize([=] { return conv1d(x, w, b); }));
  }
  {
    auto x = random_param({3, 7}, rng);
    record("maxpool1d", {x}, scalarize([=] { return maxpool1d(x, 2); }));
  }
  {
    auto x = random_param({5, 4}, rng);
    record("global_avg_pool1d", {x}, scalarize([=] { return global_avg_pool1d(x); }));
  }
  {
    auto x = random_param({3, 6}, rng);
    record("softmax", {x}, scalarize([=] { return softmax(x); }));
  }
  {
    auto x = random_param({4, 6}, rng);
    auto g = random_param({6}, rng);
    auto b = random_param({6}, rng);
    record("layer_norm", {x, g, b}, scalarize([=] { return layer_norm(x, g, b); }));
  }
  {
    auto q = random_param({5, 4}, rng);
    auto k = random_param({5, 4}, rng);
    auto v = random_param({5, 4}, rng);
    record("attention", {q, k, v},
           scalarize([=] { return scaled_dot_product_attention(q, k, v, 2); }));
  }
  {
    auto logits = random_param({3, 9}, rng);
    const std::vector<int> labels{2, 0, 7};
    record("cross_entropy", {logits}, [=] { return cross_entropy_loss(logits, labels); });
  }
  {
    // Three stacked dense layers, every entry checked.
    auto x = random_param({6}, rng);
    auto w1 = random_param({6, 8}, rng);
    auto b1 = random_param({8}, rng);
    auto w2 = random_param({8, 8}, rng);
    auto b2 = random_param({8}, rng);
    auto w3 = random_param({8, 4}, rng);
    auto b3 = random_param({4}, rng);
    record("dense_net_3layer", {x, w1, b1, w2, b2, w3, b3}, scalarize([=] {
             auto h = relu(dense(x, w1, b1));
             h = relu(dense(h, w2, b2));
             return dense(h, w3, b3);
           }));
  }

  // Whole architectures on tiny shapes (C=2, T=12, batch=2).
  {
    const std::size_t channels = 2, timesteps = 12;
    std::vector<Series> batch{random_series(channels, timesteps, rng),
                              random_series(channels, timesteps, rng)};
    const std::vector<int> labels{3, 6};
    CnnConfig cfg;
    cfg.conv1_filters = 4;
    cfg.conv2_filters = 5;
    cfg.dense_hidden = 7;
    auto model = build_cnn(channels, timesteps, cfg, mix_seed(seed, "cnn"));
    record(
        "cnn_end_to_end", model->parameters(),
        [&model, batch, labels] {
          std::vector<NodePtr> rows;
          for (const auto& s : batch) rows.push_back(model->logits(s));
          return cross_entropy_loss(stack_rows(rows), labels);
        },
        24);
  }
  {
    const std::size_t channels = 2, timesteps = 12;
    std::vector<Series> batch{random_series(channels, timesteps, rng),
                              random_series(channels, timesteps, rng)};
    const std::vector<int> labels{1, 8};
    TransformerConfig cfg;
    cfg.model_dim = 8;
    cfg.ffn_dim = 10;
    cfg.blocks = 2;
    cfg.heads = 2;
    auto model = build_transformer(channels, timesteps, cfg, mix_seed(seed, "tf"));
    record(
        "transformer_end_to_end", model->parameters(),
        [&model, batch, labels] {
          std::vector<NodePtr> rows;
          for (const auto& s : batch) rows.push_back(model->logits(s));
          return cross_entropy_loss(stack_rows(rows), labels);
        },
        16);
  }
  return report;
}

}  // namespace noisyarm
