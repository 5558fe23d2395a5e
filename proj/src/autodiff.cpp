#include "noisyarm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

namespace noisyarm {

namespace {

NodePtr make_node(const char* op, Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->value = std::move(value);
  node->parents = std::move(parents);
  for (const auto& p : node->parents) {
    if (p->requires_grad) {
      node->requires_grad = true;
      break;
    }
  }
  if (node->requires_grad) node->backward_fn = std::move(backward_fn);
  return node;
}

[[noreturn]] void shape_fail(const char* op, const std::string& expected, const Tensor& got) {
  throw ShapeError(std::string(op) + ": expected " + expected + ", got " + got.shape_str());
}

void require_rank(const char* op, const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) shape_fail(op, std::string(what) + " of rank " + std::to_string(rank), t);
}

// Row softmax with max subtraction; rows of length n, written in place.
void softmax_rows_inplace(double* x, std::size_t rows, std::size_t n) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = x + r * n;
    double m = row[0];
    for (std::size_t j = 1; j < n; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - m);
      sum += row[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < n; ++j) row[j] *= inv;
  }
}

}  // namespace

NodePtr constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->op = "constant";
  node->value = std::move(value);
  return node;
}

NodePtr parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->op = "parameter";
  node->value = std::move(value);
  node->requires_grad = true;
  return node;
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
  if (!a->value.same_shape(b->value)) {
    throw ShapeError("add: shape mismatch " + a->value.shape_str() + " vs " +
                     b->value.shape_str());
  }
  const std::size_t n = a->value.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a->value[i] + b->value[i];
  return make_node("add", Tensor(a->value.shape(), std::move(out), "add"), {a, b},
                   [](Node& self) {
                     for (int pi = 0; pi < 2; ++pi) {
                       Node& p = *self.parents[pi];
                       if (!p.requires_grad) continue;
                       p.ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                         p.grad[i] += self.grad[i];
                     }
                   });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
  if (!a->value.same_shape(b->value)) {
    throw ShapeError("mul: shape mismatch " + a->value.shape_str() + " vs " +
                     b->value.shape_str());
  }
  const std::size_t n = a->value.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a->value[i] * b->value[i];
  return make_node("mul", Tensor(a->value.shape(), std::move(out), "mul"), {a, b},
                   [](Node& self) {
                     Node& a = *self.parents[0];
                     Node& b = *self.parents[1];
                     if (a.requires_grad) {
                       a.ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                         a.grad[i] += self.grad[i] * b.value[i];
                     }
                     if (b.requires_grad) {
                       b.ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                         b.grad[i] += self.grad[i] * a.value[i];
                     }
                   });
}

NodePtr scale(const NodePtr& a, double c) {
  const std::size_t n = a->value.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a->value[i] * c;
  return make_node("scale", Tensor(a->value.shape(), std::move(out), "scale"), {a},
                   [c](Node& self) {
                     Node& a = *self.parents[0];
                     a.ensure_grad();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       a.grad[i] += self.grad[i] * c;
                   });
}

NodePtr relu(const NodePtr& x) {
  const std::size_t n = x->value.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x->value[i] > 0.0 ? x->value[i] : 0.0;
  return make_node("relu", Tensor(x->value.shape(), std::move(out), "relu"), {x},
                   [](Node& self) {
                     Node& p = *self.parents[0];
                     p.ensure_grad();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       if (p.value[i] > 0.0) p.grad[i] += self.grad[i];
                   });
}

NodePtr flatten(const NodePtr& x) {
  std::vector<double> out(x->value.values());
  return make_node("flatten", Tensor({x->value.size()}, std::move(out), "flatten"), {x},
                   [](Node& self) {
                     Node& p = *self.parents[0];
                     p.ensure_grad();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       p.grad[i] += self.grad[i];
                   });
}

NodePtr sum_all(const NodePtr& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x->value.size(); ++i) s += x->value[i];
  return make_node("sum", Tensor::scalar(s), {x}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < p.grad.size(); ++i) p.grad[i] += g;
  });
}

NodePtr stack_rows(const std::vector<NodePtr>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  const std::size_t d = rows[0]->value.size();
  for (const auto& r : rows) {
    if (r->value.rank() != 1 || r->value.size() != d) {
      throw ShapeError("stack_rows: expected rank-1 rows of length " + std::to_string(d) +
                       ", got " + r->value.shape_str());
    }
  }
  std::vector<double> out(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i]->value.data(), rows[i]->value.data() + d, out.begin() + i * d);
  }
  std::vector<NodePtr> parents(rows.begin(), rows.end());
  return make_node("stack_rows", Tensor({rows.size(), d}, std::move(out), "stack_rows"),
                   std::move(parents), [d](Node& self) {
                     for (std::size_t i = 0; i < self.parents.size(); ++i) {
                       Node& p = *self.parents[i];
                       if (!p.requires_grad) continue;
                       p.ensure_grad();
                       const double* g = self.grad.data() + i * d;
                       for (std::size_t j = 0; j < d; ++j) p.grad[j] += g[j];
                     }
                   });
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  require_rank("matmul", a->value, 2, "lhs");
  require_rank("matmul", b->value, 2, "rhs");
  const std::size_t m = a->value.dim(0), k = a->value.dim(1);
  const std::size_t k2 = b->value.dim(0), n = b->value.dim(1);
  if (k != k2) {
    throw ShapeError("matmul: inner dims differ, lhs " + a->value.shape_str() + " rhs " +
                     b->value.shape_str());
  }
  std::vector<double> out(m * n, 0.0);
  const double* A = a->value.data();
  const double* B = b->value.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* c = out.data() + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = A[i * k + l];
      const double* brow = B + l * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
    }
  }
  return make_node("matmul", Tensor({m, n}, std::move(out), "matmul"), {a, b},
                   [m, k, n](Node& self) {
                     Node& a = *self.parents[0];
                     Node& b = *self.parents[1];
                     const double* G = self.grad.data();
                     if (a.requires_grad) {
                       a.ensure_grad();
                       const double* B = b.value.data();
                       for (std::size_t i = 0; i < m; ++i) {
                         const double* grow = G + i * n;
                         for (std::size_t l = 0; l < k; ++l) {
                           const double* brow = B + l * n;
                           double s = 0.0;
                           for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                           a.grad[i * k + l] += s;
                         }
                       }
                     }
                     if (b.requires_grad) {
                       b.ensure_grad();
                       const double* A = a.value.data();
                       for (std::size_t i = 0; i < m; ++i) {
                         const double* grow = G + i * n;
                         for (std::size_t l = 0; l < k; ++l) {
                           const double av = A[i * k + l];
                           double* brow = b.grad.data() + l * n;
                           for (std::size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
                         }
                       }
                     }
                   });
}

NodePtr dense(const NodePtr& x, const NodePtr& w, const NodePtr& b) {
  require_rank("dense", w->value, 2, "weight");
  require_rank("dense", b->value, 1, "bias");
  const bool vector_input = x->value.rank() == 1;
  if (!vector_input) require_rank("dense", x->value, 2, "input");
  const std::size_t rows = vector_input ? 1 : x->value.dim(0);
  const std::size_t in = vector_input ? x->value.size() : x->value.dim(1);
  const std::size_t out_dim = w->value.dim(1);
  if (w->value.dim(0) != in || b->value.size() != out_dim) {
    throw ShapeError("dense: input " + x->value.shape_str() + " incompatible with weight " +
                     w->value.shape_str() + " / bias " + b->value.shape_str());
  }
  std::vector<double> out(rows * out_dim);
  const double* X = x->value.data();
  const double* W = w->value.data();
  const double* Bv = b->value.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double* o = out.data() + r * out_dim;
    std::copy(Bv, Bv + out_dim, o);
    for (std::size_t l = 0; l < in; ++l) {
      const double xv = X[r * in + l];
      const double* wrow = W + l * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) o[j] += xv * wrow[j];
    }
  }
  std::vector<std::size_t> shape =
      vector_input ? std::vector<std::size_t>{out_dim} : std::vector<std::size_t>{rows, out_dim};
  return make_node(
      "dense", Tensor(std::move(shape), std::move(out), "dense"), {x, w, b},
      [rows, in, out_dim](Node& self) {
        Node& x = *self.parents[0];
        Node& w = *self.parents[1];
        Node& b = *self.parents[2];
        const double* G = self.grad.data();
        if (b.requires_grad) {
          b.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            const double* grow = G + r * out_dim;
            for (std::size_t j = 0; j < out_dim; ++j) b.grad[j] += grow[j];
          }
        }
        if (w.requires_grad) {
          w.ensure_grad();
          const double* X = x.value.data();
          for (std::size_t r = 0; r < rows; ++r) {
            const double* grow = G + r * out_dim;
            for (std::size_t l = 0; l < in; ++l) {
              const double xv = X[r * in + l];
              double* wrow = w.grad.data() + l * out_dim;
              for (std::size_t j = 0; j < out_dim; ++j) wrow[j] += xv * grow[j];
            }
          }
        }
        if (x.requires_grad) {
          x.ensure_grad();
          const double* W = w.value.data();
          for (std::size_t r = 0; r < rows; ++r) {
            const double* grow = G + r * out_dim;
            for (std::size_t l = 0; l < in; ++l) {
              const double* wrow = W + l * out_dim;
              double s = 0.0;
              for (std::size_t j = 0; j < out_dim; ++j) s += grow[j] * wrow[j];
              x.grad[r * in + l] += s;
            }
          }
        }
      });
}

NodePtr conv1d(const NodePtr& x, const NodePtr& w, const NodePtr& b) {
  require_rank("conv1d", x->value, 2, "input (C_in,T)");
  require_rank("conv1d", w->value, 3, "kernels (C_out,C_in,k)");
  require_rank("conv1d", b->value, 1, "bias (C_out)");
  const std::size_t cin = x->value.dim(0), t = x->value.dim(1);
  const std::size_t cout = w->value.dim(0), wcin = w->value.dim(1), k = w->value.dim(2);
  if (wcin != cin || b->value.size() != cout) {
    throw ShapeError("conv1d: input " + x->value.shape_str() + " incompatible with kernels " +
                     w->value.shape_str() + " / bias " + b->value.shape_str());
  }
  if (t < k) {
    throw ShapeError("conv1d: input length " + std::to_string(t) + " shorter than kernel " +
                     std::to_string(k));
  }
  const std::size_t to = t - k + 1;  // valid padding, stride 1
  std::vector<double> out(cout * to);
  const double* X = x->value.data();
  const double* W = w->value.data();
  for (std::size_t co = 0; co < cout; ++co) {
    double* orow = out.data() + co * to;
    std::fill(orow, orow + to, b->value[co]);
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double* xrow = X + ci * t;
      const double* wrow = W + (co * cin + ci) * k;
      for (std::size_t j = 0; j < k; ++j) {
        const double wv = wrow[j];
        const double* xs = xrow + j;
        for (std::size_t p = 0; p < to; ++p) orow[p] += wv * xs[p];
      }
    }
  }
  return make_node(
      "conv1d", Tensor({cout, to}, std::move(out), "conv1d"), {x, w, b},
      [cin, t, cout, k, to](Node& self) {
        Node& x = *self.parents[0];
        Node& w = *self.parents[1];
        Node& b = *self.parents[2];
        const double* G = self.grad.data();
        if (b.requires_grad) {
          b.ensure_grad();
          for (std::size_t co = 0; co < cout; ++co) {
            const double* grow = G + co * to;
            double s = 0.0;
            for (std::size_t p = 0; p < to; ++p) s += grow[p];
            b.grad[co] += s;
          }
        }
        if (w.requires_grad) {
          w.ensure_grad();
          const double* X = x.value.data();
          for (std::size_t co = 0; co < cout; ++co) {
            const double* grow = G + co * to;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double* xrow = X + ci * t;
              double* wrow = w.grad.data() + (co * cin + ci) * k;
              for (std::size_t j = 0; j < k; ++j) {
                const double* xs = xrow + j;
                double s = 0.0;
                for (std::size_t p = 0; p < to; ++p) s += grow[p] * xs[p];
                wrow[j] += s;
              }
            }
          }
        }
        if (x.requires_grad) {
          x.ensure_grad();
          const double* W = w.value.data();
          for (std::size_t co = 0; co < cout; ++co) {
            const double* grow = G + co * to;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              double* xg = x.grad.data() + ci * t;
              const double* wrow = W + (co * cin + ci) * k;
              for (std::size_t j = 0; j < k; ++j) {
                const double wv = wrow[j];
                double* xs = xg + j;
                for (std::size_t p = 0; p < to; ++p) xs[p] += wv * grow[p];
              }
            }
          }
        }
      });
}

NodePtr maxpool1d(const NodePtr& x, std::size_t window) {
  require_rank("maxpool1d", x->value, 2, "input (C,T)");
  if (window == 0) throw ShapeError("maxpool1d: window must be positive");
  const std::size_t c = x->value.dim(0), t = x->value.dim(1);
  const std::size_t to = t / window;  // stride = window, remainder dropped
  if (to == 0) {
    throw ShapeError("maxpool1d: input length " + std::to_string(t) + " shorter than window " +
                     std::to_string(window));
  }
  std::vector<double> out(c * to);
  std::vector<std::size_t> argmax(c * to);
  const double* X = x->value.data();
  for (std::size_t ci = 0; ci < c; ++ci) {
    const double* xrow = X + ci * t;
    for (std::size_t p = 0; p < to; ++p) {
      std::size_t best = p * window;
      double bv = xrow[best];
      for (std::size_t j = 1; j < window; ++j) {
        if (xrow[p * window + j] > bv) {
          best = p * window + j;
          bv = xrow[best];
        }
      }
      out[ci * to + p] = bv;
      argmax[ci * to + p] = ci * t + best;
    }
  }
  return make_node("maxpool1d", Tensor({c, to}, std::move(out), "maxpool1d"), {x},
                   [argmax = std::move(argmax)](Node& self) {
                     Node& p = *self.parents[0];
                     p.ensure_grad();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       p.grad[argmax[i]] += self.grad[i];
                   });
}

NodePtr global_avg_pool1d(const NodePtr& x) {
  require_rank("global_avg_pool1d", x->value, 2, "input (T,d)");
  const std::size_t t = x->value.dim(0), d = x->value.dim(1);
  std::vector<double> out(d, 0.0);
  const double* X = x->value.data();
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t j = 0; j < d; ++j) out[j] += X[r * d + j];
  const double inv = 1.0 / static_cast<double>(t);
  for (std::size_t j = 0; j < d; ++j) out[j] *= inv;
  return make_node("global_avg_pool1d", Tensor({d}, std::move(out), "global_avg_pool1d"), {x},
                   [t, d, inv](Node& self) {
                     Node& p = *self.parents[0];
                     p.ensure_grad();
                     for (std::size_t r = 0; r < t; ++r)
                       for (std::size_t j = 0; j < d; ++j) p.grad[r * d + j] += self.grad[j] * inv;
                   });
}

NodePtr softmax(const NodePtr& x) {
  if (x->value.rank() != 1 && x->value.rank() != 2) {
    shape_fail("softmax", "rank-1 or rank-2 input", x->value);
  }
  const std::size_t rows = x->value.rank() == 2 ? x->value.dim(0) : 1;
  const std::size_t n = x->value.rank() == 2 ? x->value.dim(1) : x->value.size();
  std::vector<double> out(x->value.values());
  softmax_rows_inplace(out.data(), rows, n);
  return make_node("softmax", Tensor(x->value.shape(), std::move(out), "softmax"), {x},
                   [rows, n](Node& self) {
                     Node& p = *self.parents[0];
                     p.ensure_grad();
                     const double* Y = self.value.data();
                     const double* G = self.grad.data();
                     for (std::size_t r = 0; r < rows; ++r) {
                       const double* y = Y + r * n;
                       const double* g = G + r * n;
                       double dot = 0.0;
                       for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
                       double* pg = p.grad.data() + r * n;
                       for (std::size_t j = 0; j < n; ++j) pg[j] += y[j] * (g[j] - dot);
                     }
                   });
}

NodePtr layer_norm(const NodePtr& x, const NodePtr& gain, const NodePtr& bias) {
  require_rank("layer_norm", x->value, 2, "input (T,d)");
  require_rank("layer_norm", gain->value, 1, "gain (d)");
  require_rank("layer_norm", bias->value, 1, "bias (d)");
  const std::size_t t = x->value.dim(0), d = x->value.dim(1);
  if (gain->value.size() != d || bias->value.size() != d) {
    throw ShapeError("layer_norm: input " + x->value.shape_str() + " incompatible with gain " +
                     gain->value.shape_str() + " / bias " + bias->value.shape_str());
  }
  constexpr double eps = 1e-5;
  std::vector<double> normed(t * d);
  std::vector<double> inv_std(t);
  std::vector<double> out(t * d);
  const double* X = x->value.data();
  const double* Gv = gain->value.data();
  const double* Bv = bias->value.data();
  for (std::size_t r = 0; r < t; ++r) {
    const double* xr = X + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xr[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const double y = (xr[j] - mean) * inv;
      normed[r * d + j] = y;
      out[r * d + j] = y * Gv[j] + Bv[j];
    }
  }
  return make_node(
      "layer_norm", Tensor({t, d}, std::move(out), "layer_norm"), {x, gain, bias},
      [t, d, normed = std::move(normed), inv_std = std::move(inv_std)](Node& self) {
        Node& x = *self.parents[0];
        Node& gain = *self.parents[1];
        Node& bias = *self.parents[2];
        const double* G = self.grad.data();
        if (gain.requires_grad) {
          gain.ensure_grad();
          for (std::size_t r = 0; r < t; ++r)
            for (std::size_t j = 0; j < d; ++j) gain.grad[j] += G[r * d + j] * normed[r * d + j];
        }
        if (bias.requires_grad) {
          bias.ensure_grad();
          for (std::size_t r = 0; r < t; ++r)
            for (std::size_t j = 0; j < d; ++j) bias.grad[j] += G[r * d + j];
        }
        if (x.requires_grad) {
          x.ensure_grad();
          const double* Gv = gain.value.data();
          std::vector<double> dy(d);
          for (std::size_t r = 0; r < t; ++r) {
            const double* g = G + r * d;
            const double* y = normed.data() + r * d;
            double mean_dy = 0.0, mean_dyy = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              dy[j] = g[j] * Gv[j];
              mean_dy += dy[j];
              mean_dyy += dy[j] * y[j];
            }
            mean_dy /= static_cast<double>(d);
            mean_dyy /= static_cast<double>(d);
            double* xg = x.grad.data() + r * d;
            for (std::size_t j = 0; j < d; ++j)
              xg[j] += inv_std[r] * (dy[j] - mean_dy - y[j] * mean_dyy);
          }
        }
      });
}

namespace {

// Fills probs (T*T) for one head: softmax over rows of scale * Q_h K_h^T.
void attention_head_probs(const double* q, const double* k, std::size_t t, std::size_t d,
                          std::size_t offset, std::size_t dh, double att_scale, double* probs) {
  for (std::size_t i = 0; i < t; ++i) {
    const double* qi = q + i * d + offset;
    double* prow = probs + i * t;
    for (std::size_t j = 0; j < t; ++j) {
      const double* kj = k + j * d + offset;
      double s = 0.0;
      for (std::size_t l = 0; l < dh; ++l) s += qi[l] * kj[l];
      prow[j] = s * att_scale;
    }
  }
  softmax_rows_inplace(probs, t, t);
}

}  // namespace

std::vector<Tensor> attention_probabilities(const Tensor& q, const Tensor& k, std::size_t heads) {
  const std::size_t t = q.dim(0), d = q.dim(1);
  const std::size_t dh = d / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> out;
  for (std::size_t h = 0; h < heads; ++h) {
    std::vector<double> probs(t * t);
    attention_head_probs(q.data(), k.data(), t, d, h * dh, dh, att_scale, probs.data());
    out.emplace_back(std::vector<std::size_t>{t, t}, std::move(probs), "attention_probs");
  }
  return out;
}

NodePtr scaled_dot_product_attention(const NodePtr& q, const NodePtr& k, const NodePtr& v,
                                     std::size_t heads) {
  require_rank("attention", q->value, 2, "query (T,d)");
  require_rank("attention", k->value, 2, "key (T,d)");
  require_rank("attention", v->value, 2, "value (T,d)");
  if (!q->value.same_shape(k->value) || !q->value.same_shape(v->value)) {
    throw ShapeError("attention: q/k/v shapes differ: " + q->value.shape_str() + " " +
                     k->value.shape_str() + " " + v->value.shape_str());
  }
  const std::size_t t = q->value.dim(0), d = q->value.dim(1);
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("attention: model_dim " + std::to_string(d) + " not divisible by heads " +
                     std::to_string(heads));
  }
  const std::size_t dh = d / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<double> out(t * d, 0.0);
  std::vector<double> probs(t * t);
  const double* Q = q->value.data();
  const double* K = k->value.data();
  const double* V = v->value.data();
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    attention_head_probs(Q, K, t, d, off, dh, att_scale, probs.data());
    for (std::size_t i = 0; i < t; ++i) {
      const double* prow = probs.data() + i * t;
      double* orow = out.data() + i * d + off;
      for (std::size_t j = 0; j < t; ++j) {
        const double p = prow[j];
        const double* vrow = V + j * d + off;
        for (std::size_t l = 0; l < dh; ++l) orow[l] += p * vrow[l];
      }
    }
  }
  // Probabilities are recomputed in the backward pass from the saved q/k
  // values; storing all heads' (T,T) matrices would dominate memory.
  return make_node(
      "attention", Tensor({t, d}, std::move(out), "attention"), {q, k, v},
      [t, d, heads, dh, att_scale](Node& self) {
        Node& qn = *self.parents[0];
        Node& kn = *self.parents[1];
        Node& vn = *self.parents[2];
        qn.ensure_grad();
        kn.ensure_grad();
        vn.ensure_grad();
        const double* Q = qn.value.data();
        const double* K = kn.value.data();
        const double* V = vn.value.data();
        const double* G = self.grad.data();
        std::vector<double> probs(t * t);
        std::vector<double> dp(t * t);
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t off = h * dh;
          attention_head_probs(Q, K, t, d, off, dh, att_scale, probs.data());
          // dV += P^T dO ; dP = dO V^T
          for (std::size_t i = 0; i < t; ++i) {
            const double* prow = probs.data() + i * t;
            const double* grow = G + i * d + off;
            double* dprow = dp.data() + i * t;
            for (std::size_t j = 0; j < t; ++j) {
              const double* vrow = V + j * d + off;
              double* vgrow = vn.grad.data() + j * d + off;
              double s = 0.0;
              for (std::size_t l = 0; l < dh; ++l) {
                s += grow[l] * vrow[l];
                vgrow[l] += prow[j] * grow[l];
              }
              dprow[j] = s;
            }
          }
          // softmax jacobian rows, then dQ += scale * dS K, dK += scale * dS^T Q
          for (std::size_t i = 0; i < t; ++i) {
            const double* prow = probs.data() + i * t;
            double* dprow = dp.data() + i * t;
            double dot = 0.0;
            for (std::size_t j = 0; j < t; ++j) dot += dprow[j] * prow[j];
            for (std::size_t j = 0; j < t; ++j) dprow[j] = prow[j] * (dprow[j] - dot) * att_scale;
          }
          for (std::size_t i = 0; i < t; ++i) {
            const double* dsrow = dp.data() + i * t;
            double* qgrow = qn.grad.data() + i * d + off;
            const double* qrow = Q + i * d + off;
            for (std::size_t j = 0; j < t; ++j) {
              const double ds = dsrow[j];
              const double* krow = K + j * d + off;
              double* kgrow = kn.grad.data() + j * d + off;
              for (std::size_t l = 0; l < dh; ++l) {
                qgrow[l] += ds * krow[l];
                kgrow[l] += ds * qrow[l];
              }
            }
          }
        }
      });
}

NodePtr cross_entropy_loss(const NodePtr& logits, const std::vector<int>& labels) {
  require_rank("cross_entropy", logits->value, 2, "logits (batch,classes)");
  const std::size_t batch = logits->value.dim(0), classes = logits->value.dim(1);
  if (labels.size() != batch) {
    throw ShapeError("cross_entropy: batch " + std::to_string(batch) + " but " +
                     std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(labels[i]) +
                              " out of [0," + std::to_string(classes) + ") at row " +
                              std::to_string(i));
    }
  }
  std::vector<double> probs(logits->value.values());
  softmax_rows_inplace(probs.data(), batch, classes);
  double loss = 0.0;
  const double* L = logits->value.data();
  for (std::size_t i = 0; i < batch; ++i) {
    const double* row = L + i * classes;
    double m = row[0];
    for (std::size_t j = 1; j < classes; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < classes; ++j) sum += std::exp(row[j] - m);
    loss += m + std::log(sum) - row[static_cast<std::size_t>(labels[i])];
  }
  loss /= static_cast<double>(batch);
  return make_node("cross_entropy", Tensor::scalar(loss), {logits},
                   [batch, classes, labels, probs = std::move(probs)](Node& self) {
                     Node& p = *self.parents[0];
                     p.ensure_grad();
                     const double g = self.grad[0] / static_cast<double>(batch);
                     for (std::size_t i = 0; i < batch; ++i) {
                       double* row = p.grad.data() + i * classes;
                       const double* pr = probs.data() + i * classes;
                       for (std::size_t j = 0; j < classes; ++j) row[j] += g * pr[j];
                       row[static_cast<std::size_t>(labels[i])] -= g;
                     }
                   });
}

namespace {

// Post-order over parents; each node exactly once.
void topo_order(const NodePtr& root, std::vector<Node*>& order) {
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

}  // namespace

void backward(const NodePtr& loss) {
  if (loss->value.rank() != 1 || loss->value.size() != 1) {
    throw ShapeError("backward: loss must be scalar of shape (1), got " + loss->value.shape_str());
  }
  if (!loss->requires_grad) return;
  std::vector<Node*> order;
  topo_order(loss, order);
  loss->ensure_grad();
  loss->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

void zero_gradients(const NodePtr& root) {
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.get()};
  seen.insert(root.get());
  while (!stack.empty()) {
    Node* node = stack.back();
    stack.pop_back();
    if (!node->grad.empty()) node->grad.fill(0.0);
    for (const auto& p : node->parents) {
      if (seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
}

}  // namespace noisyarm
