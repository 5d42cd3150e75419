#include "gtrack/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <utility>

namespace gtrack {

namespace {

std::string shape_str(int r, int c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

std::string shape_str(const Tensor& t) {
  return shape_str(t.rows(), t.cols());
}

void check_defined(const Tensor& t, const char* op) {
  if (!t.defined()) {
    throw ContractError(std::string(op) + ": undefined tensor operand");
  }
}

using BackwardFn = std::function<void(const std::vector<double>&,
                                      const std::vector<std::vector<double>*>&)>;

Tensor make_tensor(int rows, int cols, std::vector<double> value) {
  if (rows < 0 || cols < 0) throw ShapeError("tensor: negative extent");
  if (value.size() != static_cast<std::size_t>(rows) * cols) {
    throw ShapeError("tensor: data length " + std::to_string(value.size()) +
                     " does not match shape " + shape_str(rows, cols));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->rows = rows;
  impl->cols = cols;
  impl->value = std::move(value);
  return Tensor(std::move(impl));
}

// Op-node constructor: requires_grad is inherited from the parents, and the
// graph edges/closure are only kept when some parent actually needs them.
Tensor make_op(int rows, int cols, std::vector<double> value,
               std::vector<Tensor> parents, BackwardFn fn) {
  Tensor t = make_tensor(rows, cols, std::move(value));
  TensorImpl* impl = t.impl().get();
  impl->leaf = false;
  bool needs = false;
  for (const Tensor& p : parents) needs = needs || p.requires_grad();
  impl->requires_grad = needs;
  if (needs) {
    impl->parents.reserve(parents.size());
    for (Tensor& p : parents) impl->parents.push_back(p.impl());
    impl->backward_fn = std::move(fn);
  }
  return t;
}

// C(r×c) += A(r×k)·B(k×c)
void gemm_acc(const double* a, const double* b, double* c, int r, int k,
              int n) {
  for (int i = 0; i < r; ++i) {
    for (int l = 0; l < k; ++l) {
      const double av = a[i * k + l];
      if (av == 0.0) continue;
      const double* brow = b + l * n;
      double* crow = c + i * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C(r×c) += A(r×k)·B(c×k)ᵀ
void gemm_nt_acc(const double* a, const double* b, double* c, int r, int k,
                 int n) {
  for (int i = 0; i < r; ++i) {
    const double* arow = a + i * k;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += arow[l] * brow[l];
      c[i * n + j] += s;
    }
  }
}

// C(r×c) += A(k×r)ᵀ·B(k×c)
void gemm_tn_acc(const double* a, const double* b, double* c, int r, int k,
                 int n) {
  for (int l = 0; l < k; ++l) {
    const double* arow = a + l * r;
    const double* brow = b + l * n;
    for (int i = 0; i < r; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c + i * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  check_defined(a, op);
  check_defined(b, op);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) +
                     " vs " + shape_str(b));
  }
}

}  // namespace

Tensor Tensor::constant(int rows, int cols, std::vector<double> data) {
  return make_tensor(rows, cols, std::move(data));
}

Tensor Tensor::constant(int rows, int cols, double fill) {
  if (rows < 0 || cols < 0) throw ShapeError("tensor: negative extent");
  return make_tensor(rows, cols,
                     std::vector<double>(static_cast<std::size_t>(rows) * cols,
                                         fill));
}

Tensor Tensor::param(int rows, int cols, std::vector<double> data) {
  Tensor t = make_tensor(rows, cols, std::move(data));
  t.impl()->requires_grad = true;
  return t;
}

std::vector<double>& Tensor::value_mut() {
  if (!checked()->leaf) {
    throw ContractError("Tensor: value_mut on a derived graph node");
  }
  return impl_->value;
}

const std::vector<double>& Tensor::grad() const {
  TensorImpl* impl = checked().get();
  if (impl->grad.size() != impl->value.size()) {
    impl->grad.assign(impl->value.size(), 0.0);
  }
  return impl->grad;
}

void Tensor::zero_grad() {
  TensorImpl* impl = checked().get();
  impl->grad.assign(impl->value.size(), 0.0);
}

double Tensor::at(int r, int c) const {
  const TensorImpl* impl = checked().get();
  if (r < 0 || r >= impl->rows || c < 0 || c >= impl->cols) {
    throw ContractError("Tensor::at out of range");
  }
  return impl->value[static_cast<std::size_t>(r) * impl->cols + c];
}

double Tensor::scalar() const {
  const TensorImpl* impl = checked().get();
  if (impl->rows != 1 || impl->cols != 1) {
    throw ContractError("Tensor::scalar on shape " +
                        shape_str(impl->rows, impl->cols));
  }
  return impl->value[0];
}

void backward(const Tensor& loss) {
  check_defined(loss, "backward");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward: loss must be scalar, got " +
                        shape_str(loss));
  }
  TensorImpl* root = loss.impl().get();
  if (!root->requires_grad) return;  // no parameters reachable

  // Post-order DFS over grad-requiring nodes: producers land before
  // consumers, so the reversed order is a valid backward schedule.
  std::vector<TensorImpl*> order;
  std::unordered_map<TensorImpl*, int> index;
  {
    struct Frame {
      TensorImpl* node;
      std::size_t next;
    };
    std::unordered_map<TensorImpl*, char> state;  // 1 = open, 2 = done
    std::vector<Frame> stack;
    stack.push_back({root, 0});
    state[root] = 1;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < f.node->parents.size()) {
        TensorImpl* p = f.node->parents[f.next++].get();
        if (p->requires_grad && state[p] == 0) {
          state[p] = 1;
          stack.push_back({p, 0});
        }
      } else {
        state[f.node] = 2;
        index[f.node] = static_cast<int>(order.size());
        order.push_back(f.node);
        stack.pop_back();
      }
    }
  }

  std::vector<std::vector<double>> ct(order.size());
  ct[index[root]] = {1.0};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* n = *it;
    std::vector<double>& my_ct = ct[index[n]];
    if (my_ct.empty()) my_ct.assign(n->value.size(), 0.0);
    if (n->backward_fn) {
      std::vector<std::vector<double>*> parent_bufs;
      parent_bufs.reserve(n->parents.size());
      for (const auto& p : n->parents) {
        if (p->requires_grad) {
          std::vector<double>& buf = ct[index[p.get()]];
          if (buf.empty()) buf.assign(p->value.size(), 0.0);
          parent_bufs.push_back(&buf);
        } else {
          parent_bufs.push_back(nullptr);
        }
      }
      n->backward_fn(my_ct, parent_bufs);
    }
    if (n->leaf && n->requires_grad) {
      if (n->grad.size() != n->value.size()) {
        n->grad.assign(n->value.size(), 0.0);
      }
      for (std::size_t i = 0; i < my_ct.size(); ++i) n->grad[i] += my_ct[i];
    }
  }
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] + b.value()[i];
  return make_op(a.rows(), a.cols(), std::move(v), {a, b},
                 [](const std::vector<double>& ct,
                    const std::vector<std::vector<double>*>& p) {
                   for (int s = 0; s < 2; ++s) {
                     if (!p[s]) continue;
                     for (std::size_t i = 0; i < ct.size(); ++i) {
                       (*p[s])[i] += ct[i];
                     }
                   }
                 });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] - b.value()[i];
  return make_op(a.rows(), a.cols(), std::move(v), {a, b},
                 [](const std::vector<double>& ct,
                    const std::vector<std::vector<double>*>& p) {
                   if (p[0]) {
                     for (std::size_t i = 0; i < ct.size(); ++i) {
                       (*p[0])[i] += ct[i];
                     }
                   }
                   if (p[1]) {
                     for (std::size_t i = 0; i < ct.size(); ++i) {
                       (*p[1])[i] -= ct[i];
                     }
                   }
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] * b.value()[i];
  return make_op(a.rows(), a.cols(), std::move(v), {a, b},
                 [ai = a.impl(), bi = b.impl()](
                     const std::vector<double>& ct,
                     const std::vector<std::vector<double>*>& p) {
                   if (p[0]) {
                     for (std::size_t i = 0; i < ct.size(); ++i) {
                       (*p[0])[i] += ct[i] * bi->value[i];
                     }
                   }
                   if (p[1]) {
                     for (std::size_t i = 0; i < ct.size(); ++i) {
                       (*p[1])[i] += ct[i] * ai->value[i];
                     }
                   }
                 });
}

Tensor scale(const Tensor& a, double s) {
  check_defined(a, "scale");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] * s;
  return make_op(a.rows(), a.cols(), std::move(v), {a},
                 [s](const std::vector<double>& ct,
                     const std::vector<std::vector<double>*>& p) {
                   if (!p[0]) return;
                   for (std::size_t i = 0; i < ct.size(); ++i) {
                     (*p[0])[i] += s * ct[i];
                   }
                 });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_defined(a, "matmul");
  check_defined(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dims differ, " + shape_str(a) + " vs " +
                     shape_str(b));
  }
  const int r = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> v(static_cast<std::size_t>(r) * n, 0.0);
  gemm_acc(a.value().data(), b.value().data(), v.data(), r, k, n);
  return make_op(r, n, std::move(v), {a, b},
                 [ai = a.impl(), bi = b.impl(), r, k, n](
                     const std::vector<double>& ct,
                     const std::vector<std::vector<double>*>& p) {
                   if (p[0]) {
                     gemm_nt_acc(ct.data(), bi->value.data(), p[0]->data(), r,
                                 n, k);
                   }
                   if (p[1]) {
                     gemm_tn_acc(ai->value.data(), ct.data(), p[1]->data(), k,
                                 r, n);
                   }
                 });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_defined(a, "matmul_nt");
  check_defined(b, "matmul_nt");
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: inner dims differ, " + shape_str(a) + " vs " +
                     shape_str(b));
  }
  const int r = a.rows(), k = a.cols(), n = b.rows();
  std::vector<double> v(static_cast<std::size_t>(r) * n, 0.0);
  gemm_nt_acc(a.value().data(), b.value().data(), v.data(), r, k, n);
  return make_op(r, n, std::move(v), {a, b},
                 [ai = a.impl(), bi = b.impl(), r, k, n](
                     const std::vector<double>& ct,
                     const std::vector<std::vector<double>*>& p) {
                   if (p[0]) {
                     gemm_acc(ct.data(), bi->value.data(), p[0]->data(), r, n,
                              k);
                   }
                   if (p[1]) {
                     gemm_tn_acc(ct.data(), ai->value.data(), p[1]->data(), n,
                                 r, k);
                   }
                 });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  check_defined(x, "linear");
  check_defined(w, "linear");
  if (x.cols() != w.rows()) {
    throw ShapeError("linear: input " + shape_str(x) +
                     " does not conform with weight " + shape_str(w));
  }
  const int r = x.rows(), k = x.cols(), n = w.cols();
  if (b.defined() && (b.rows() != 1 || b.cols() != n)) {
    throw ShapeError("linear: bias " + shape_str(b) + " does not match 1x" +
                     std::to_string(n));
  }
  std::vector<double> v(static_cast<std::size_t>(r) * n, 0.0);
  gemm_acc(x.value().data(), w.value().data(), v.data(), r, k, n);
  if (b.defined()) {
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < n; ++j) v[i * n + j] += b.value()[j];
    }
  }
  std::vector<Tensor> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  const bool has_bias = b.defined();
  return make_op(
      r, n, std::move(v), std::move(parents),
      [xi = x.impl(), wi = w.impl(), r, k, n, has_bias](
          const std::vector<double>& ct,
          const std::vector<std::vector<double>*>& p) {
        if (p[0]) {
          gemm_nt_acc(ct.data(), wi->value.data(), p[0]->data(), r, n, k);
        }
        if (p[1]) {
          gemm_tn_acc(xi->value.data(), ct.data(), p[1]->data(), k, r, n);
        }
        if (has_bias && p[2]) {
          for (int i = 0; i < r; ++i) {
            for (int j = 0; j < n; ++j) (*p[2])[j] += ct[i * n + j];
          }
        }
      });
}

Tensor relu(const Tensor& x) {
  check_defined(x, "relu");
  std::vector<double> v(x.size());
  std::vector<char> mask(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double xv = x.value()[i];
    mask[i] = xv > 0.0;
    v[i] = mask[i] ? xv : 0.0;
  }
  return make_op(x.rows(), x.cols(), std::move(v), {x},
                 [mask = std::move(mask)](
                     const std::vector<double>& ct,
                     const std::vector<std::vector<double>*>& p) {
                   if (!p[0]) return;
                   for (std::size_t i = 0; i < ct.size(); ++i) {
                     if (mask[i]) (*p[0])[i] += ct[i];
                   }
                 });
}

Tensor log(const Tensor& x) {
  check_defined(x, "log");
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double xv = x.value()[i];
    if (!(xv > 0.0)) {
      throw ContractError("log: non-positive input " + std::to_string(xv));
    }
    v[i] = std::log(xv);
  }
  return make_op(x.rows(), x.cols(), std::move(v), {x},
                 [xi = x.impl()](const std::vector<double>& ct,
                                 const std::vector<std::vector<double>*>& p) {
                   if (!p[0]) return;
                   for (std::size_t i = 0; i < ct.size(); ++i) {
                     (*p[0])[i] += ct[i] / xi->value[i];
                   }
                 });
}

Tensor softmax_rows(const Tensor& x) {
  check_defined(x, "softmax_rows");
  const int r = x.rows(), c = x.cols();
  if (c == 0 && r > 0) throw ShapeError("softmax_rows: zero-width rows");
  std::vector<double> v(x.size());
  for (int i = 0; i < r; ++i) {
    const double* row = x.value().data() + static_cast<std::size_t>(i) * c;
    double m = row[0];
    for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      const double e = std::exp(row[j] - m);
      v[static_cast<std::size_t>(i) * c + j] = e;
      z += e;
    }
    for (int j = 0; j < c; ++j) v[static_cast<std::size_t>(i) * c + j] /= z;
  }
  std::vector<double> y = v;  // closure keeps its own copy of the output
  return make_op(r, c, std::move(v), {x},
                 [y = std::move(y), r, c](
                     const std::vector<double>& ct,
                     const std::vector<std::vector<double>*>& p) {
                   if (!p[0]) return;
                   for (int i = 0; i < r; ++i) {
                     const std::size_t off = static_cast<std::size_t>(i) * c;
                     double dot = 0.0;
                     for (int j = 0; j < c; ++j) dot += ct[off + j] * y[off + j];
                     for (int j = 0; j < c; ++j) {
                       (*p[0])[off + j] += y[off + j] * (ct[off + j] - dot);
                     }
                   }
                 });
}

Tensor log_softmax_rows(const Tensor& x) {
  check_defined(x, "log_softmax_rows");
  const int r = x.rows(), c = x.cols();
  if (c == 0 && r > 0) throw ShapeError("log_softmax_rows: zero-width rows");
  std::vector<double> v(x.size());
  std::vector<double> probs(x.size());
  for (int i = 0; i < r; ++i) {
    const double* row = x.value().data() + static_cast<std::size_t>(i) * c;
    double m = row[0];
    for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(row[j] - m);
    const double lse = m + std::log(z);
    for (int j = 0; j < c; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * c + j;
      v[k] = row[j] - lse;
      probs[k] = std::exp(v[k]);
    }
  }
  return make_op(r, c, std::move(v), {x},
                 [probs = std::move(probs), r, c](
                     const std::vector<double>& ct,
                     const std::vector<std::vector<double>*>& p) {
                   if (!p[0]) return;
                   for (int i = 0; i < r; ++i) {
                     const std::size_t off = static_cast<std::size_t>(i) * c;
                     double total = 0.0;
                     for (int j = 0; j < c; ++j) total += ct[off + j];
                     for (int j = 0; j < c; ++j) {
                       (*p[0])[off + j] += ct[off + j] - probs[off + j] * total;
                     }
                   }
                 });
}

Tensor sum(const Tensor& x) {
  check_defined(x, "sum");
  double s = 0.0;
  for (double v : x.value()) s += v;
  return make_op(1, 1, {s}, {x},
                 [n = x.size()](const std::vector<double>& ct,
                                const std::vector<std::vector<double>*>& p) {
                   if (!p[0]) return;
                   for (std::size_t i = 0; i < n; ++i) (*p[0])[i] += ct[0];
                 });
}

Tensor slice_rows(const Tensor& x, int r0, int r1) {
  check_defined(x, "slice_rows");
  if (r0 < 0 || r1 < r0 || r1 > x.rows()) {
    throw ShapeError("slice_rows: range [" + std::to_string(r0) + ", " +
                     std::to_string(r1) + ") invalid for " + shape_str(x));
  }
  const int c = x.cols();
  std::vector<double> v(x.value().begin() + static_cast<std::size_t>(r0) * c,
                        x.value().begin() + static_cast<std::size_t>(r1) * c);
  return make_op(r1 - r0, c, std::move(v), {x},
                 [r0, c, n = r1 - r0](
                     const std::vector<double>& ct,
                     const std::vector<std::vector<double>*>& p) {
                   if (!p[0]) return;
                   const std::size_t off = static_cast<std::size_t>(r0) * c;
                   for (std::size_t i = 0;
                        i < static_cast<std::size_t>(n) * c; ++i) {
                     (*p[0])[off + i] += ct[i];
                   }
                 });
}

Tensor slice_cols(const Tensor& x, int c0, int c1) {
  check_defined(x, "slice_cols");
  if (c0 < 0 || c1 < c0 || c1 > x.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(c0) + ", " +
                     std::to_string(c1) + ") invalid for " + shape_str(x));
  }
  const int r = x.rows(), c = x.cols(), w = c1 - c0;
  std::vector<double> v(static_cast<std::size_t>(r) * w);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < w; ++j) {
      v[static_cast<std::size_t>(i) * w + j] =
          x.value()[static_cast<std::size_t>(i) * c + c0 + j];
    }
  }
  return make_op(r, w, std::move(v), {x},
                 [r, c, c0, w](const std::vector<double>& ct,
                               const std::vector<std::vector<double>*>& p) {
                   if (!p[0]) return;
                   for (int i = 0; i < r; ++i) {
                     for (int j = 0; j < w; ++j) {
                       (*p[0])[static_cast<std::size_t>(i) * c + c0 + j] +=
                           ct[static_cast<std::size_t>(i) * w + j];
                     }
                   }
                 });
}

Tensor concat_rows(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ShapeError("concat_rows: no operands");
  for (const Tensor& x : xs) check_defined(x, "concat_rows");
  const int c = xs[0].cols();
  int r = 0;
  for (const Tensor& x : xs) {
    if (x.cols() != c) {
      throw ShapeError("concat_rows: column mismatch " + shape_str(x) +
                       " vs " + shape_str(xs[0]));
    }
    r += x.rows();
  }
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(r) * c);
  for (const Tensor& x : xs) {
    v.insert(v.end(), x.value().begin(), x.value().end());
  }
  std::vector<std::size_t> sizes(xs.size());
  for (std::size_t s = 0; s < xs.size(); ++s) sizes[s] = xs[s].size();
  return make_op(r, c, std::move(v), xs,
                 [sizes = std::move(sizes)](
                     const std::vector<double>& ct,
                     const std::vector<std::vector<double>*>& p) {
                   std::size_t off = 0;
                   for (std::size_t s = 0; s < sizes.size(); ++s) {
                     if (p[s]) {
                       for (std::size_t i = 0; i < sizes[s]; ++i) {
                         (*p[s])[i] += ct[off + i];
                       }
                     }
                     off += sizes[s];
                   }
                 });
}

Tensor concat_cols(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ShapeError("concat_cols: no operands");
  for (const Tensor& x : xs) check_defined(x, "concat_cols");
  const int r = xs[0].rows();
  int c = 0;
  std::vector<int> widths(xs.size());
  for (std::size_t s = 0; s < xs.size(); ++s) {
    if (xs[s].rows() != r) {
      throw ShapeError("concat_cols: row mismatch " + shape_str(xs[s]) +
                       " vs " + shape_str(xs[0]));
    }
    widths[s] = xs[s].cols();
    c += widths[s];
  }
  std::vector<double> v(static_cast<std::size_t>(r) * c);
  int off = 0;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const int w = widths[s];
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < w; ++j) {
        v[static_cast<std::size_t>(i) * c + off + j] =
            xs[s].value()[static_cast<std::size_t>(i) * w + j];
      }
    }
    off += w;
  }
  return make_op(r, c, std::move(v), xs,
                 [widths = std::move(widths), r, c](
                     const std::vector<double>& ct,
                     const std::vector<std::vector<double>*>& p) {
                   int off2 = 0;
                   for (std::size_t s = 0; s < widths.size(); ++s) {
                     const int w = widths[s];
                     if (p[s]) {
                       for (int i = 0; i < r; ++i) {
                         for (int j = 0; j < w; ++j) {
                           (*p[s])[static_cast<std::size_t>(i) * w + j] +=
                               ct[static_cast<std::size_t>(i) * c + off2 + j];
                         }
                       }
                     }
                     off2 += w;
                   }
                 });
}

Tensor gather_per_row(const Tensor& x, const std::vector<int>& idx) {
  check_defined(x, "gather_per_row");
  if (idx.size() != static_cast<std::size_t>(x.rows())) {
    throw ShapeError("gather_per_row: " + std::to_string(idx.size()) +
                     " indices for " + std::to_string(x.rows()) + " rows");
  }
  const int c = x.cols();
  std::vector<double> v(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= c) {
      throw ContractError("gather_per_row: index " + std::to_string(idx[i]) +
                          " out of range for width " + std::to_string(c));
    }
    v[i] = x.value()[i * c + idx[i]];
  }
  return make_op(static_cast<int>(idx.size()), 1, std::move(v), {x},
                 [idx, c](const std::vector<double>& ct,
                          const std::vector<std::vector<double>*>& p) {
                   if (!p[0]) return;
                   for (std::size_t i = 0; i < idx.size(); ++i) {
                     (*p[0])[i * c + idx[i]] += ct[i];
                   }
                 });
}

Tensor take_rows(const Tensor& table, const std::vector<int>& idx) {
  check_defined(table, "take_rows");
  const int c = table.cols();
  std::vector<double> v(idx.size() * static_cast<std::size_t>(c));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= table.rows()) {
      throw ContractError("take_rows: row index " + std::to_string(idx[i]) +
                          " out of range for " + std::to_string(table.rows()) +
                          " rows");
    }
    for (int j = 0; j < c; ++j) {
      v[i * c + j] = table.value()[static_cast<std::size_t>(idx[i]) * c + j];
    }
  }
  return make_op(static_cast<int>(idx.size()), c, std::move(v), {table},
                 [idx, c](const std::vector<double>& ct,
                          const std::vector<std::vector<double>*>& p) {
                   if (!p[0]) return;
                   for (std::size_t i = 0; i < idx.size(); ++i) {
                     for (int j = 0; j < c; ++j) {
                       (*p[0])[static_cast<std::size_t>(idx[i]) * c + j] +=
                           ct[i * c + j];
                     }
                   }
                 });
}

Tensor multi_head_attention(const Tensor& q_in, const Tensor& kv_in,
                            const AttentionParams& p, int heads) {
  check_defined(q_in, "multi_head_attention");
  check_defined(kv_in, "multi_head_attention");
  const int d = p.wq.cols();
  if (heads < 1 || d % heads != 0) {
    throw ConfigError("multi_head_attention: dim " + std::to_string(d) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  if (kv_in.rows() == 0) {
    throw ContractError("multi_head_attention: empty key/value set");
  }
  Tensor q = linear(q_in, p.wq, p.bq);
  Tensor k = linear(kv_in, p.wk, p.bk);
  Tensor v = p.wv.defined() ? linear(kv_in, p.wv, p.bv) : k;
  const int dh = d / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
    Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
    Tensor vh = slice_cols(v, h * dh, (h + 1) * dh);
    Tensor att = softmax_rows(scale(matmul_nt(qh, kh), att_scale));
    outs.push_back(matmul(att, vh));
  }
  return heads == 1 ? outs[0] : concat_cols(outs);
}

}  // namespace gtrack
