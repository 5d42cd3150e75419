#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "gtrack/common.hpp"

namespace gtrack {

/// Dense row-major matrix of doubles with reverse-mode autodiff.
///
/// The compute graph is rebuilt on every forward pass (define-by-run): each
/// op node keeps shared_ptr edges to its inputs plus a closure that maps the
/// node's cotangent to its inputs' cotangents. backward() walks the graph in
/// reverse topological order with transient cotangent buffers and adds into
/// the persistent .grad of requires_grad leaves — so running backward twice
/// on the same graph accumulates exactly twice the gradient.
struct TensorImpl {
  int rows = 0;
  int cols = 0;
  std::vector<double> value;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<TensorImpl>> parents;
  // Adds this node's contribution to each parent cotangent buffer; entries
  // are null for parents that do not require grad.
  std::function<void(const std::vector<double>& ct,
                     const std::vector<std::vector<double>*>& parent_cts)>
      backward_fn;
  std::vector<double> grad;  // persistent accumulator; grad-requiring leaves
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor constant(int rows, int cols, std::vector<double> data);
  static Tensor constant(int rows, int cols, double fill);
  static Tensor zeros(int rows, int cols) { return constant(rows, cols, 0.0); }
  // Leaf with requires_grad set; the unit all other gradients flow into.
  static Tensor param(int rows, int cols, std::vector<double> data);

  bool defined() const { return impl_ != nullptr; }
  int rows() const { return checked()->rows; }
  int cols() const { return checked()->cols; }
  std::size_t size() const { return checked()->value.size(); }
  bool requires_grad() const { return checked()->requires_grad; }

  const std::vector<double>& value() const { return checked()->value; }
  // In-place mutation hook for optimizer updates and finite differences.
  // Only valid on leaves: op nodes' values are derived, not source data.
  std::vector<double>& value_mut();

  // Gradient accumulator (allocated zero on first access). Leaves only.
  const std::vector<double>& grad() const;
  void zero_grad();

  double at(int r, int c) const;
  double scalar() const;  // 1x1 tensors only

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  const std::shared_ptr<TensorImpl>& checked() const {
    if (!impl_) throw ContractError("Tensor: used before assignment");
    return impl_;
  }
  std::shared_ptr<TensorImpl> impl_;
};

/// Reverse-mode sweep from a scalar loss. Every requires_grad leaf reachable
/// from `loss` has its exact gradient added into .grad; unreachable leaves
/// are untouched (their lazily-allocated grad reads as zero).
void backward(const Tensor& loss);

// ---- ops (all record onto the graph when any input requires grad) ----

Tensor add(const Tensor& a, const Tensor& b);   // same shape, elementwise
Tensor sub(const Tensor& a, const Tensor& b);   // same shape, elementwise
Tensor mul(const Tensor& a, const Tensor& b);   // same shape, elementwise
Tensor scale(const Tensor& a, double s);
Tensor matmul(const Tensor& a, const Tensor& b);     // (r×k)·(k×c)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a·bᵀ: (r×k)·(c×k)ᵀ
// y = x·w + b with b a 1×d_out row broadcast over rows; pass an undefined
// Tensor to skip the bias.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor log(const Tensor& x);  // elementwise natural log; requires x > 0
Tensor softmax_rows(const Tensor& x);      // max-subtracted for stability
Tensor log_softmax_rows(const Tensor& x);  // stable log of softmax_rows
Tensor sum(const Tensor& x);               // 1×1 total
Tensor slice_rows(const Tensor& x, int r0, int r1);  // rows [r0, r1)
Tensor slice_cols(const Tensor& x, int c0, int c1);  // cols [c0, c1)
Tensor concat_rows(const std::vector<Tensor>& xs);   // same cols
Tensor concat_cols(const std::vector<Tensor>& xs);   // same rows
// out[i, 0] = x[i, idx[i]]; backward scatters into the picked entries.
Tensor gather_per_row(const Tensor& x, const std::vector<int>& idx);
// Row lookup: out row i = table row idx[i]; repeats accumulate gradient.
Tensor take_rows(const Tensor& table, const std::vector<int>& idx);

/// Projections for one attention block. When wv is undefined the values
/// reuse the key projection (no separate value layer).
struct AttentionParams {
  Tensor wq, bq;
  Tensor wk, bk;
  Tensor wv, bv;
};

/// Standard multi-head scaled dot-product attention, built from the
/// primitive ops so it differentiates end to end. Per-head scale is
/// 1/sqrt(D/heads). Self-attention is the call with q_in = kv_in.
Tensor multi_head_attention(const Tensor& q_in, const Tensor& kv_in,
                            const AttentionParams& p, int heads);

}  // namespace gtrack
