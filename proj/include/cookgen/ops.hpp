#pragma once

// Differentiable primitives over Tape/Var. Every op records a backward
// closure only when one of its inputs requires a gradient.

#include <optional>

#include "cookgen/autodiff.hpp"

namespace cookgen {

struct Conv2dOptions {
  Index stride = 1;
  Index padding = 0;
};

// Elementwise.
template <typename Scalar> Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b);
template <typename Scalar> Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b);
// alpha * a + beta
template <typename Scalar> Var<Scalar> affine(const Var<Scalar>& a, Scalar alpha, Scalar beta);
template <typename Scalar> Var<Scalar> silu(const Var<Scalar>& x);
template <typename Scalar> Var<Scalar> relu(const Var<Scalar>& x);
template <typename Scalar> Var<Scalar> leaky_relu(const Var<Scalar>& x, Scalar slope);
template <typename Scalar> Var<Scalar> tanh(const Var<Scalar>& x);

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) { return add(a, b); }
template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) { return sub(a, b); }
template <typename Scalar>
Var<Scalar> operator*(Scalar s, const Var<Scalar>& a) { return affine(a, s, Scalar(0)); }

// Image ops, x is [N, C, H, W].
// weight [O, C, k, k]; bias [O] or empty.
template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight, const std::optional<Var<Scalar>>& bias,
                   Conv2dOptions opt);
template <typename Scalar>
Var<Scalar> group_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta, Index groups,
                       Scalar eps = Scalar(1e-5));

// Training-mode batch norm; per-channel batch statistics are written to
// `batch_mean` / `batch_var` (biased) when non-null.
template <typename Scalar>
Var<Scalar> batch_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta,
                       Scalar eps = Scalar(1e-5), Vector<Scalar>* batch_mean = nullptr,
                       Vector<Scalar>* batch_var = nullptr);

// out[n,c,h,w] = gamma[n,c] * z[n,c,h,w] + beta[n,c]
template <typename Scalar>
Var<Scalar> film(const Var<Scalar>& z, const Var<Scalar>& gamma, const Var<Scalar>& beta);
template <typename Scalar> Var<Scalar> upsample_nearest2x(const Var<Scalar>& x);
template <typename Scalar> Var<Scalar> concat_channels(const Var<Scalar>& a, const Var<Scalar>& b);
// [N, C, H, W] -> [N, C]
template <typename Scalar> Var<Scalar> global_avg_pool(const Var<Scalar>& x);
// 5-tap binomial blur with edge replication, then stride-2 subsampling.
template <typename Scalar> Var<Scalar> blur_downsample(const Var<Scalar>& x);

// Row-batched vector ops, x is [N, D].
// weight [O, D], bias [O] or empty.
template <typename Scalar>
Var<Scalar> linear(const Var<Scalar>& x, const Var<Scalar>& weight, const std::optional<Var<Scalar>>& bias);
// Throws NumericError when a row has (near) zero norm.
template <typename Scalar> Var<Scalar> l2_normalize_rows(const Var<Scalar>& x);
// [N, D] x [M, D] -> [N, M] = a * b^T
template <typename Scalar> Var<Scalar> matmul_abt(const Var<Scalar>& a, const Var<Scalar>& b);
// [N, D], [N, D] -> [N] rowwise dot products
template <typename Scalar> Var<Scalar> row_dot(const Var<Scalar>& a, const Var<Scalar>& b);
// Columns [begin, begin + count) of a [N, D] tensor.
template <typename Scalar> Var<Scalar> slice_cols(const Var<Scalar>& x, Index begin, Index count);

// Reductions to a [1] scalar.
template <typename Scalar> Var<Scalar> mean(const Var<Scalar>& x);
template <typename Scalar> Var<Scalar> mse(const Var<Scalar>& x, const Tensor<Scalar>& target);
template <typename Scalar> Var<Scalar> mean_abs_diff(const Var<Scalar>& a, const Var<Scalar>& b);
// Mean of sigmoid cross-entropy against a constant label in {0, 1}.
template <typename Scalar> Var<Scalar> bce_with_logits(const Var<Scalar>& logits, Scalar label);

}  // namespace cookgen
