#pragma once

#include <cstddef>
#include <vector>

#include "mect/rng.hpp"
#include "mect/tensor.hpp"

// Differentiable operations on 2-D (rows x cols) tensors. Vectors are
// accepted wherever a single row is expected and are treated as 1 x n.
namespace mect::ops {

Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T without materialising the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// x (r x c) + bias (c or 1 x c) added to every row.
Tensor add_row(const Tensor& x, const Tensor& bias);
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor relu(const Tensor& a);
// Softmax along the last axis, stabilised by subtracting the row max.
// Entries equal to -inf receive exactly zero weight.
Tensor softmax_rows(const Tensor& a);

Tensor concat_last_axis(const Tensor& a, const Tensor& b);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
// Leading rows x cols block.
Tensor top_left(const Tensor& x, std::size_t rows, std::size_t cols);
// Row lookup; repeated ids scatter-add their gradients.
Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids);

// out[i][j] = dot(x[i], r[i * n + j]) where x is n x d and r is (n*n) x d.
Tensor pairwise_dot(const Tensor& x, const Tensor& r);

// Sliding windows: (T x C) -> ((T - width + 1) x width*C), window-major.
Tensor unfold_time(const Tensor& x, std::size_t width);
// Valid 1-D convolution over time. kernels: (width*C_in) x C_out, bias:
// C_out. Sequences shorter than `width` are zero-padded up to `width`.
Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias,
              std::size_t width);
// Column-wise max over rows: (T x C) -> (1 x C). Gradient goes to the
// first maximising row.
Tensor maxpool_time(const Tensor& x);

// Inverted dropout. Identity when !training or p == 0.
Tensor dropout(const Tensor& x, double p, bool training, Rng& rng);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

}  // namespace mect::ops
