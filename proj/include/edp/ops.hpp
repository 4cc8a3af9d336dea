#pragma once

#include <vector>

#include "edp/tensor.hpp"

namespace edp {

enum class Activation { relu, gelu };

// Shape contracts are validated on every call; violations throw.
// Backward rules accumulate (+=) so shared subexpressions add up.

Tensor matmul(const Tensor& a, const Tensor& b);     // [m,k]x[k,n] -> [m,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m,d]x[s,d] -> a b^T [m,s]

Tensor add(const Tensor& a, const Tensor& b);  // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_row_broadcast(const Tensor& a, const Tensor& bias);  // bias is 1xN

Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);  // exact erf form

// Row-stabilized softmax; each output row is nonnegative and sums to 1.
Tensor softmax_rows(const Tensor& x);

// Per-row standardization followed by elementwise affine (gain, bias are 1xD).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

// softmax(q k^T / sqrt(d)) v with q:[m,d], k,v:[s,d]. Callers guarantee s >= 1.
Tensor scaled_dot_attention(const Tensor& queries, const Tensor& keys,
                            const Tensor& values);

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

// affine -> activation -> affine
Tensor mlp_forward(const Tensor& x, const Tensor& w1, const Tensor& b1,
                   const Tensor& w2, const Tensor& b2, Activation act);

// Mean of squared elementwise differences, as a 1x1 tensor.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);  // all parts share rows
Tensor take_row(const Tensor& x, int row);             // 1xN view-copy, differentiable

// Multiplies row i by factors[i] (dropout-style masks, etc.).
Tensor row_scale(const Tensor& x, const std::vector<double>& factors);

// Mean of 1x1 tensors, as a 1x1 tensor.
Tensor mean_scalars(const std::vector<Tensor>& scalars);

}  // namespace edp
