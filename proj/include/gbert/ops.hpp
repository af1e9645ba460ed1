#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "gbert/rng.hpp"
#include "gbert/tensor.hpp"

// Differentiable kernels. Every op validates shapes and throws ShapeError
// naming both operands on mismatch.
namespace gbert::ops {

Tensor matmul(const Tensor& a, const Tensor& b);
/// a · bᵀ without materializing the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
/// Adds a 1×C row to every row of an R×C matrix.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor sum(const Tensor& a);

Tensor sigmoid(const Tensor& a);
/// tanh approximation: 0.5·x·(1 + tanh(√(2/π)·(x + 0.044715·x³))).
Tensor gelu(const Tensor& a);

/// Gated linear unit a ⊗ σ(b).
Tensor glu(const Tensor& a, const Tensor& b);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-12);

/// Row softmax. `mask` is empty or row-major with x.size() entries; false
/// entries are excluded and come out as exactly 0.
Tensor softmax_rows(const Tensor& x, const std::vector<bool>& mask = {});

/// Column-wise max over rows with mask[r] true, as a 1×C row. Backward sends
/// each column's gradient to its lowest-index argmax row.
Tensor max_pool_rows(const Tensor& x, const std::vector<bool>& mask);

/// Weighted mean of −log softmax(logits)[target] over rows with weight > 0.
Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets,
                     const std::vector<double>& weights);

/// Rows of `table` selected by ids; gradient scatter-adds into the table.
Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids);

Tensor concat_rows(const Tensor& top, const Tensor& bottom);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);

/// Inverted dropout: zeroes entries with probability p and scales survivors
/// by 1/(1−p). p == 0 returns x unchanged.
Tensor dropout(const Tensor& x, double p, Rng& rng);

/// Node with precomputed values for ops defined outside this file. `backward`
/// adds into the input gradient buffers obtained through input_grad.
Tensor custom(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
              std::function<void(detail::Node&)> backward, const char* op);
/// Gradient buffer of input i, or nullptr when that input is constant.
std::vector<double>* input_grad(detail::Node& self, std::size_t i);

}  // namespace gbert::ops
