#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trustgnn/sparse.hpp"
#include "trustgnn/tape.hpp"

// Differentiable primitives. Every function records its result on the tape
// owning its inputs and raises ShapeError on incompatible shapes.
namespace trustgnn::nd {

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise
Var scale(const Var& a, double s);
Var add_row(const Var& x, const Var& row);  // x + row broadcast over rows
Var concat_cols(const std::vector<Var>& parts);
Var sum_rows(const Var& x);   // 1 x cols
Var mean_rows(const Var& x);  // 1 x cols
Var sum(const Var& x);        // 1 x 1
Var mean(const Var& x);       // 1 x 1
Var tanh(const Var& x);
Var relu(const Var& x);
Var gather_rows(const Var& x, std::vector<std::size_t> rows);

// s · x, where s_t is the transpose of s (used for the backward pass).
Var spmm(const CsrMatrix& s, const CsrMatrix& s_t, const Var& x);

Var complex_hadamard(const Var& x, const Var& y);
Var complex_conjugate(const Var& x);
Var complex_unit_normalize(const Var& x, double eps = 1e-12);

Var softmax(const Var& x);  // row-wise
// Mean over rows of -log softmax(logits)[label].
Var cross_entropy(const Var& logits, std::span<const std::size_t> labels);
// Σ_j weights[0, j] · terms[j]
Var weighted_sum(const std::vector<Var>& terms, const Var& weights);

}  // namespace trustgnn::nd
