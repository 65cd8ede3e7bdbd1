#pragma once

#include <cstddef>
#include <span>

#include "nfa/diff/tensor.hpp"

namespace nfa::diff {

// Shape rules:
//   matmul      (m,k) x (k,n) -> (m,n)
//   add, mul    b matches a exactly, matches a without its leading batch
//               dimension, or holds a single element
//   *_lastdim   operate row-wise along the final axis
//   sum, mean   reduce everything to a rank-0 scalar
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softmax_lastdim(const Tensor& x);
Tensor log_softmax_lastdim(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor concat_lastdim(std::span<const Tensor> parts);
Tensor scale(const Tensor& x, double factor);
Tensor slice_lastdim(const Tensor& x, std::size_t begin, std::size_t end);

// Forward value is the one-hot argmax of each last-dim row (first index on
// ties); backward passes the incoming gradient through unchanged.
Tensor straight_through(const Tensor& soft);

// a - b, expressed with the primitive ops.
Tensor sub(const Tensor& a, const Tensor& b);

struct OpAttributes {
  double factor = 1.0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Uniform dispatch over OpKind; used by the gradcheck suite and tooling that
// builds graphs from a description.
Tensor forward_op(OpKind kind, std::span<const Tensor> inputs,
                  const OpAttributes& attrs = {});

}  // namespace nfa::diff
