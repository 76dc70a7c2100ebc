#pragma once

#include "mrecnn/kernels.hpp"
#include "mrecnn/tensor.hpp"

// Serial reference kernels. Deliberately written as plain nested loops with
// no shared code against the OpenMP implementations in kernels.cpp; the test
// suites and the benchmark compare the two.

namespace mrecnn::ref {

Tensor conv2d_forward_direct(const Tensor& input, const ConvParams& params);

Tensor linear_forward_direct(const Tensor& input, const Tensor& weights, const Tensor& bias);

Tensor maxpool2x2_forward_direct(const Tensor& input);

} // namespace mrecnn::ref
