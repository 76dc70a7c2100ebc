#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mrecnn/tensor.hpp"

// Layer kernels, OpenMP-parallel. Every parallel loop writes disjoint output
// elements and accumulates its dot products sequentially in 64-bit, so the
// results are bitwise identical for any thread count. A serial direct-loop
// reference lives in mrecnn/reference.hpp and is what the tests compare
// against.

namespace mrecnn {

struct ConvParams {
    Tensor weights; // out_channels x in_channels x kh x kw
    Tensor bias;    // out_channels
    int stride = 1;
    int pad = 0;

    int out_channels() const { return weights.extent(0); }
    int in_channels() const { return weights.extent(1); }
    int kh() const { return weights.extent(2); }
    int kw() const { return weights.extent(3); }
    void validate() const;
};

// Output spatial extent (H + 2*pad - k) / stride + 1; throws if not a
// positive integer.
int conv_out_extent(int in, int k, int stride, int pad, const char* axis);

Tensor conv2d_forward(const Tensor& input, const ConvParams& params);

struct ConvGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};
ConvGrads conv2d_backward(const Tensor& input, const ConvParams& params, const Tensor& grad_out);

// Records, per pooled element, the flat index of the window maximum in the
// input. Ties go to the first maximum in row-major window order.
struct PoolIndexMap {
    std::vector<int> input_shape;
    std::vector<int> output_shape;
    std::vector<std::int64_t> argmax;
};

struct PoolResult {
    Tensor output;
    PoolIndexMap indices;
};
PoolResult maxpool2x2_forward(const Tensor& input);
Tensor maxpool2x2_backward(const PoolIndexMap& indices, const Tensor& grad_out);

Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct LinearGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};
LinearGrads linear_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out);

Tensor concat_channels(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> concat_channels_backward(const Tensor& grad_out, int channels_a, int channels_b);

// Row-wise softmax with per-row max subtraction.
Tensor softmax(const Tensor& logits);

} // namespace mrecnn
