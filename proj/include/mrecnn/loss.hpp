#pragma once

#include <vector>

#include "mrecnn/tensor.hpp"

namespace mrecnn {

struct LossReport {
    double loss = 0.0;
    Tensor logit_gradient; // N x K, rows sum to 0
    double batch_accuracy = 0.0;
};

// Mean softmax cross-entropy over the batch. The gradient is
// (softmax(logits) - onehot(labels)) / N. Argmax ties resolve to the lowest
// class index.
LossReport softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

} // namespace mrecnn
