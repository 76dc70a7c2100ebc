#pragma once

#include <vector>

#include "mrecnn/network.hpp"
#include "mrecnn/tensor.hpp"

namespace mrecnn {

// SGD with momentum, weight decay and a linear learning-rate schedule:
// lr_t = base_lr * (1 - t / total_iterations), floored at 0.
// total_iterations == 0 disables the schedule (constant base_lr).
struct OptimizerState {
    double base_lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    long long total_iterations = 0;
    long long iteration = 0;
    std::vector<Tensor> velocity; // aligned with the network's buffer order

    static OptimizerState init(const SubNetwork& net, double base_lr, double momentum,
                               double weight_decay, long long total_iterations);

    double lr_at(long long t) const;

    // g' = g + weight_decay * p; v = momentum * v - lr * g'; p += v
    void apply(Tensor& param, const Tensor& grad, Tensor& vel, double lr) const;
};

// One optimizer step over every buffer; requires gradients freshly filled by
// backward and consumes them.
void sgd_step(SubNetwork& net, OptimizerState& opt);

} // namespace mrecnn
