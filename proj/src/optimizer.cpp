#include "mrecnn/optimizer.hpp"

#include <stdexcept>

namespace mrecnn {

OptimizerState OptimizerState::init(const SubNetwork& net, double base_lr, double momentum,
                                    double weight_decay, long long total_iterations) {
    if (base_lr < 0.0) throw std::invalid_argument("base_lr must be nonnegative");
    if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must be in [0, 1)");
    if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be nonnegative");
    if (total_iterations < 0) throw std::invalid_argument("total_iterations must be nonnegative");

    OptimizerState opt;
    opt.base_lr = base_lr;
    opt.momentum = momentum;
    opt.weight_decay = weight_decay;
    opt.total_iterations = total_iterations;
    for (const auto& buf : net.buffers()) {
        opt.velocity.emplace_back(buf.value.shape());
    }
    return opt;
}

double OptimizerState::lr_at(long long t) const {
    if (total_iterations == 0) return base_lr;
    const double frac = 1.0 - static_cast<double>(t) / static_cast<double>(total_iterations);
    return frac > 0.0 ? base_lr * frac : 0.0;
}

void OptimizerState::apply(Tensor& param, const Tensor& grad, Tensor& vel, double lr) const {
    if (!param.same_shape(grad) || !param.same_shape(vel)) {
        throw std::invalid_argument("optimizer buffers are not shape-congruent: param " +
                                    shape_str(param.shape()) + ", grad " + shape_str(grad.shape()) +
                                    ", velocity " + shape_str(vel.shape()));
    }
    const std::int64_t count = static_cast<std::int64_t>(param.numel());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
        const std::size_t j = static_cast<std::size_t>(i);
        const double g = static_cast<double>(grad[j]) + weight_decay * param[j];
        const double v = momentum * static_cast<double>(vel[j]) - lr * g;
        vel[j] = static_cast<float>(v);
        param[j] = static_cast<float>(param[j] + v);
    }
}

void sgd_step(SubNetwork& net, OptimizerState& opt) {
    if (!net.grads_ready()) {
        throw std::logic_error("sgd_step requires gradients freshly filled by backward");
    }
    if (opt.velocity.size() != net.buffers().size()) {
        throw std::invalid_argument("optimizer velocity buffers do not match the network");
    }
    const double lr = opt.lr_at(opt.iteration);
    for (std::size_t i = 0; i < net.buffers().size(); ++i) {
        auto& buf = net.buffers()[i];
        opt.apply(buf.value, buf.grad, opt.velocity[i], lr);
    }
    ++opt.iteration;
    net.consume_grads();
}

} // namespace mrecnn
