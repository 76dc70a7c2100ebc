#include "mrecnn/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mrecnn {

namespace {

void check_shape(const std::vector<int>& shape) {
    if (shape.empty() || shape.size() > 4) {
        throw std::invalid_argument("tensor rank must be 1..4, got " + shape_str(shape));
    }
    for (int e : shape) {
        // Zero extents are tolerated so channel concatenation has an identity
        // element; negative extents are always a bug.
        if (e < 0) {
            throw std::invalid_argument("tensor extent must be nonnegative, got " + shape_str(shape));
        }
    }
}

} // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_numel(shape_), 0.0f);
}

Tensor::Tensor(std::vector<int> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_numel(shape_)) {
        throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_str(shape_));
    }
}

Tensor Tensor::full(std::vector<int> shape, float value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

bool Tensor::all_finite() const {
    for (float v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(float value) {
    for (float& v : data_) v = value;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << "x";
        out << shape[i];
    }
    out << "]";
    return out.str();
}

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int e : shape) n *= static_cast<std::size_t>(e);
    return n;
}

Tensor reshaped(Tensor t, std::vector<int> shape) {
    if (shape_numel(shape) != t.numel()) {
        throw std::invalid_argument("reshape from " + shape_str(t.shape()) + " to " +
                                    shape_str(shape) + " changes element count");
    }
    std::vector<float> data(t.data(), t.data() + t.numel());
    return Tensor(std::move(shape), std::move(data));
}

} // namespace mrecnn
