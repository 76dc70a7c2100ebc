#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mrecnn {

// Dense rank-1..4 array of 32-bit reals, row-major, axes ordered
// batch / channel / height / width. The one value type shared by
// activations, weights and gradients.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<float> data);

    static Tensor full(std::vector<int> shape, float value);

    int rank() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    int extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
    std::size_t numel() const { return data_.size(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    // 4-D element access; for hot loops use data() with explicit strides.
    float& at4(int n, int c, int h, int w) {
        return data_[flat4(n, c, h, w)];
    }
    float at4(int n, int c, int h, int w) const {
        return data_[flat4(n, c, h, w)];
    }
    float& at2(int r, int c) { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
    float at2(int r, int c) const { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    void fill(float value);

private:
    std::size_t flat4(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
    }

    std::vector<int> shape_;
    std::vector<float> data_;
};

std::string shape_str(const std::vector<int>& shape);
std::size_t shape_numel(const std::vector<int>& shape);

// Same data, new shape; element counts must agree.
Tensor reshaped(Tensor t, std::vector<int> shape);

} // namespace mrecnn
