#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mrecnn/tensor.hpp"

namespace mrecnn {

// 8-bit image, row-major, channel-interleaved; 1 channel (gray) or 3 (RGB).
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, int c)
        : width(w), height(h), channels(c),
          pixels(static_cast<std::size_t>(w) * h * c, 0) {}

    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// Binary PGM (P5) / PPM (P6), maxval 255.
ImageBuffer read_pnm(const std::string& path);
void write_pnm(const ImageBuffer& img, const std::string& path);

// Scales to [0,1], replicates grayscale to 3 channels and subtracts the
// per-channel dataset mean. Output is 1 x 3 x H x W.
Tensor to_tensor(const ImageBuffer& img, const std::array<float, 3>& mean);

// Inverse of to_tensor up to 8-bit quantization; expects 1 x 3 x H x W.
ImageBuffer from_tensor(const Tensor& t, const std::array<float, 3>& mean);

} // namespace mrecnn
