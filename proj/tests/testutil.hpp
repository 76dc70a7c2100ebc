#pragma once

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "mrecnn/dataset.hpp"
#include "mrecnn/rng.hpp"
#include "mrecnn/tensor.hpp"

namespace testutil {

inline mrecnn::Tensor random_tensor(std::vector<int> shape, mrecnn::Rng& rng, double lo = -1.0,
                                    double hi = 1.0) {
    mrecnn::Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) {
        t[i] = static_cast<float>(rng.uniform(lo, hi));
    }
    return t;
}

inline bool bitwise_equal(const mrecnn::Tensor& a, const mrecnn::Tensor& b) {
    if (a.shape() != b.shape()) return false;
    return std::memcmp(a.data(), b.data(), a.numel() * sizeof(float)) == 0;
}

inline double weighted_sum(const mrecnn::Tensor& weights, const mrecnn::Tensor& values) {
    double acc = 0.0;
    for (std::size_t i = 0; i < values.numel(); ++i) {
        acc += static_cast<double>(weights[i]) * values[i];
    }
    return acc;
}

// Central difference of L(arg) = sum(weights * eval()) wrt arg[idx], using
// the actually-representable float step.
inline double numeric_derivative(mrecnn::Tensor& arg, std::size_t idx, double eps,
                                 const std::function<mrecnn::Tensor()>& eval,
                                 const mrecnn::Tensor& weights) {
    const float orig = arg[idx];
    const float hi = static_cast<float>(static_cast<double>(orig) + eps);
    const float lo = static_cast<float>(static_cast<double>(orig) - eps);
    arg[idx] = hi;
    const double lp = weighted_sum(weights, eval());
    arg[idx] = lo;
    const double lm = weighted_sum(weights, eval());
    arg[idx] = orig;
    return (lp - lm) / (static_cast<double>(hi) - static_cast<double>(lo));
}

// relative error < 1e-2 with absolute fallback 1e-4 near zero
inline bool grad_close(double analytic, double numeric) {
    const double diff = std::abs(analytic - numeric);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    return diff <= std::max(1e-2 * scale, 1e-4);
}

struct FdProbe {
    double value = 0.0;
    bool differentiable = true;
};

// Central difference plus a kink detector: when the forward and backward
// one-sided differences disagree, a ReLU or pool tie sits inside the probe
// interval and the point is not differentiable there.
inline FdProbe numeric_derivative_checked(mrecnn::Tensor& arg, std::size_t idx, double eps,
                                          const std::function<mrecnn::Tensor()>& eval,
                                          const mrecnn::Tensor& weights) {
    const float orig = arg[idx];
    const float hi = static_cast<float>(static_cast<double>(orig) + eps);
    const float lo = static_cast<float>(static_cast<double>(orig) - eps);
    const double l0 = weighted_sum(weights, eval());
    arg[idx] = hi;
    const double lp = weighted_sum(weights, eval());
    arg[idx] = lo;
    const double lm = weighted_sum(weights, eval());
    arg[idx] = orig;

    FdProbe probe;
    const double span = static_cast<double>(hi) - static_cast<double>(lo);
    probe.value = (lp - lm) / span;
    const double fwd = (lp - l0) / (static_cast<double>(hi) - static_cast<double>(orig));
    const double bwd = (l0 - lm) / (static_cast<double>(orig) - static_cast<double>(lo));
    const double scale = std::max({std::abs(fwd), std::abs(bwd), 1e-4 / eps});
    probe.differentiable = std::abs(fwd - bwd) <= 0.02 * scale;
    return probe;
}

// Class-coded geometric patterns: the face image carries a bright horizontal
// band in the label-th row slot, the region image a bright vertical band in
// the label-th column slot, both over per-sample jittered backgrounds.
inline std::vector<mrecnn::RegionSample> synthetic_dataset(int per_class, int size, int classes,
                                                           std::uint64_t seed) {
    mrecnn::Rng rng(seed);
    std::vector<mrecnn::RegionSample> samples;
    const int slot = size / 8;
    for (int label = 0; label < classes; ++label) {
        for (int k = 0; k < per_class; ++k) {
            mrecnn::RegionSample s;
            s.label = label;
            s.face = mrecnn::ImageBuffer(size, size, 3);
            s.region = mrecnn::ImageBuffer(size, size, 3);
            const int bg = 20 + static_cast<int>(rng.below(30));
            const int fg = 180 + static_cast<int>(rng.below(60));
            for (int y = 0; y < size; ++y) {
                for (int x = 0; x < size; ++x) {
                    const bool face_band = y >= label * slot && y < (label + 1) * slot;
                    const bool region_band = x >= label * slot && x < (label + 1) * slot;
                    for (int c = 0; c < 3; ++c) {
                        const int jitter = static_cast<int>(rng.below(21)) - 10;
                        const int face_v = (face_band ? fg : bg) + jitter;
                        s.face.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(face_v, 0, 255));
                        const int jitter2 = static_cast<int>(rng.below(21)) - 10;
                        const int region_v = (region_band ? fg : bg) + jitter2;
                        s.region.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(region_v, 0, 255));
                    }
                }
            }
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

} // namespace testutil
