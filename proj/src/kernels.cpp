#include "mrecnn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mrecnn {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void require_rank4(const Tensor& t, const char* what) {
    require(t.rank() == 4, std::string(what) + " must be rank 4, got " + shape_str(t.shape()));
}

// Unpacks input[n] into cols[(ic*kh + r)*kw + s][oh*ow] with zero padding.
void im2col(const float* in, int ic, int h, int w, int kh, int kw, int stride, int pad,
            int oh, int ow, float* cols) {
    const std::int64_t rows = static_cast<std::int64_t>(ic) * kh * kw;
    const std::int64_t out_px = static_cast<std::int64_t>(oh) * ow;
#pragma omp parallel for schedule(static)
    for (std::int64_t row = 0; row < rows; ++row) {
        const int s = static_cast<int>(row % kw);
        const int r = static_cast<int>((row / kw) % kh);
        const int c = static_cast<int>(row / (static_cast<std::int64_t>(kw) * kh));
        float* dst = cols + row * out_px;
        const float* src = in + static_cast<std::int64_t>(c) * h * w;
        for (int y = 0; y < oh; ++y) {
            const int iy = y * stride - pad + r;
            if (iy < 0 || iy >= h) {
                std::fill(dst, dst + ow, 0.0f);
                dst += ow;
                continue;
            }
            for (int x = 0; x < ow; ++x) {
                const int ix = x * stride - pad + s;
                *dst++ = (ix >= 0 && ix < w) ? src[static_cast<std::int64_t>(iy) * w + ix] : 0.0f;
            }
        }
    }
}

} // namespace

void ConvParams::validate() const {
    require(weights.rank() == 4, "conv weights must be rank 4, got " + shape_str(weights.shape()));
    require(bias.rank() == 1 && bias.extent(0) == out_channels(),
            "conv bias must be rank 1 with " + std::to_string(out_channels()) + " entries, got " +
                shape_str(bias.shape()));
    require(kh() >= 1 && kw() >= 1, "conv kernel extents must be >= 1, got " + shape_str(weights.shape()));
    require(stride >= 1, "conv stride must be >= 1, got " + std::to_string(stride));
    require(pad >= 0, "conv pad must be >= 0, got " + std::to_string(pad));
}

int conv_out_extent(int in, int k, int stride, int pad, const char* axis) {
    const int span = in + 2 * pad - k;
    require(span >= 0, std::string("conv kernel larger than padded input along ") + axis);
    require(span % stride == 0, std::string("conv output extent along ") + axis +
                                    " is not integral: (" + std::to_string(in) + " + 2*" +
                                    std::to_string(pad) + " - " + std::to_string(k) + ") / " +
                                    std::to_string(stride));
    return span / stride + 1;
}

Tensor conv2d_forward(const Tensor& input, const ConvParams& params) {
    params.validate();
    require_rank4(input, "conv input");
    const int n = input.extent(0), ic = input.extent(1), h = input.extent(2), w = input.extent(3);
    require(ic == params.in_channels(),
            "conv input channels (" + std::to_string(ic) + ") != kernel in_channels (" +
                std::to_string(params.in_channels()) + ")");
    const int oc = params.out_channels();
    const int oh = conv_out_extent(h, params.kh(), params.stride, params.pad, "height");
    const int ow = conv_out_extent(w, params.kw(), params.stride, params.pad, "width");

    Tensor out({n, oc, oh, ow});
    const std::int64_t k_rows = static_cast<std::int64_t>(ic) * params.kh() * params.kw();
    const std::int64_t out_px = static_cast<std::int64_t>(oh) * ow;
    std::vector<float> cols(static_cast<std::size_t>(k_rows * out_px));

    for (int img = 0; img < n; ++img) {
        im2col(input.data() + static_cast<std::int64_t>(img) * ic * h * w, ic, h, w, params.kh(),
               params.kw(), params.stride, params.pad, oh, ow, cols.data());
        float* out_base = out.data() + static_cast<std::int64_t>(img) * oc * out_px;
#pragma omp parallel for schedule(static)
        for (int f = 0; f < oc; ++f) {
            std::vector<double> acc(static_cast<std::size_t>(out_px), static_cast<double>(params.bias[f]));
            const float* wrow = params.weights.data() + static_cast<std::int64_t>(f) * k_rows;
            for (std::int64_t k = 0; k < k_rows; ++k) {
                const double wk = wrow[k];
                const float* col = cols.data() + k * out_px;
                for (std::int64_t j = 0; j < out_px; ++j) acc[j] += wk * col[j];
            }
            float* dst = out_base + static_cast<std::int64_t>(f) * out_px;
            for (std::int64_t j = 0; j < out_px; ++j) dst[j] = static_cast<float>(acc[j]);
        }
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor& input, const ConvParams& params, const Tensor& grad_out) {
    params.validate();
    require_rank4(input, "conv input");
    require_rank4(grad_out, "conv grad_out");
    const int n = input.extent(0), ic = input.extent(1), h = input.extent(2), w = input.extent(3);
    require(ic == params.in_channels(),
            "conv input channels (" + std::to_string(ic) + ") != kernel in_channels (" +
                std::to_string(params.in_channels()) + ")");
    const int oc = params.out_channels();
    const int kh = params.kh(), kw = params.kw(), stride = params.stride, pad = params.pad;
    const int oh = conv_out_extent(h, kh, stride, pad, "height");
    const int ow = conv_out_extent(w, kw, stride, pad, "width");
    require(grad_out.shape() == std::vector<int>({n, oc, oh, ow}),
            "conv grad_out shape " + shape_str(grad_out.shape()) + " != expected " +
                shape_str({n, oc, oh, ow}));

    ConvGrads grads{Tensor(input.shape()), Tensor(params.weights.shape()), Tensor(params.bias.shape())};
    const std::int64_t out_px = static_cast<std::int64_t>(oh) * ow;
    const std::int64_t k_rows = static_cast<std::int64_t>(ic) * kh * kw;

    // bias: per-channel sum of grad_out
#pragma omp parallel for schedule(static)
    for (int f = 0; f < oc; ++f) {
        double acc = 0.0;
        for (int img = 0; img < n; ++img) {
            const float* g = grad_out.data() + (static_cast<std::int64_t>(img) * oc + f) * out_px;
            for (std::int64_t j = 0; j < out_px; ++j) acc += g[j];
        }
        grads.bias[f] = static_cast<float>(acc);
    }

    // weights: grad_W[f][k] = sum_img <grad_out[img][f], cols_img[k]>
    {
        std::vector<double> wacc(static_cast<std::size_t>(oc) * k_rows, 0.0);
        std::vector<float> cols(static_cast<std::size_t>(k_rows * out_px));
        for (int img = 0; img < n; ++img) {
            im2col(input.data() + static_cast<std::int64_t>(img) * ic * h * w, ic, h, w, kh, kw,
                   stride, pad, oh, ow, cols.data());
#pragma omp parallel for schedule(static)
            for (int f = 0; f < oc; ++f) {
                const float* g = grad_out.data() + (static_cast<std::int64_t>(img) * oc + f) * out_px;
                double* row = wacc.data() + static_cast<std::int64_t>(f) * k_rows;
                for (std::int64_t k = 0; k < k_rows; ++k) {
                    const float* col = cols.data() + k * out_px;
                    double acc = 0.0;
                    for (std::int64_t j = 0; j < out_px; ++j) acc += static_cast<double>(g[j]) * col[j];
                    row[k] += acc;
                }
            }
        }
        for (std::size_t i = 0; i < wacc.size(); ++i) grads.weights[i] = static_cast<float>(wacc[i]);
    }

    // input: gather form so parallel writes stay disjoint
    const std::int64_t planes = static_cast<std::int64_t>(n) * ic;
#pragma omp parallel for schedule(static)
    for (std::int64_t plane = 0; plane < planes; ++plane) {
        const int img = static_cast<int>(plane / ic);
        const int c = static_cast<int>(plane % ic);
        float* gin = grads.input.data() + plane * h * w;
        for (int iy = 0; iy < h; ++iy) {
            for (int ix = 0; ix < w; ++ix) {
                double acc = 0.0;
                for (int f = 0; f < oc; ++f) {
                    const float* wk = params.weights.data() +
                                      (static_cast<std::int64_t>(f) * ic + c) * kh * kw;
                    const float* g = grad_out.data() + (static_cast<std::int64_t>(img) * oc + f) * out_px;
                    for (int r = 0; r < kh; ++r) {
                        const int num_y = iy + pad - r;
                        if (num_y < 0 || num_y % stride != 0) continue;
                        const int y = num_y / stride;
                        if (y >= oh) continue;
                        for (int s = 0; s < kw; ++s) {
                            const int num_x = ix + pad - s;
                            if (num_x < 0 || num_x % stride != 0) continue;
                            const int x = num_x / stride;
                            if (x >= ow) continue;
                            acc += static_cast<double>(wk[r * kw + s]) *
                                   g[static_cast<std::int64_t>(y) * ow + x];
                        }
                    }
                }
                gin[static_cast<std::int64_t>(iy) * w + ix] = static_cast<float>(acc);
            }
        }
    }
    return grads;
}

PoolResult maxpool2x2_forward(const Tensor& input) {
    require_rank4(input, "maxpool input");
    const int n = input.extent(0), c = input.extent(1), h = input.extent(2), w = input.extent(3);
    require(h % 2 == 0 && w % 2 == 0,
            "maxpool2x2 requires even spatial extents, got " + shape_str(input.shape()));
    const int oh = h / 2, ow = w / 2;

    PoolResult res{Tensor({n, c, oh, ow}), {}};
    res.indices.input_shape = input.shape();
    res.indices.output_shape = res.output.shape();
    res.indices.argmax.resize(res.output.numel());

    const std::int64_t planes = static_cast<std::int64_t>(n) * c;
#pragma omp parallel for schedule(static)
    for (std::int64_t plane = 0; plane < planes; ++plane) {
        const float* in = input.data() + plane * h * w;
        float* out = res.output.data() + plane * oh * ow;
        std::int64_t* arg = res.indices.argmax.data() + plane * oh * ow;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                std::int64_t best_idx = static_cast<std::int64_t>(2 * y) * w + 2 * x;
                float best = in[best_idx];
                for (int r = 0; r < 2; ++r) {
                    for (int s = 0; s < 2; ++s) {
                        const std::int64_t idx = static_cast<std::int64_t>(2 * y + r) * w + (2 * x + s);
                        if (in[idx] > best) { // strict: first max wins
                            best = in[idx];
                            best_idx = idx;
                        }
                    }
                }
                out[static_cast<std::int64_t>(y) * ow + x] = best;
                arg[static_cast<std::int64_t>(y) * ow + x] = plane * h * w + best_idx;
            }
        }
    }
    return res;
}

Tensor maxpool2x2_backward(const PoolIndexMap& indices, const Tensor& grad_out) {
    require(!indices.input_shape.empty(), "maxpool index map is empty");
    require(grad_out.shape() == indices.output_shape,
            "maxpool grad_out shape " + shape_str(grad_out.shape()) +
                " does not match recorded output shape " + shape_str(indices.output_shape));
    require(indices.argmax.size() == grad_out.numel(), "maxpool index map length mismatch");

    Tensor grad_in(indices.input_shape);
    const std::int64_t total = static_cast<std::int64_t>(grad_in.numel());
    for (std::int64_t idx : indices.argmax) {
        require(idx >= 0 && idx < total, "maxpool index map entry out of range for input shape " +
                                             shape_str(indices.input_shape));
    }

    const std::int64_t count = static_cast<std::int64_t>(grad_out.numel());
    // windows are disjoint, so the recorded indices never collide
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
        grad_in[static_cast<std::size_t>(indices.argmax[i])] = grad_out[static_cast<std::size_t>(i)];
    }
    return grad_in;
}

Tensor relu(const Tensor& input) {
    Tensor out(input.shape());
    const std::int64_t count = static_cast<std::int64_t>(input.numel());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
        const float v = input[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(i)] = v > 0.0f ? v : 0.0f;
    }
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
    require(input.same_shape(grad_out), "relu grad_out shape " + shape_str(grad_out.shape()) +
                                            " != input shape " + shape_str(input.shape()));
    Tensor grad_in(input.shape());
    const std::int64_t count = static_cast<std::int64_t>(input.numel());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
        // subgradient 0 at exactly 0
        grad_in[static_cast<std::size_t>(i)] =
            input[static_cast<std::size_t>(i)] > 0.0f ? grad_out[static_cast<std::size_t>(i)] : 0.0f;
    }
    return grad_in;
}

Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require(input.rank() == 2, "linear input must be rank 2, got " + shape_str(input.shape()));
    require(weights.rank() == 2, "linear weights must be rank 2, got " + shape_str(weights.shape()));
    const int n = input.extent(0), d = input.extent(1);
    const int k = weights.extent(1);
    require(weights.extent(0) == d, "linear inner dimensions disagree: input " +
                                        shape_str(input.shape()) + " vs weights " +
                                        shape_str(weights.shape()));
    require(bias.rank() == 1 && bias.extent(0) == k,
            "linear bias must have " + std::to_string(k) + " entries, got " + shape_str(bias.shape()));

    Tensor out({n, k});
#pragma omp parallel for schedule(static)
    for (int row = 0; row < n; ++row) {
        std::vector<double> acc(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) acc[j] = bias[j];
        const float* in = input.data() + static_cast<std::int64_t>(row) * d;
        for (int i = 0; i < d; ++i) {
            const double v = in[i];
            const float* wrow = weights.data() + static_cast<std::int64_t>(i) * k;
            for (int j = 0; j < k; ++j) acc[j] += v * wrow[j];
        }
        float* dst = out.data() + static_cast<std::int64_t>(row) * k;
        for (int j = 0; j < k; ++j) dst[j] = static_cast<float>(acc[j]);
    }
    return out;
}

LinearGrads linear_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out) {
    require(input.rank() == 2 && weights.rank() == 2 && grad_out.rank() == 2,
            "linear backward expects rank-2 tensors");
    const int n = input.extent(0), d = input.extent(1), k = weights.extent(1);
    require(weights.extent(0) == d, "linear inner dimensions disagree: input " +
                                        shape_str(input.shape()) + " vs weights " +
                                        shape_str(weights.shape()));
    require(grad_out.shape() == std::vector<int>({n, k}),
            "linear grad_out shape " + shape_str(grad_out.shape()) + " != expected " +
                shape_str({n, k}));

    LinearGrads grads{Tensor({n, d}), Tensor({d, k}), Tensor({k})};

#pragma omp parallel for schedule(static)
    for (int row = 0; row < n; ++row) {
        const float* g = grad_out.data() + static_cast<std::int64_t>(row) * k;
        float* gi = grads.input.data() + static_cast<std::int64_t>(row) * d;
        for (int i = 0; i < d; ++i) {
            const float* wrow = weights.data() + static_cast<std::int64_t>(i) * k;
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += static_cast<double>(g[j]) * wrow[j];
            gi[i] = static_cast<float>(acc);
        }
    }

#pragma omp parallel for schedule(static)
    for (int i = 0; i < d; ++i) {
        std::vector<double> acc(static_cast<std::size_t>(k), 0.0);
        for (int row = 0; row < n; ++row) {
            const double v = input.data()[static_cast<std::int64_t>(row) * d + i];
            const float* g = grad_out.data() + static_cast<std::int64_t>(row) * k;
            for (int j = 0; j < k; ++j) acc[j] += v * g[j];
        }
        float* dst = grads.weights.data() + static_cast<std::int64_t>(i) * k;
        for (int j = 0; j < k; ++j) dst[j] = static_cast<float>(acc[j]);
    }

#pragma omp parallel for schedule(static)
    for (int j = 0; j < k; ++j) {
        double acc = 0.0;
        for (int row = 0; row < n; ++row) {
            acc += grad_out.data()[static_cast<std::int64_t>(row) * k + j];
        }
        grads.bias[j] = static_cast<float>(acc);
    }
    return grads;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    require_rank4(a, "concat lhs");
    require_rank4(b, "concat rhs");
    require(a.extent(0) == b.extent(0), "concat batch extents disagree: " + shape_str(a.shape()) +
                                            " vs " + shape_str(b.shape()));
    require(a.extent(2) == b.extent(2) && a.extent(3) == b.extent(3),
            "concat spatial extents disagree: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));

    const int n = a.extent(0), ca = a.extent(1), cb = b.extent(1);
    const int h = a.extent(2), w = a.extent(3);
    const std::int64_t px = static_cast<std::int64_t>(h) * w;
    Tensor out({n, ca + cb, h, w});
#pragma omp parallel for schedule(static)
    for (int img = 0; img < n; ++img) {
        float* dst = out.data() + static_cast<std::int64_t>(img) * (ca + cb) * px;
        const float* pa = a.data() + static_cast<std::int64_t>(img) * ca * px;
        const float* pb = b.data() + static_cast<std::int64_t>(img) * cb * px;
        std::copy(pa, pa + ca * px, dst);
        std::copy(pb, pb + cb * px, dst + ca * px);
    }
    return out;
}

std::pair<Tensor, Tensor> concat_channels_backward(const Tensor& grad_out, int channels_a,
                                                   int channels_b) {
    require_rank4(grad_out, "concat grad_out");
    require(channels_a >= 0 && channels_b >= 0, "concat channel counts must be nonnegative");
    require(grad_out.extent(1) == channels_a + channels_b,
            "concat grad_out channels (" + std::to_string(grad_out.extent(1)) + ") != " +
                std::to_string(channels_a) + " + " + std::to_string(channels_b));

    const int n = grad_out.extent(0), h = grad_out.extent(2), w = grad_out.extent(3);
    const std::int64_t px = static_cast<std::int64_t>(h) * w;
    Tensor ga({n, channels_a, h, w});
    Tensor gb({n, channels_b, h, w});
#pragma omp parallel for schedule(static)
    for (int img = 0; img < n; ++img) {
        const float* src = grad_out.data() + static_cast<std::int64_t>(img) * (channels_a + channels_b) * px;
        std::copy(src, src + channels_a * px, ga.data() + static_cast<std::int64_t>(img) * channels_a * px);
        std::copy(src + channels_a * px, src + (channels_a + channels_b) * px,
                  gb.data() + static_cast<std::int64_t>(img) * channels_b * px);
    }
    return {std::move(ga), std::move(gb)};
}

Tensor softmax(const Tensor& logits) {
    require(logits.rank() == 2, "softmax expects rank-2 logits, got " + shape_str(logits.shape()));
    const int n = logits.extent(0), k = logits.extent(1);
    require(k >= 1, "softmax needs at least one class");

    Tensor out({n, k});
#pragma omp parallel for schedule(static)
    for (int row = 0; row < n; ++row) {
        const float* z = logits.data() + static_cast<std::int64_t>(row) * k;
        float m = z[0];
        for (int j = 1; j < k; ++j) m = std::max(m, z[j]);
        double sum = 0.0;
        std::vector<double> e(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) {
            e[j] = std::exp(static_cast<double>(z[j]) - static_cast<double>(m));
            sum += e[j];
        }
        float* dst = out.data() + static_cast<std::int64_t>(row) * k;
        for (int j = 0; j < k; ++j) dst[j] = static_cast<float>(e[j] / sum);
    }
    return out;
}

} // namespace mrecnn
