#include "mrecnn/reference.hpp"

#include <algorithm>

namespace mrecnn::ref {

Tensor conv2d_forward_direct(const Tensor& input, const ConvParams& params) {
    params.validate();
    const int n = input.extent(0);
    const int ic = input.extent(1);
    const int h = input.extent(2);
    const int w = input.extent(3);
    const int oc = params.out_channels();
    const int kh = params.kh(), kw = params.kw();
    const int stride = params.stride, pad = params.pad;
    const int oh = conv_out_extent(h, kh, stride, pad, "height");
    const int ow = conv_out_extent(w, kw, stride, pad, "width");

    Tensor out({n, oc, oh, ow});
    for (int img = 0; img < n; ++img) {
        for (int f = 0; f < oc; ++f) {
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x) {
                    double acc = params.bias[f];
                    for (int c = 0; c < ic; ++c) {
                        for (int r = 0; r < kh; ++r) {
                            const int iy = y * stride - pad + r;
                            if (iy < 0 || iy >= h) continue;
                            for (int s = 0; s < kw; ++s) {
                                const int ix = x * stride - pad + s;
                                if (ix < 0 || ix >= w) continue;
                                acc += static_cast<double>(input.at4(img, c, iy, ix)) *
                                       params.weights.at4(f, c, r, s);
                            }
                        }
                    }
                    out.at4(img, f, y, x) = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

Tensor linear_forward_direct(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    const int n = input.extent(0), d = input.extent(1), k = weights.extent(1);
    Tensor out({n, k});
    for (int row = 0; row < n; ++row) {
        for (int j = 0; j < k; ++j) {
            double acc = bias[j];
            for (int i = 0; i < d; ++i) {
                acc += static_cast<double>(input.at2(row, i)) * weights.at2(i, j);
            }
            out.at2(row, j) = static_cast<float>(acc);
        }
    }
    return out;
}

Tensor maxpool2x2_forward_direct(const Tensor& input) {
    const int n = input.extent(0), c = input.extent(1), h = input.extent(2), w = input.extent(3);
    Tensor out({n, c, h / 2, w / 2});
    for (int img = 0; img < n; ++img) {
        for (int ch = 0; ch < c; ++ch) {
            for (int y = 0; y < h / 2; ++y) {
                for (int x = 0; x < w / 2; ++x) {
                    float best = input.at4(img, ch, 2 * y, 2 * x);
                    best = std::max(best, input.at4(img, ch, 2 * y, 2 * x + 1));
                    best = std::max(best, input.at4(img, ch, 2 * y + 1, 2 * x));
                    best = std::max(best, input.at4(img, ch, 2 * y + 1, 2 * x + 1));
                    out.at4(img, ch, y, x) = best;
                }
            }
        }
    }
    return out;
}

} // namespace mrecnn::ref
