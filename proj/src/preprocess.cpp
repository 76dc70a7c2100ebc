#include "mrecnn/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "mrecnn/error.hpp"

namespace mrecnn {

namespace {

std::vector<int> range_indices(int first, int last) {
    std::vector<int> v(static_cast<std::size_t>(last - first + 1));
    std::iota(v.begin(), v.end(), first);
    return v;
}

double sample_bilinear(const ImageBuffer& img, double x, double y, int c) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    auto clamped = [&](int xi, int yi) {
        xi = std::clamp(xi, 0, img.width - 1);
        yi = std::clamp(yi, 0, img.height - 1);
        return static_cast<double>(img.at(xi, yi, c));
    };
    const double top = clamped(x0, y0) * (1.0 - fx) + clamped(x0 + 1, y0) * fx;
    const double bot = clamped(x0, y0 + 1) * (1.0 - fx) + clamped(x0 + 1, y0 + 1) * fx;
    return top * (1.0 - fy) + bot * fy;
}

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

} // namespace

RegionDef region_def(const std::string& name) {
    if (name == "whole_face") return {name, range_indices(0, 67), 0.1};
    if (name == "left_eye") {
        std::vector<int> idx; // brow plus eye
        for (int i = 17; i <= 21; ++i) idx.push_back(i);
        for (int i = 36; i <= 41; ++i) idx.push_back(i);
        return {name, idx, 0.6};
    }
    if (name == "nose") return {name, range_indices(27, 35), 0.5};
    if (name == "mouth") return {name, range_indices(48, 67), 0.4};
    throw std::invalid_argument("unknown region \"" + name +
                                "\" (expected whole_face, left_eye, nose or mouth)");
}

const std::vector<std::string>& region_names() {
    static const std::vector<std::string> names = {"whole_face", "left_eye", "nose", "mouth"};
    return names;
}

SquareBox region_box(const RegionDef& def, const Landmarks68& tmpl) {
    if (def.indices.empty()) throw std::invalid_argument("region \"" + def.name + "\" has no indices");
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (int i : def.indices) {
        if (i < 0 || i > 67) {
            throw std::invalid_argument("region \"" + def.name + "\" index " + std::to_string(i) +
                                        " outside 0..67");
        }
        x0 = std::min(x0, tmpl[i].x);
        x1 = std::max(x1, tmpl[i].x);
        y0 = std::min(y0, tmpl[i].y);
        y1 = std::max(y1, tmpl[i].y);
    }
    SquareBox box;
    box.cx = 0.5 * (x0 + x1);
    box.cy = 0.5 * (y0 + y1);
    box.half = 0.5 * std::max(x1 - x0, y1 - y0) * (1.0 + def.margin);
    if (!(box.half > 0.0)) {
        throw DataError("region \"" + def.name + "\" box is degenerate");
    }
    return box;
}

ImageBuffer warp_resize(const ImageBuffer& img, const SimilarityTransform& t, int out_size) {
    if (out_size < 1) throw std::invalid_argument("warp output size must be >= 1");
    ImageBuffer out(out_size, out_size, img.channels);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < out_size; ++y) {
        for (int x = 0; x < out_size; ++x) {
            const Point2 src = t.apply_inverse({static_cast<double>(x), static_cast<double>(y)});
            for (int c = 0; c < img.channels; ++c) {
                out.at(x, y, c) = quantize(sample_bilinear(img, src.x, src.y, c));
            }
        }
    }
    return out;
}

ImageBuffer bilinear_resize(const ImageBuffer& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize extents must be >= 1");
    if (out_w == img.width && out_h == img.height) return img;
    ImageBuffer out(out_w, out_h, img.channels);
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            const double src_y = (y + 0.5) * sy - 0.5;
            for (int c = 0; c < img.channels; ++c) {
                out.at(x, y, c) = quantize(sample_bilinear(img, src_x, src_y, c));
            }
        }
    }
    return out;
}

ImageBuffer crop_region(const ImageBuffer& aligned, const RegionDef& def, const Landmarks68& tmpl,
                        int out_size) {
    const SquareBox box = region_box(def, tmpl);
    const auto t = SimilarityTransform::box_to_square(box.cx - box.half, box.cy - box.half,
                                                      2.0 * box.half, out_size);
    return warp_resize(aligned, t, out_size);
}

ImageBuffer hflip(const ImageBuffer& img) {
    ImageBuffer out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
            }
        }
    }
    return out;
}

ImageBuffer rotate_about_center(const ImageBuffer& img, double degrees) {
    const double theta = degrees * std::numbers::pi / 180.0;
    const Point2 center{0.5 * (img.width - 1), 0.5 * (img.height - 1)};
    const auto t = SimilarityTransform::rotation_about(theta, center);
    if (img.width != img.height) {
        // rotation keeps extents; resample the general rectangle directly
        ImageBuffer out(img.width, img.height, img.channels);
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                const Point2 src = t.apply_inverse({static_cast<double>(x), static_cast<double>(y)});
                for (int c = 0; c < img.channels; ++c) {
                    out.at(x, y, c) = quantize(sample_bilinear(img, src.x, src.y, c));
                }
            }
        }
        return out;
    }
    return warp_resize(img, t, img.width);
}

ImageBuffer add_gaussian_noise(const ImageBuffer& img, double variance, Rng& rng) {
    if (variance < 0.0) throw std::invalid_argument("noise variance must be nonnegative");
    const double sigma = std::sqrt(variance);
    ImageBuffer out(img.width, img.height, img.channels);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const double v = static_cast<double>(img.pixels[i]) / 255.0 + sigma * rng.normal();
        out.pixels[i] = quantize(255.0 * std::clamp(v, 0.0, 1.0));
    }
    return out;
}

std::vector<ImageBuffer> offline_augment(const ImageBuffer& img, std::uint64_t seed) {
    std::vector<ImageBuffer> variants;
    variants.reserve(15);
    ImageBuffer flipped = hflip(img);
    variants.push_back(flipped);
    static constexpr double kAngles[4] = {4.0, -4.0, 6.0, -6.0};
    for (double deg : kAngles) variants.push_back(rotate_about_center(img, deg));
    for (double deg : kAngles) variants.push_back(rotate_about_center(flipped, deg));
    static constexpr double kVariances[3] = {0.001, 0.01, 0.015};
    Rng rng(seed);
    for (double var : kVariances) variants.push_back(add_gaussian_noise(img, var, rng));
    for (double var : kVariances) variants.push_back(add_gaussian_noise(flipped, var, rng));
    return variants;
}

ImageBuffer pad_crop(const ImageBuffer& img, int margin, int dx, int dy) {
    if (margin < 0) throw std::invalid_argument("pad margin must be nonnegative");
    if (dx < 0 || dx > 2 * margin || dy < 0 || dy > 2 * margin) {
        throw std::invalid_argument("pad_crop offset outside [0, 2*margin]");
    }
    ImageBuffer out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y) {
        const int sy = std::clamp(y + dy - margin, 0, img.height - 1);
        for (int x = 0; x < img.width; ++x) {
            const int sx = std::clamp(x + dx - margin, 0, img.width - 1);
            for (int c = 0; c < img.channels; ++c) {
                out.at(x, y, c) = img.at(sx, sy, c);
            }
        }
    }
    return out;
}

} // namespace mrecnn
