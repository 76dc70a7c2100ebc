#include "mrecnn/align.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mrecnn/error.hpp"

namespace mrecnn {

Landmarks68 read_pts68(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open landmark file \"" + path + "\"");
    Landmarks68 lm;
    for (int i = 0; i < 68; ++i) {
        if (!(in >> lm[i].x >> lm[i].y)) {
            throw DataError("\"" + path + "\": expected 68 \"x y\" lines, failed at line " +
                            std::to_string(i + 1));
        }
        if (!std::isfinite(lm[i].x) || !std::isfinite(lm[i].y)) {
            throw DataError("\"" + path + "\": non-finite landmark at line " + std::to_string(i + 1));
        }
    }
    return lm;
}

void write_pts68(const Landmarks68& landmarks, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open \"" + path + "\" for writing");
    out.precision(17);
    for (const auto& p : landmarks.pts) out << p.x << " " << p.y << "\n";
    if (!out) throw DataError("write to \"" + path + "\" failed");
}

Point2 SimilarityTransform::apply(Point2 p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {scale * (c * p.x - s * p.y) + tx, scale * (s * p.x + c * p.y) + ty};
}

Point2 SimilarityTransform::apply_inverse(Point2 q) const {
    const double c = std::cos(theta), s = std::sin(theta);
    const double dx = (q.x - tx) / scale;
    const double dy = (q.y - ty) / scale;
    return {c * dx + s * dy, -s * dx + c * dy};
}

SimilarityTransform SimilarityTransform::rotation_about(double theta, Point2 center) {
    const double c = std::cos(theta), s = std::sin(theta);
    SimilarityTransform t;
    t.theta = theta;
    t.tx = center.x - (c * center.x - s * center.y);
    t.ty = center.y - (s * center.x + c * center.y);
    return t;
}

SimilarityTransform SimilarityTransform::box_to_square(double x0, double y0, double side,
                                                       int out_size) {
    if (!(side > 0.0)) throw std::invalid_argument("box side must be positive");
    SimilarityTransform t;
    t.scale = static_cast<double>(out_size) / side;
    t.tx = -t.scale * x0;
    t.ty = -t.scale * y0;
    return t;
}

SimilarityTransform estimate_similarity(const Landmarks68& source, const Landmarks68& target) {
    Point2 pc{0, 0}, qc{0, 0};
    for (int i = 0; i < 68; ++i) {
        pc.x += source[i].x;
        pc.y += source[i].y;
        qc.x += target[i].x;
        qc.y += target[i].y;
    }
    pc.x /= 68.0;
    pc.y /= 68.0;
    qc.x /= 68.0;
    qc.y /= 68.0;

    double spp = 0.0, a = 0.0, b = 0.0;
    for (int i = 0; i < 68; ++i) {
        const double px = source[i].x - pc.x, py = source[i].y - pc.y;
        const double qx = target[i].x - qc.x, qy = target[i].y - qc.y;
        spp += px * px + py * py;
        a += px * qx + py * qy;
        b += px * qy - py * qx;
    }
    if (spp <= 1e-12) {
        throw DataError("cannot align: source landmarks have zero variance");
    }
    const double norm = std::hypot(a, b);
    if (norm <= 1e-12 * spp) {
        throw DataError("cannot align: target landmarks are degenerate");
    }

    SimilarityTransform t;
    t.theta = std::atan2(b, a);
    t.scale = norm / spp;
    const double c = std::cos(t.theta), s = std::sin(t.theta);
    t.tx = qc.x - t.scale * (c * pc.x - s * pc.y);
    t.ty = qc.y - t.scale * (s * pc.x + c * pc.y);
    return t;
}

namespace {

constexpr double kPi = std::numbers::pi;

// unit-square mean shape; scaled by out_size below
void fill_unit_template(Landmarks68& lm) {
    // jaw: lower half-ellipse from viewer-left ear through the chin
    for (int i = 0; i <= 16; ++i) {
        const double phi = kPi * static_cast<double>(i) / 16.0;
        lm[i] = {0.5 - 0.34 * std::cos(phi), 0.46 + 0.42 * std::sin(phi)};
    }
    // brows: shallow arches
    for (int i = 0; i < 5; ++i) {
        const double t = static_cast<double>(i) / 4.0;
        const double arch = 0.02 * std::sin(kPi * t);
        lm[17 + i] = {0.22 + 0.18 * t, 0.305 - arch};
        lm[22 + i] = {0.60 + 0.18 * t, 0.305 - arch};
    }
    // nose bridge and base
    for (int i = 0; i < 4; ++i) {
        lm[27 + i] = {0.5, 0.40 + 0.056 * i};
    }
    const double base_x[5] = {0.42, 0.46, 0.50, 0.54, 0.58};
    const double base_y[5] = {0.62, 0.635, 0.64, 0.635, 0.62};
    for (int i = 0; i < 5; ++i) lm[31 + i] = {base_x[i], base_y[i]};
    // eyes: six points each, centers at (0.31, 0.38) and (0.69, 0.38)
    const double ex[6] = {-0.055, -0.025, 0.025, 0.055, 0.025, -0.025};
    const double ey[6] = {0.0, -0.022, -0.022, 0.0, 0.022, 0.022};
    for (int i = 0; i < 6; ++i) {
        lm[36 + i] = {0.31 + ex[i], 0.38 + ey[i]};
        lm[42 + i] = {0.69 + ex[i], 0.38 + ey[i]};
    }
    // mouth: outer lip (12 points) and inner lip (8 points)
    for (int i = 0; i < 12; ++i) {
        const double psi = kPi - kPi * static_cast<double>(i) / 6.0;
        lm[48 + i] = {0.5 + 0.13 * std::cos(psi), 0.72 - 0.055 * std::sin(psi)};
    }
    for (int i = 0; i < 8; ++i) {
        const double psi = kPi - kPi * static_cast<double>(i) / 4.0;
        lm[60 + i] = {0.5 + 0.085 * std::cos(psi), 0.72 - 0.022 * std::sin(psi)};
    }
}

} // namespace

Landmarks68 canonical_template(int out_size) {
    if (out_size < 1) throw std::invalid_argument("template size must be positive");
    Landmarks68 lm;
    fill_unit_template(lm);
    for (auto& p : lm.pts) {
        p.x *= out_size;
        p.y *= out_size;
    }
    return lm;
}

} // namespace mrecnn
