#pragma once

#include <array>
#include <string>

namespace mrecnn {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

// 68 landmark points in the standard ordering: jaw 0-16, brows 17-26,
// nose 27-35, eyes 36-47, mouth 48-67.
struct Landmarks68 {
    std::array<Point2, 68> pts;

    Point2& operator[](int i) { return pts[static_cast<std::size_t>(i)]; }
    const Point2& operator[](int i) const { return pts[static_cast<std::size_t>(i)]; }
};

// Text format: 68 lines of "x y" decimal pairs.
Landmarks68 read_pts68(const std::string& path);
void write_pts68(const Landmarks68& landmarks, const std::string& path);

// 4-DOF map q = s * R(theta) * p + t from source to template coordinates.
struct SimilarityTransform {
    double scale = 1.0;
    double theta = 0.0;
    double tx = 0.0;
    double ty = 0.0;

    Point2 apply(Point2 p) const;
    Point2 apply_inverse(Point2 q) const;

    static SimilarityTransform identity() { return {}; }
    static SimilarityTransform rotation_about(double theta, Point2 center);
    // Maps the axis-aligned square with corner (x0, y0) and the given side
    // onto [0, out_size) x [0, out_size).
    static SimilarityTransform box_to_square(double x0, double y0, double side, int out_size);
};

// Least-squares similarity (Procrustes) minimizing sum |T(p_i) - q_i|^2.
SimilarityTransform estimate_similarity(const Landmarks68& source, const Landmarks68& target);

// Canonical mean face in pixel coordinates of an out_size x out_size image;
// eye centers land at (0.31, 0.38) and (0.69, 0.38) of the unit square.
Landmarks68 canonical_template(int out_size);

} // namespace mrecnn
