#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrecnn/align.hpp"
#include "mrecnn/image.hpp"
#include "mrecnn/rng.hpp"

namespace mrecnn {

// Landmark-defined crop: bounding box of the listed template points,
// expanded by the margin factor and squared about its center.
struct RegionDef {
    std::string name;
    std::vector<int> indices;
    double margin = 0.0;
};

// Shipped definitions for whole_face, left_eye, nose, mouth.
RegionDef region_def(const std::string& name);
const std::vector<std::string>& region_names(); // crop order used by the pipeline

struct SquareBox {
    double cx = 0.0;
    double cy = 0.0;
    double half = 0.0; // half side
};
SquareBox region_box(const RegionDef& def, const Landmarks68& tmpl);

// Inverse-mapped bilinear resampling; out-of-bounds source reads clamp to
// the edge.
ImageBuffer warp_resize(const ImageBuffer& img, const SimilarityTransform& t, int out_size);

// Plain anisotropic bilinear resize (not a similarity); used when loading
// images whose extents differ from the configured input size.
ImageBuffer bilinear_resize(const ImageBuffer& img, int out_w, int out_h);

ImageBuffer crop_region(const ImageBuffer& aligned, const RegionDef& def, const Landmarks68& tmpl,
                        int out_size);

ImageBuffer hflip(const ImageBuffer& img);
ImageBuffer rotate_about_center(const ImageBuffer& img, double degrees);
// Gaussian noise on [0,1]-scaled intensities, clamped and re-quantized.
ImageBuffer add_gaussian_noise(const ImageBuffer& img, double variance, Rng& rng);

// The fifteen offline variants: hflip; +-4 and +-6 degree rotations of the
// original and of the hflip; noise at variances 0.001/0.01/0.015 on the
// original and on the hflip. Only the noise draws consume the seed.
std::vector<ImageBuffer> offline_augment(const ImageBuffer& img, std::uint64_t seed);

// Replicated-edge padding followed by a crop back to the original extents at
// offset (dx, dy) in [0, 2*margin]; the on-the-fly crop augmentation.
ImageBuffer pad_crop(const ImageBuffer& img, int margin, int dx, int dy);

} // namespace mrecnn
