#pragma once

#include <string>
#include <vector>

#include "mrecnn/image.hpp"

namespace mrecnn {

// Row of the source manifest, header "image,landmarks,label,clip_id";
// clip_id stays empty for still-image datasets.
struct ManifestRow {
    std::string image;
    std::string landmarks;
    int label = 0;
    std::string clip_id;
};

// Row of a per-region pair manifest, header "face,region,label,clip_id".
struct PairRow {
    std::string face;
    std::string region;
    int label = 0;
    std::string clip_id;
};

std::vector<ManifestRow> read_dataset_manifest(const std::string& path);
std::vector<PairRow> read_pair_manifest(const std::string& path);
void write_pair_manifest(const std::vector<PairRow>& rows, const std::string& path);

// One training example: aligned whole-face and region images plus the label.
struct RegionSample {
    ImageBuffer face;
    ImageBuffer region;
    int label = 0;
    std::string clip_id;
};

// Loads every pair, resizing to input_size x input_size when needed.
std::vector<RegionSample> load_pair_dataset(const std::string& manifest_path, int input_size);

} // namespace mrecnn
