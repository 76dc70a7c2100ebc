#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mrecnn/network.hpp"
#include "mrecnn/trainer.hpp"

namespace mrecnn {

// Run configuration, loadable from JSON; unknown keys are rejected so typos
// fail loudly. Command-line flags override individual fields.
struct RunConfig {
    std::string arch = "alexnet";
    int input_size = 32;
    double channel_scale = 0.125;
    std::vector<int> fc_widths = {64};
    int num_classes = 7;
    std::string region = "left_eye";
    double base_lr = 0.001;
    long long iterations = 100;
    int batch_size = 16;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    bool decay_lr = true;
    bool augment = false;
    int augment_margin = 4;
    std::uint64_t seed = 0;
    std::array<float, 3> dataset_mean = {0.0f, 0.0f, 0.0f};
    std::string manifest;
    std::string out_dir;

    static RunConfig from_json_file(const std::string& path);
    static RunConfig from_json_text(const std::string& text, const std::string& origin);
    std::string to_json_text() const;

    ArchSpec arch_spec() const;
    TrainOptions train_options() const;
};

} // namespace mrecnn
