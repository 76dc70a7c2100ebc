#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mrecnn/kernels.hpp"
#include "mrecnn/tensor.hpp"

namespace mrecnn {

enum class ArchFamily { vgg16, alexnet };
enum class Region { left_eye, nose, mouth, whole_face };

const char* to_string(ArchFamily family);
const char* to_string(Region region);
ArchFamily arch_family_from_string(const std::string& s);
Region region_from_string(const std::string& s);

struct ArchSpec {
    ArchFamily family = ArchFamily::vgg16;
    int input_size = 224;
    double channel_scale = 1.0;
    std::vector<int> fc_widths = {256};
    int num_classes = 7;

    int pool_stages() const { return family == ArchFamily::vgg16 ? 5 : 3; }
    void validate() const;

    bool operator==(const ArchSpec&) const = default;
};

// One conv layer of a branch, with the pool that optionally follows it.
struct ConvStage {
    std::string name;
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    int stride = 1;
    int pad = 1;
    bool pool_after = false;
    std::string pool_name;
};

int scaled_channels(int base, double scale);
std::vector<ConvStage> branch_plan(const ArchSpec& spec);

// Width of the flattened classifier input: both branches' final channels
// times the pooled spatial extent squared.
int fused_feature_width(const ArchSpec& spec);

// Exact scalar parameter count an ArchSpec implies; pure arithmetic.
long long parameter_count(const ArchSpec& spec);

struct ParamBuffer {
    std::string name;
    Tensor value;
    Tensor grad;
};

// Dual-branch sub-network: a whole-face conv stack and a region conv stack
// with independent parameters, fused by channel concatenation after the last
// pool, then a fully connected classifier ending in num_classes logits.
class SubNetwork {
public:
    static SubNetwork build(const ArchSpec& spec, Region region, std::uint64_t seed);

    Tensor forward(const Tensor& face, const Tensor& region_img, bool train_mode);
    void backward(const Tensor& logit_grads);

    const ArchSpec& spec() const { return spec_; }
    Region region() const { return region_; }

    std::vector<ParamBuffer>& buffers() { return buffers_; }
    const std::vector<ParamBuffer>& buffers() const { return buffers_; }
    void zero_grads();

    bool grads_ready() const { return grads_ready_; }
    void consume_grads() { grads_ready_ = false; }

    // per-branch structural counts, derived by walking the plan
    int conv_layers_per_branch() const;
    int pool_layers_per_branch() const;

    // conv/pool activations addressable by name, e.g. "face/conv1_1"
    std::vector<std::string> activation_names() const;
    Tensor activation(const std::string& name, const Tensor& face, const Tensor& region_img);

private:
    SubNetwork() = default;

    struct BranchCache {
        std::vector<Tensor> conv_inputs;
        std::vector<Tensor> relu_inputs;
        std::vector<PoolIndexMap> pools;
    };
    struct Cache {
        BranchCache face;
        BranchCache region;
        std::vector<int> fused_shape;
        std::vector<Tensor> fc_inputs;
        std::vector<Tensor> fc_relu_inputs;
        bool valid = false;
    };

    struct Probe {
        std::string name;
        Tensor result;
        bool found = false;
    };

    ConvParams stage_params(int branch, int stage) const;
    Tensor run_branch(int branch, const Tensor& input, bool train_mode, BranchCache* cache,
                      Probe* probe) const;
    void backward_branch(int branch, const BranchCache& cache, Tensor grad);

    std::size_t branch_buffer_base(int branch) const;
    std::size_t fc_buffer_base() const;

    ArchSpec spec_;
    Region region_ = Region::left_eye;
    std::vector<ConvStage> plan_;
    std::vector<ParamBuffer> buffers_;
    Cache cache_;
    bool grads_ready_ = false;
};

} // namespace mrecnn
