#include "mrecnn/network.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mrecnn/rng.hpp"

namespace mrecnn {

const char* to_string(ArchFamily family) {
    return family == ArchFamily::vgg16 ? "vgg16" : "alexnet";
}

const char* to_string(Region region) {
    switch (region) {
    case Region::left_eye: return "left_eye";
    case Region::nose: return "nose";
    case Region::mouth: return "mouth";
    case Region::whole_face: return "whole_face";
    }
    return "?";
}

ArchFamily arch_family_from_string(const std::string& s) {
    if (s == "vgg16") return ArchFamily::vgg16;
    if (s == "alexnet") return ArchFamily::alexnet;
    throw std::invalid_argument("unknown arch family \"" + s + "\" (expected vgg16 or alexnet)");
}

Region region_from_string(const std::string& s) {
    if (s == "left_eye") return Region::left_eye;
    if (s == "nose") return Region::nose;
    if (s == "mouth") return Region::mouth;
    if (s == "whole_face") return Region::whole_face;
    throw std::invalid_argument("unknown region \"" + s + "\"");
}

void ArchSpec::validate() const {
    const int divisor = 1 << pool_stages();
    if (input_size < 1 || input_size % divisor != 0) {
        throw std::invalid_argument("input_size " + std::to_string(input_size) + " for " +
                                    to_string(family) + " must be a positive multiple of " +
                                    std::to_string(divisor));
    }
    if (!(channel_scale > 0.0 && channel_scale <= 1.0)) {
        throw std::invalid_argument("channel_scale must be in (0, 1], got " +
                                    std::to_string(channel_scale));
    }
    for (int w : fc_widths) {
        if (w < 1) throw std::invalid_argument("fc widths must be positive");
    }
    if (num_classes < 1) throw std::invalid_argument("num_classes must be positive");
}

int scaled_channels(int base, double scale) {
    const int c = static_cast<int>(std::ceil(static_cast<double>(base) * scale));
    return c < 1 ? 1 : c;
}

std::vector<ConvStage> branch_plan(const ArchSpec& spec) {
    spec.validate();
    std::vector<ConvStage> plan;
    int in_ch = 3;
    if (spec.family == ArchFamily::vgg16) {
        // the standard 16-layer plan: 13 convs in 5 stages, pool after each stage
        const int stage_channels[5] = {64, 128, 256, 512, 512};
        const int stage_layers[5] = {2, 2, 3, 3, 3};
        for (int s = 0; s < 5; ++s) {
            const int out_ch = scaled_channels(stage_channels[s], spec.channel_scale);
            for (int l = 0; l < stage_layers[s]; ++l) {
                ConvStage st;
                st.name = "conv" + std::to_string(s + 1) + "_" + std::to_string(l + 1);
                st.in_channels = in_ch;
                st.out_channels = out_ch;
                st.pool_after = (l == stage_layers[s] - 1);
                if (st.pool_after) st.pool_name = "pool" + std::to_string(s + 1);
                plan.push_back(st);
                in_ch = out_ch;
            }
        }
    } else {
        // 5 convs, pools after conv1, conv2 and conv5; all 3x3 stride-1 pad-1
        const int channels[5] = {96, 256, 384, 384, 256};
        const bool pooled[5] = {true, true, false, false, true};
        int pool_idx = 0;
        for (int l = 0; l < 5; ++l) {
            ConvStage st;
            st.name = "conv" + std::to_string(l + 1);
            st.in_channels = in_ch;
            st.out_channels = scaled_channels(channels[l], spec.channel_scale);
            st.pool_after = pooled[l];
            if (st.pool_after) st.pool_name = "pool" + std::to_string(++pool_idx);
            plan.push_back(st);
            in_ch = st.out_channels;
        }
    }
    return plan;
}

int fused_feature_width(const ArchSpec& spec) {
    const auto plan = branch_plan(spec);
    const int extent = spec.input_size >> spec.pool_stages();
    return 2 * plan.back().out_channels * extent * extent;
}

long long parameter_count(const ArchSpec& spec) {
    const auto plan = branch_plan(spec);
    long long count = 0;
    for (const auto& st : plan) {
        count += 2LL * (static_cast<long long>(st.out_channels) * st.in_channels * st.kernel * st.kernel +
                        st.out_channels);
    }
    long long prev = fused_feature_width(spec);
    for (int w : spec.fc_widths) {
        count += prev * w + w;
        prev = w;
    }
    count += prev * spec.num_classes + spec.num_classes;
    return count;
}

namespace {

const char* branch_prefix(int branch) { return branch == 0 ? "face" : "region"; }

void xavier_fill(Tensor& t, int fan_in, int fan_out, Rng& rng) {
    const double half = std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
    for (std::size_t i = 0; i < t.numel(); ++i) {
        t[i] = static_cast<float>((2.0 * rng.next_double() - 1.0) * half);
    }
}

} // namespace

SubNetwork SubNetwork::build(const ArchSpec& spec, Region region, std::uint64_t seed) {
    spec.validate();
    if (region == Region::whole_face) {
        throw std::invalid_argument("sub-networks pair the whole face with one of left_eye, nose, mouth");
    }

    SubNetwork net;
    net.spec_ = spec;
    net.region_ = region;
    net.plan_ = branch_plan(spec);

    for (int branch = 0; branch < 2; ++branch) {
        for (const auto& st : net.plan_) {
            const std::string base = std::string(branch_prefix(branch)) + "/" + st.name;
            ParamBuffer w;
            w.name = base + ".w";
            w.value = Tensor({st.out_channels, st.in_channels, st.kernel, st.kernel});
            w.grad = Tensor(w.value.shape());
            net.buffers_.push_back(std::move(w));
            ParamBuffer b;
            b.name = base + ".b";
            b.value = Tensor({st.out_channels});
            b.grad = Tensor({st.out_channels});
            net.buffers_.push_back(std::move(b));
        }
    }

    int prev = fused_feature_width(spec);
    std::vector<int> head = spec.fc_widths;
    head.push_back(spec.num_classes);
    for (std::size_t j = 0; j < head.size(); ++j) {
        const std::string base = "fc" + std::to_string(j + 1);
        ParamBuffer w;
        w.name = base + ".w";
        w.value = Tensor({prev, head[j]});
        w.grad = Tensor(w.value.shape());
        net.buffers_.push_back(std::move(w));
        ParamBuffer b;
        b.name = base + ".b";
        b.value = Tensor({head[j]});
        b.grad = Tensor({head[j]});
        net.buffers_.push_back(std::move(b));
        prev = head[j];
    }

    // weights from a seeded uniform with half-width sqrt(6/(fan_in+fan_out)),
    // biases stay zero; drawn serially in buffer order so (spec, region, seed)
    // fully determines the parameters
    Rng rng(seed);
    for (auto& buf : net.buffers_) {
        if (buf.name.ends_with(".b")) continue;
        int fan_in = 0, fan_out = 0;
        if (buf.value.rank() == 4) {
            fan_in = buf.value.extent(1) * buf.value.extent(2) * buf.value.extent(3);
            fan_out = buf.value.extent(0) * buf.value.extent(2) * buf.value.extent(3);
        } else {
            fan_in = buf.value.extent(0);
            fan_out = buf.value.extent(1);
        }
        xavier_fill(buf.value, fan_in, fan_out, rng);
    }
    return net;
}

std::size_t SubNetwork::branch_buffer_base(int branch) const {
    return branch == 0 ? 0 : 2 * plan_.size();
}

std::size_t SubNetwork::fc_buffer_base() const { return 4 * plan_.size(); }

ConvParams SubNetwork::stage_params(int branch, int stage) const {
    const std::size_t base = branch_buffer_base(branch) + 2 * static_cast<std::size_t>(stage);
    ConvParams p;
    p.weights = buffers_[base].value;
    p.bias = buffers_[base + 1].value;
    p.stride = plan_[stage].stride;
    p.pad = plan_[stage].pad;
    return p;
}

Tensor SubNetwork::run_branch(int branch, const Tensor& input, bool train_mode, BranchCache* cache,
                              Probe* probe) const {
    Tensor x = input;
    for (std::size_t i = 0; i < plan_.size(); ++i) {
        const auto& st = plan_[i];
        if (train_mode && cache) cache->conv_inputs.push_back(x);
        Tensor y = conv2d_forward(x, stage_params(branch, static_cast<int>(i)));
        if (train_mode && cache) cache->relu_inputs.push_back(y);
        x = relu(y);
        if (probe && probe->name == std::string(branch_prefix(branch)) + "/" + st.name) {
            probe->result = x;
            probe->found = true;
        }
        if (st.pool_after) {
            PoolResult res = maxpool2x2_forward(x);
            if (train_mode && cache) cache->pools.push_back(std::move(res.indices));
            x = std::move(res.output);
            if (probe && probe->name == std::string(branch_prefix(branch)) + "/" + st.pool_name) {
                probe->result = x;
                probe->found = true;
            }
        }
    }
    return x;
}

Tensor SubNetwork::forward(const Tensor& face, const Tensor& region_img, bool train_mode) {
    auto check_input = [&](const Tensor& t, const char* what) {
        if (t.rank() != 4) {
            throw std::invalid_argument(std::string(what) + " input must be rank 4, got " +
                                        shape_str(t.shape()));
        }
        if (t.extent(1) != 3) {
            throw std::invalid_argument(std::string(what) + " input must have 3 channels, got " +
                                        shape_str(t.shape()));
        }
        if (t.extent(2) != spec_.input_size || t.extent(3) != spec_.input_size) {
            throw std::invalid_argument(std::string(what) + " input spatial extents " +
                                        shape_str(t.shape()) + " != configured input_size " +
                                        std::to_string(spec_.input_size));
        }
    };
    check_input(face, "face");
    check_input(region_img, "region");
    if (face.extent(0) != region_img.extent(0)) {
        throw std::invalid_argument("batch sizes disagree: face " + shape_str(face.shape()) +
                                    " vs region " + shape_str(region_img.shape()));
    }

    cache_ = Cache{};
    Tensor fx = run_branch(0, face, train_mode, &cache_.face, nullptr);
    Tensor rx = run_branch(1, region_img, train_mode, &cache_.region, nullptr);
    Tensor fused = concat_channels(fx, rx);
    if (train_mode) cache_.fused_shape = fused.shape();

    const int n = fused.extent(0);
    const int width = fused.extent(1) * fused.extent(2) * fused.extent(3);
    Tensor x = reshaped(std::move(fused), {n, width});

    const std::size_t fc_count = spec_.fc_widths.size() + 1;
    for (std::size_t j = 0; j < fc_count; ++j) {
        const std::size_t base = fc_buffer_base() + 2 * j;
        if (train_mode) cache_.fc_inputs.push_back(x);
        Tensor y = linear_forward(x, buffers_[base].value, buffers_[base + 1].value);
        if (j + 1 < fc_count) {
            if (train_mode) cache_.fc_relu_inputs.push_back(y);
            x = relu(y);
        } else {
            x = std::move(y);
        }
    }
    cache_.valid = train_mode;
    return x;
}

void SubNetwork::backward(const Tensor& logit_grads) {
    if (!cache_.valid) {
        throw std::logic_error("backward requires a preceding forward with train_mode set");
    }
    const int n = cache_.fc_inputs.front().extent(0);
    if (logit_grads.shape() != std::vector<int>({n, spec_.num_classes})) {
        throw std::invalid_argument("logit_grads shape " + shape_str(logit_grads.shape()) +
                                    " != expected " + shape_str({n, spec_.num_classes}));
    }

    Tensor g = logit_grads;
    const std::size_t fc_count = spec_.fc_widths.size() + 1;
    for (std::size_t jj = fc_count; jj-- > 0;) {
        if (jj + 1 < fc_count) g = relu_backward(cache_.fc_relu_inputs[jj], g);
        const std::size_t base = fc_buffer_base() + 2 * jj;
        LinearGrads lg = linear_backward(cache_.fc_inputs[jj], buffers_[base].value, g);
        buffers_[base].grad = std::move(lg.weights);
        buffers_[base + 1].grad = std::move(lg.bias);
        g = std::move(lg.input);
    }

    Tensor g4 = reshaped(std::move(g), cache_.fused_shape);
    const int branch_channels = plan_.back().out_channels;
    auto [gface, gregion] = concat_channels_backward(g4, branch_channels, branch_channels);
    backward_branch(0, cache_.face, std::move(gface));
    backward_branch(1, cache_.region, std::move(gregion));

    cache_ = Cache{}; // activation cache is consumed
    grads_ready_ = true;
}

void SubNetwork::backward_branch(int branch, const BranchCache& cache, Tensor grad) {
    std::size_t pool_i = cache.pools.size();
    for (std::size_t i = plan_.size(); i-- > 0;) {
        if (plan_[i].pool_after) {
            grad = maxpool2x2_backward(cache.pools[--pool_i], grad);
        }
        grad = relu_backward(cache.relu_inputs[i], grad);
        ConvGrads cg = conv2d_backward(cache.conv_inputs[i], stage_params(branch, static_cast<int>(i)), grad);
        const std::size_t base = branch_buffer_base(branch) + 2 * i;
        buffers_[base].grad = std::move(cg.weights);
        buffers_[base + 1].grad = std::move(cg.bias);
        grad = std::move(cg.input);
    }
}

void SubNetwork::zero_grads() {
    for (auto& buf : buffers_) buf.grad.fill(0.0f);
}

int SubNetwork::conv_layers_per_branch() const { return static_cast<int>(plan_.size()); }

int SubNetwork::pool_layers_per_branch() const {
    int pools = 0;
    for (const auto& st : plan_) {
        if (st.pool_after) ++pools;
    }
    return pools;
}

std::vector<std::string> SubNetwork::activation_names() const {
    std::vector<std::string> names;
    for (int branch = 0; branch < 2; ++branch) {
        for (const auto& st : plan_) {
            names.push_back(std::string(branch_prefix(branch)) + "/" + st.name);
            if (st.pool_after) names.push_back(std::string(branch_prefix(branch)) + "/" + st.pool_name);
        }
    }
    return names;
}

Tensor SubNetwork::activation(const std::string& name, const Tensor& face, const Tensor& region_img) {
    Probe probe;
    probe.name = name;
    run_branch(0, face, false, nullptr, &probe);
    if (!probe.found) run_branch(1, region_img, false, nullptr, &probe);
    if (!probe.found) {
        std::ostringstream msg;
        msg << "unknown layer \"" << name << "\"; valid names:";
        for (const auto& n : activation_names()) msg << " " << n;
        throw std::invalid_argument(msg.str());
    }
    return probe.result;
}

} // namespace mrecnn
