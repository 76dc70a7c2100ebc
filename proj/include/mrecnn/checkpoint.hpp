#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include "mrecnn/network.hpp"
#include "mrecnn/optimizer.hpp"

namespace mrecnn {

// Binary checkpoint, little-endian throughout:
//   magic "MRE1", version u32,
//   arch fields (family, input_size, channel_scale, fc_widths, num_classes, region),
//   optimizer fields (base_lr, momentum, weight_decay, total_iterations, iteration),
//   buffer count, then per buffer: name length, name bytes, rank, extents,
//   raw 32-bit reals. Parameters come first in network order, then the
//   velocity buffers under "<name>#v".
// The roundtrip is bitwise lossless.

enum class CheckpointFault { io, bad_magic, bad_version, truncated, shape_mismatch };

class CheckpointError : public std::runtime_error {
public:
    CheckpointError(CheckpointFault fault, const std::string& msg)
        : std::runtime_error(msg), fault_(fault) {}
    CheckpointFault fault() const { return fault_; }

private:
    CheckpointFault fault_;
};

void save_checkpoint(const SubNetwork& net, const OptimizerState& opt, const std::string& path);
std::pair<SubNetwork, OptimizerState> load_checkpoint(const std::string& path);

} // namespace mrecnn
