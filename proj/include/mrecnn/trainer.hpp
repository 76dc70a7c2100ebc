#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <vector>

#include "mrecnn/dataset.hpp"
#include "mrecnn/network.hpp"
#include "mrecnn/optimizer.hpp"

namespace mrecnn {

struct TrainOptions {
    ArchSpec arch;
    Region region = Region::left_eye;
    double base_lr = 0.001;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int batch_size = 16;
    long long iterations = 100;
    bool decay_lr = true; // linear decay to 0 over `iterations`
    bool augment = false; // on-the-fly pad-crop plus horizontal flip
    int augment_margin = 4;
    std::array<float, 3> mean = {0.0f, 0.0f, 0.0f};
    std::uint64_t seed = 0;
};

struct TraceRow {
    long long iteration = 0;
    double lr = 0.0;
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    SubNetwork net;
    OptimizerState opt;
    std::vector<TraceRow> trace;
};

// Mini-batch SGD over a seeded shuffle with drop-last batching. Fully
// deterministic given (dataset, options); throws NumericError if the loss
// goes non-finite.
TrainResult train(const TrainOptions& options, const std::vector<RegionSample>& dataset);

// CSV lines "iteration,lr,loss,accuracy" with a header.
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

} // namespace mrecnn
