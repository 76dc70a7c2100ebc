#include "mrecnn/trainer.hpp"

#include <cmath>
#include <numeric>

#include "mrecnn/error.hpp"
#include "mrecnn/loss.hpp"
#include "mrecnn/preprocess.hpp"
#include "mrecnn/rng.hpp"

namespace mrecnn {

namespace {

void copy_into_batch(const Tensor& sample, Tensor& batch, int row) {
    const std::size_t plane = sample.numel();
    std::copy(sample.data(), sample.data() + plane, batch.data() + static_cast<std::size_t>(row) * plane);
}

ImageBuffer augment_image(const ImageBuffer& img, int margin, Rng& rng) {
    const int dx = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * margin + 1)));
    const int dy = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * margin + 1)));
    ImageBuffer out = pad_crop(img, margin, dx, dy);
    if (rng.below(2) == 1) out = hflip(out);
    return out;
}

} // namespace

TrainResult train(const TrainOptions& options, const std::vector<RegionSample>& dataset) {
    options.arch.validate();
    if (dataset.empty()) throw UsageError("training dataset is empty");
    if (options.batch_size < 1) throw UsageError("batch_size must be positive");
    if (static_cast<std::size_t>(options.batch_size) > dataset.size()) {
        throw UsageError("batch_size " + std::to_string(options.batch_size) +
                         " exceeds dataset size " + std::to_string(dataset.size()) +
                         " (drop-last batching)");
    }
    if (options.iterations < 0) throw UsageError("iterations must be nonnegative");
    const int size = options.arch.input_size;
    for (const auto& s : dataset) {
        if (s.face.width != size || s.face.height != size || s.region.width != size ||
            s.region.height != size) {
            throw UsageError("dataset images must be " + std::to_string(size) + "x" +
                             std::to_string(size) + "; resize at load time");
        }
        if (s.label < 0 || s.label >= options.arch.num_classes) {
            throw UsageError("label " + std::to_string(s.label) + " outside 0.." +
                             std::to_string(options.arch.num_classes - 1));
        }
    }

    TrainResult result{
        SubNetwork::build(options.arch, options.region, options.seed),
        OptimizerState{},
        {},
    };
    result.opt = OptimizerState::init(result.net, options.base_lr, options.momentum,
                                      options.weight_decay, options.decay_lr ? options.iterations : 0);

    Rng rng(Rng::derive(options.seed, 0x7261696e)); // batch order + augmentation stream
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size(); // forces a shuffle before the first batch

    const int n = options.batch_size;
    Tensor faces({n, 3, size, size});
    Tensor regions({n, 3, size, size});
    std::vector<int> labels(static_cast<std::size_t>(n));

    for (long long it = 0; it < options.iterations; ++it) {
        // drop-last: a fresh epoch starts whenever a full batch no longer fits
        if (cursor + static_cast<std::size_t>(n) > order.size()) {
            rng.shuffle(order);
            cursor = 0;
        }
        for (int b = 0; b < n; ++b) {
            const RegionSample& sample = dataset[order[cursor++]];
            labels[static_cast<std::size_t>(b)] = sample.label;
            if (options.augment) {
                copy_into_batch(to_tensor(augment_image(sample.face, options.augment_margin, rng),
                                          options.mean),
                                faces, b);
                copy_into_batch(to_tensor(augment_image(sample.region, options.augment_margin, rng),
                                          options.mean),
                                regions, b);
            } else {
                copy_into_batch(to_tensor(sample.face, options.mean), faces, b);
                copy_into_batch(to_tensor(sample.region, options.mean), regions, b);
            }
        }

        const double lr = result.opt.lr_at(result.opt.iteration);
        Tensor logits = result.net.forward(faces, regions, true);
        LossReport report = softmax_cross_entropy(logits, labels);
        if (!std::isfinite(report.loss)) {
            throw NumericError("non-finite training loss", it);
        }
        result.net.backward(report.logit_gradient);
        sgd_step(result.net, result.opt);
        result.trace.push_back({it, lr, report.loss, report.batch_accuracy});
    }
    return result;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
    out << "iteration,lr,loss,accuracy\n";
    out.precision(10);
    for (const auto& row : trace) {
        out << row.iteration << "," << row.lr << "," << row.loss << "," << row.accuracy << "\n";
    }
}

} // namespace mrecnn
