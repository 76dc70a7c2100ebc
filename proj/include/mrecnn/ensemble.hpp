#pragma once

#include <array>
#include <ostream>
#include <string>
#include <vector>

#include "mrecnn/tensor.hpp"

namespace mrecnn {

// Convex weights over the three sub-networks, (left_eye, nose, mouth) order.
struct EnsembleWeights {
    std::array<double, 3> alpha = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

    // "vgg": 4/7 eye, 1/7 nose, 2/7 mouth; "alexnet": 2/5, 1/5, 2/5.
    static EnsembleWeights preset(const std::string& name);
    static EnsembleWeights from_values(double eye, double nose, double mouth);
    void validate() const;
};

// Weighted sum of three softmax score matrices (each N x K, rows summing to
// 1 within 1e-4); rows of the result sum to 1.
Tensor ensemble_predict(const std::array<Tensor, 3>& scores, const EnsembleWeights& weights);

// Lowest class index wins ties.
int argmax_row(const Tensor& scores, int row);
std::vector<int> argmax_rows(const Tensor& scores);

// Unweighted per-clip mean of frame score rows, pairwise-summed in 64-bit.
// Clips keep their first-appearance order.
struct ClipScores {
    std::vector<std::string> clip_ids;
    Tensor scores; // num_clips x K
};
ClipScores clip_average(const Tensor& frame_scores, const std::vector<std::string>& clip_ids);
// Grouped form; a group with no frames is rejected by name.
ClipScores clip_average_grouped(const Tensor& frame_scores,
                                const std::vector<std::pair<std::string, std::vector<int>>>& groups);

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int num_classes = 7);

    void add(int truth, int predicted);
    long long count(int truth, int predicted) const;
    long long row_sum(int truth) const;
    long long total() const;
    int num_classes() const { return num_classes_; }

private:
    int num_classes_;
    std::vector<long long> counts_;
};

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels,
                          int num_classes = 7);

// Mean of per-true-class recalls. Classes with no samples are skipped (and
// reported through `skipped` when given); an all-empty matrix is rejected.
double mean_diagonal(const ConfusionMatrix& cm, std::vector<int>* skipped = nullptr);

// Report block: row-normalized matrix, per-class accuracy line, then
// "mean_diagonal,<value>".
void write_report_csv(std::ostream& out, const ConfusionMatrix& cm);

} // namespace mrecnn
