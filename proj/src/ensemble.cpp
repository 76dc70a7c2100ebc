#include "mrecnn/ensemble.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "mrecnn/error.hpp"

namespace mrecnn {

EnsembleWeights EnsembleWeights::preset(const std::string& name) {
    if (name == "vgg") return from_values(4.0 / 7.0, 1.0 / 7.0, 2.0 / 7.0);
    if (name == "alexnet") return from_values(2.0 / 5.0, 1.0 / 5.0, 2.0 / 5.0);
    throw UsageError("unknown weight preset \"" + name + "\" (expected vgg or alexnet)");
}

EnsembleWeights EnsembleWeights::from_values(double eye, double nose, double mouth) {
    EnsembleWeights w;
    w.alpha = {eye, nose, mouth};
    w.validate();
    return w;
}

void EnsembleWeights::validate() const {
    double sum = 0.0;
    for (double a : alpha) {
        if (a < 0.0) throw UsageError("ensemble weights must be nonnegative");
        sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw UsageError("ensemble weights must sum to 1 within 1e-9, got " + std::to_string(sum));
    }
}

namespace {

void check_distribution_rows(const Tensor& scores, const char* what) {
    if (scores.rank() != 2) {
        throw std::invalid_argument(std::string(what) + " scores must be rank 2, got " +
                                    shape_str(scores.shape()));
    }
    const int n = scores.extent(0), k = scores.extent(1);
    for (int row = 0; row < n; ++row) {
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            const float v = scores.at2(row, j);
            if (v < -1e-4f) {
                throw std::invalid_argument(std::string(what) + " row " + std::to_string(row) +
                                            " has a negative score");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-4) {
            throw std::invalid_argument(std::string(what) + " row " + std::to_string(row) +
                                        " does not sum to 1 (got " + std::to_string(sum) + ")");
        }
    }
}

// pairwise sum of column j over rows[lo, hi)
double pairwise_column_sum(const Tensor& scores, const std::vector<int>& rows, int j, std::size_t lo,
                           std::size_t hi) {
    if (hi - lo == 1) return scores.at2(rows[lo], j);
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    return pairwise_column_sum(scores, rows, j, lo, mid) + pairwise_column_sum(scores, rows, j, mid, hi);
}

} // namespace

Tensor ensemble_predict(const std::array<Tensor, 3>& scores, const EnsembleWeights& weights) {
    weights.validate();
    const int n = scores[0].extent(0);
    for (int i = 0; i < 3; ++i) {
        check_distribution_rows(scores[i], "subnet");
        if (scores[i].extent(0) != n || !scores[i].same_shape(scores[0])) {
            throw std::invalid_argument("subnet score shapes disagree: " +
                                        shape_str(scores[0].shape()) + " vs " +
                                        shape_str(scores[i].shape()));
        }
    }
    Tensor out(scores[0].shape());
    for (std::size_t i = 0; i < out.numel(); ++i) {
        const double v = weights.alpha[0] * scores[0][i] + weights.alpha[1] * scores[1][i] +
                         weights.alpha[2] * scores[2][i];
        out[i] = static_cast<float>(v);
    }
    return out;
}

int argmax_row(const Tensor& scores, int row) {
    const int k = scores.extent(1);
    int best = 0;
    for (int j = 1; j < k; ++j) {
        if (scores.at2(row, j) > scores.at2(row, best)) best = j;
    }
    return best;
}

std::vector<int> argmax_rows(const Tensor& scores) {
    std::vector<int> out;
    for (int row = 0; row < scores.extent(0); ++row) out.push_back(argmax_row(scores, row));
    return out;
}

ClipScores clip_average(const Tensor& frame_scores, const std::vector<std::string>& clip_ids) {
    if (frame_scores.rank() != 2) {
        throw std::invalid_argument("frame scores must be rank 2, got " +
                                    shape_str(frame_scores.shape()));
    }
    if (clip_ids.size() != static_cast<std::size_t>(frame_scores.extent(0))) {
        throw std::invalid_argument("clip id count != frame count");
    }
    std::vector<std::pair<std::string, std::vector<int>>> groups;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < clip_ids.size(); ++i) {
        auto [it, inserted] = index.try_emplace(clip_ids[i], groups.size());
        if (inserted) groups.push_back({clip_ids[i], {}});
        groups[it->second].second.push_back(static_cast<int>(i));
    }
    return clip_average_grouped(frame_scores, groups);
}

ClipScores clip_average_grouped(const Tensor& frame_scores,
                                const std::vector<std::pair<std::string, std::vector<int>>>& groups) {
    const int k = frame_scores.extent(1);
    ClipScores result;
    result.scores = Tensor({static_cast<int>(groups.size()), k});
    int out_row = 0;
    for (const auto& [clip_id, rows] : groups) {
        if (rows.empty()) {
            throw DataError("clip \"" + clip_id + "\" has no frames");
        }
        for (int r : rows) {
            if (r < 0 || r >= frame_scores.extent(0)) {
                throw std::invalid_argument("clip \"" + clip_id + "\" references frame " +
                                            std::to_string(r) + " outside the score matrix");
            }
        }
        for (int j = 0; j < k; ++j) {
            const double sum = pairwise_column_sum(frame_scores, rows, j, 0, rows.size());
            result.scores.at2(out_row, j) = static_cast<float>(sum / static_cast<double>(rows.size()));
        }
        result.clip_ids.push_back(clip_id);
        ++out_row;
    }
    return result;
}

ConfusionMatrix::ConfusionMatrix(int num_classes) : num_classes_(num_classes) {
    if (num_classes < 1) throw std::invalid_argument("confusion matrix needs at least one class");
    counts_.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
}

void ConfusionMatrix::add(int truth, int predicted) {
    if (truth < 0 || truth >= num_classes_ || predicted < 0 || predicted >= num_classes_) {
        throw std::invalid_argument("confusion entry (" + std::to_string(truth) + ", " +
                                    std::to_string(predicted) + ") outside 0.." +
                                    std::to_string(num_classes_ - 1));
    }
    ++counts_[static_cast<std::size_t>(truth) * num_classes_ + predicted];
}

long long ConfusionMatrix::count(int truth, int predicted) const {
    return counts_[static_cast<std::size_t>(truth) * num_classes_ + predicted];
}

long long ConfusionMatrix::row_sum(int truth) const {
    long long sum = 0;
    for (int j = 0; j < num_classes_; ++j) sum += count(truth, j);
    return sum;
}

long long ConfusionMatrix::total() const {
    long long sum = 0;
    for (long long v : counts_) sum += v;
    return sum;
}

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels,
                          int num_classes) {
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("prediction count " + std::to_string(predictions.size()) +
                                    " != label count " + std::to_string(labels.size()));
    }
    ConfusionMatrix cm(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) cm.add(labels[i], predictions[i]);
    return cm;
}

double mean_diagonal(const ConfusionMatrix& cm, std::vector<int>* skipped) {
    double sum = 0.0;
    int classes = 0;
    for (int c = 0; c < cm.num_classes(); ++c) {
        const long long row = cm.row_sum(c);
        if (row == 0) {
            if (skipped) skipped->push_back(c);
            continue;
        }
        sum += static_cast<double>(cm.count(c, c)) / static_cast<double>(row);
        ++classes;
    }
    if (classes == 0) throw DataError("confusion matrix has no samples");
    return sum / classes;
}

void write_report_csv(std::ostream& out, const ConfusionMatrix& cm) {
    out.precision(6);
    out << std::fixed;
    for (int t = 0; t < cm.num_classes(); ++t) {
        const long long row = cm.row_sum(t);
        for (int p = 0; p < cm.num_classes(); ++p) {
            if (p) out << ",";
            out << (row == 0 ? 0.0 : static_cast<double>(cm.count(t, p)) / static_cast<double>(row));
        }
        out << "\n";
    }
    out << "per_class_accuracy";
    for (int c = 0; c < cm.num_classes(); ++c) {
        const long long row = cm.row_sum(c);
        out << "," << (row == 0 ? 0.0 : static_cast<double>(cm.count(c, c)) / static_cast<double>(row));
    }
    out << "\n";
    std::vector<int> skipped;
    out << "mean_diagonal," << mean_diagonal(cm, &skipped) << "\n";
}

} // namespace mrecnn
