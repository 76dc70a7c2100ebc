#include "mrecnn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mrecnn {

LossReport softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) {
        throw std::invalid_argument("loss expects rank-2 logits, got " + shape_str(logits.shape()));
    }
    const int n = logits.extent(0);
    const int k = logits.extent(1);
    if (n < 1) throw std::invalid_argument("loss needs at least one sample");
    if (static_cast<int>(labels.size()) != n) {
        throw std::invalid_argument("label count " + std::to_string(labels.size()) +
                                    " != batch size " + std::to_string(n));
    }
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= k) {
            throw std::invalid_argument("label " + std::to_string(labels[i]) + " at sample " +
                                        std::to_string(i) + " is outside 0.." + std::to_string(k - 1));
        }
    }

    LossReport report;
    report.logit_gradient = Tensor({n, k});
    double loss_sum = 0.0;
    int correct = 0;
    for (int row = 0; row < n; ++row) {
        const float* z = logits.data() + static_cast<std::size_t>(row) * k;
        float m = z[0];
        int arg = 0;
        for (int j = 1; j < k; ++j) {
            if (z[j] > m) {
                m = z[j];
                arg = j;
            }
        }
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += std::exp(static_cast<double>(z[j]) - m);
        const double lse = static_cast<double>(m) + std::log(sum);
        loss_sum += lse - z[labels[row]];
        if (arg == labels[row]) ++correct;

        float* g = report.logit_gradient.data() + static_cast<std::size_t>(row) * k;
        for (int j = 0; j < k; ++j) {
            const double p = std::exp(static_cast<double>(z[j]) - m) / sum;
            g[j] = static_cast<float>((p - (j == labels[row] ? 1.0 : 0.0)) / n);
        }
    }
    report.loss = loss_sum / n;
    report.batch_accuracy = static_cast<double>(correct) / n;
    return report;
}

} // namespace mrecnn
