#include "mapflow/metrics.hpp"

#include "mapflow/tensor_ops.hpp"

#include <stdexcept>

namespace mapflow {

MetricsReport evaluate(const LabelMap& pred, const LabelMap& truth, int classes) {
    if (pred.height != truth.height || pred.width != truth.width)
        throw std::invalid_argument("evaluate: label map shapes differ");
    if (classes < 1) throw std::invalid_argument("evaluate: classes must be >= 1");

    MetricsReport r;
    r.classes = classes;
    r.confusion.assign(static_cast<std::size_t>(classes) * classes, 0);
    for (std::int64_t i = 0; i < truth.pixels(); ++i) {
        const int t = truth.labels[static_cast<std::size_t>(i)];
        const int p = pred.labels[static_cast<std::size_t>(i)];
        if (t >= classes || p >= classes)
            throw std::invalid_argument("evaluate: label out of range");
        ++r.confusion[static_cast<std::size_t>(t) * classes + p];
    }

    std::int64_t correct = 0;
    for (int c = 0; c < classes; ++c) correct += r.at(c, c);
    r.overall_accuracy = static_cast<double>(correct) / static_cast<double>(truth.pixels());

    r.iou_per_class.resize(static_cast<std::size_t>(classes));
    double iou_sum = 0.0;
    for (int c = 0; c < classes; ++c) {
        const std::int64_t tp = r.at(c, c);
        std::int64_t fp = 0, fn = 0;
        for (int o = 0; o < classes; ++o) {
            if (o == c) continue;
            fp += r.at(o, c);
            fn += r.at(c, o);
        }
        const std::int64_t denom = tp + fp + fn;
        const double iou = denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom);
        r.iou_per_class[static_cast<std::size_t>(c)] = iou;
        iou_sum += iou;
    }
    r.mean_iou = iou_sum / classes;
    return r;
}

std::vector<MetricsReport> evaluate_trajectory(const std::vector<ScoreStack>& trajectory,
                                               const LabelMap& truth) {
    if (trajectory.empty()) throw std::invalid_argument("evaluate_trajectory: empty trajectory");
    std::vector<MetricsReport> reports;
    reports.reserve(trajectory.size());
    for (const ScoreStack& s : trajectory)
        reports.push_back(evaluate(argmax_labels(s.scores), truth, s.classes()));
    return reports;
}

} // namespace mapflow
