#pragma once

#include "mapflow/tensor.hpp"

#include <cstdint>
#include <vector>

namespace mapflow {

// Confusion matrix (rows = truth, cols = prediction), overall accuracy and
// per-class / mean intersection-over-union. Mean IoU includes every class;
// classes absent from both maps count as IoU 1.
struct MetricsReport {
    int classes = 0;
    std::vector<std::int64_t> confusion; // classes x classes, row-major
    double overall_accuracy = 0.0;
    std::vector<double> iou_per_class;
    double mean_iou = 0.0;

    std::int64_t at(int truth, int pred) const {
        return confusion[static_cast<std::size_t>(truth) * classes + pred];
    }
};

MetricsReport evaluate(const LabelMap& pred, const LabelMap& truth, int classes);

// Argmax of every stack (index 0 is the coarse input), then evaluate.
std::vector<MetricsReport> evaluate_trajectory(const std::vector<ScoreStack>& trajectory,
                                               const LabelMap& truth);

} // namespace mapflow
