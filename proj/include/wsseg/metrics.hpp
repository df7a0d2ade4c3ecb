#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wsseg/crf.hpp"

namespace wsseg {

struct IoUReport {
  // Entry per label 0..class_count; empty when the label never occurs in
  // either prediction or ground truth (excluded from the mean).
  std::vector<std::optional<double>> per_class;
  double mean_iou = 0.0;
  int evaluated = 0;  // labels that entered the mean
};

// Intersection-over-union accumulated over the whole dataset.
IoUReport iou(const std::vector<LabelMap>& pred, const std::vector<LabelMap>& gt,
              int class_count);

// Accuracy restricted to the band of pixels strictly within band_px
// (Chebyshev) of a ground-truth boundary pixel; band_px = 1 keeps exactly
// the boundary pixels (those with a 4-neighbor of a different label).
// Returns counts so callers can aggregate across images.
struct TrimapCounts {
  int64_t correct = 0;
  int64_t total = 0;
};
TrimapCounts trimap_counts(const LabelMap& pred, const LabelMap& gt, int band_px);

// Per-pair accuracy; empty when the ground truth has no boundary.
std::optional<double> trimap_accuracy(const LabelMap& pred, const LabelMap& gt, int band_px);

struct ConfusionMatrix {
  int labels = 0;
  std::vector<int64_t> count;  // rows = ground truth, cols = prediction
  int64_t at(int gt, int pred) const { return count[static_cast<size_t>(gt) * labels + pred]; }
};

ConfusionMatrix confusion(const std::vector<LabelMap>& pred, const std::vector<LabelMap>& gt,
                          int class_count);

}  // namespace wsseg
