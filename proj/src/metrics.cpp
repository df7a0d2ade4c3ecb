#include "wsseg/metrics.hpp"

#include <algorithm>

namespace wsseg {

namespace {

void check_pair(const LabelMap& p, const LabelMap& g, int class_count) {
  if (p.h != g.h || p.w != g.w) throw DimensionError("metrics: pred/gt dims disagree");
  for (int lab : p.label)
    if (lab < 0 || lab > class_count) throw DimensionError("metrics: prediction label out of range");
  for (int lab : g.label)
    if (lab < 0 || lab > class_count) throw DimensionError("metrics: ground-truth label out of range");
}

std::vector<uint8_t> boundary_pixels(const LabelMap& gt) {
  std::vector<uint8_t> b(gt.size(), 0);
  for (int y = 0; y < gt.h; ++y)
    for (int x = 0; x < gt.w; ++x) {
      const int l = gt.at(y, x);
      if ((y > 0 && gt.at(y - 1, x) != l) || (y + 1 < gt.h && gt.at(y + 1, x) != l) ||
          (x > 0 && gt.at(y, x - 1) != l) || (x + 1 < gt.w && gt.at(y, x + 1) != l))
        b[static_cast<size_t>(y) * gt.w + x] = 1;
    }
  return b;
}

}  // namespace

IoUReport iou(const std::vector<LabelMap>& pred, const std::vector<LabelMap>& gt,
              int class_count) {
  if (pred.size() != gt.size()) throw DimensionError("iou: dataset sizes disagree");
  if (pred.empty()) throw DimensionError("iou: empty dataset");
  if (class_count < 0) throw DimensionError("iou: negative class count");
  const int L = class_count + 1;
  std::vector<int64_t> inter(L, 0), uni(L, 0);
  for (size_t s = 0; s < pred.size(); ++s) {
    check_pair(pred[s], gt[s], class_count);
    for (int i = 0; i < pred[s].size(); ++i) {
      const int pl = pred[s].label[i], gl = gt[s].label[i];
      if (pl == gl) {
        ++inter[pl];
        ++uni[pl];
      } else {
        ++uni[pl];
        ++uni[gl];
      }
    }
  }
  IoUReport rep;
  rep.per_class.resize(L);
  double sum = 0.0;
  for (int l = 0; l < L; ++l) {
    if (uni[l] == 0) continue;
    const double v = static_cast<double>(inter[l]) / static_cast<double>(uni[l]);
    rep.per_class[l] = v;
    sum += v;
    ++rep.evaluated;
  }
  rep.mean_iou = rep.evaluated > 0 ? sum / rep.evaluated : 0.0;
  return rep;
}

TrimapCounts trimap_counts(const LabelMap& pred, const LabelMap& gt, int band_px) {
  if (band_px < 1) throw DimensionError("trimap: band must be >= 1");
  if (pred.h != gt.h || pred.w != gt.w) throw DimensionError("trimap: pred/gt dims disagree");
  const std::vector<uint8_t> boundary = boundary_pixels(gt);
  const int d = band_px - 1;  // strict band: Chebyshev distance < band_px
  TrimapCounts c;
  for (int y = 0; y < gt.h; ++y)
    for (int x = 0; x < gt.w; ++x) {
      bool in_band = false;
      for (int dy = -d; dy <= d && !in_band; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= gt.h) continue;
        for (int dx = -d; dx <= d; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= gt.w) continue;
          if (boundary[static_cast<size_t>(yy) * gt.w + xx]) {
            in_band = true;
            break;
          }
        }
      }
      if (!in_band) continue;
      ++c.total;
      if (pred.at(y, x) == gt.at(y, x)) ++c.correct;
    }
  return c;
}

std::optional<double> trimap_accuracy(const LabelMap& pred, const LabelMap& gt, int band_px) {
  const TrimapCounts c = trimap_counts(pred, gt, band_px);
  if (c.total == 0) return std::nullopt;
  return static_cast<double>(c.correct) / static_cast<double>(c.total);
}

ConfusionMatrix confusion(const std::vector<LabelMap>& pred, const std::vector<LabelMap>& gt,
                          int class_count) {
  if (pred.size() != gt.size()) throw DimensionError("confusion: dataset sizes disagree");
  ConfusionMatrix m;
  m.labels = class_count + 1;
  m.count.assign(static_cast<size_t>(m.labels) * m.labels, 0);
  for (size_t s = 0; s < pred.size(); ++s) {
    check_pair(pred[s], gt[s], class_count);
    for (int i = 0; i < pred[s].size(); ++i)
      ++m.count[static_cast<size_t>(gt[s].label[i]) * m.labels + pred[s].label[i]];
  }
  return m;
}

}  // namespace wsseg
