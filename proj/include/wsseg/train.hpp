#pragma once

#include <vector>

#include "wsseg/synth.hpp"

namespace wsseg {

// Linear per-pixel head: scores[k] = w[k] . features + b[k].
struct HeadParams {
  int labels = 0;
  int feats = 0;
  std::vector<double> w;  // labels x feats
  std::vector<double> b;  // labels

  HeadParams() = default;
  HeadParams(int labels_, int feats_) : labels(labels_), feats(feats_) {
    if (labels_ <= 0 || feats_ <= 0) throw DimensionError("HeadParams: dims must be positive");
    w.assign(static_cast<size_t>(labels_) * feats_, 0.0);
    b.assign(labels_, 0.0);
  }
  double& wat(int l, int f) { return w[static_cast<size_t>(l) * feats + f]; }
  double wat(int l, int f) const { return w[static_cast<size_t>(l) * feats + f]; }
};

struct TrainConfig {
  LossVariant variant = LossVariant::weak;
  int epochs = 20;
  double lr = 0.05;
  double momentum = 0.9;
  double decay = 0.0005;
  // Step schedule: full rate for the first two thirds of the epochs, then
  // one tenth of it, mirroring the usual two-stage fine-tuning recipe.
  double lr_drop = 0.1;
  uint64_t seed = 0;  // drives the per-epoch sample order only
  double r = kDefaultLseSharpness;

  // Mask-generation pipeline (fgbg / multiclass variants).
  double alpha = 0.5;
  double rho = 0.2;
  PairwiseParams crf;
  int crf_iters = 10;
  bool higher_order = false;
  int region_cell = 12;
  double theta_max = kDefaultThetaMax;
};

Grid3 predict(const HeadParams& p, const Grid3& features);

// Frozen supervision for one scene. weak: nothing. fgbg: the fused prior
// through the CRF, thresholded to a foreground mask. multiclass: fused prior
// combined with the class maps, through the CRF, split into per-label masks.
// A present label whose CRF mask comes out empty falls back to its top-1%
// probability pixels (a note goes to stderr).
MaskSet generate_masks(const SynthScene& scene, const TrainConfig& cfg);

// One momentum-SGD step over all parameters:
//   v <- momentum * v - lr * (grad + decay * p);  p <- p + v
void sgd_update(HeadParams& p, HeadParams& vel, const HeadParams& grad, double lr, double momentum,
                double decay);

struct TrainResult {
  HeadParams params;
  std::vector<double> epoch_loss;  // mean per-sample loss, one entry per epoch
};

// Masks are built once per sample up front and reused across epochs. Samples
// are visited in a seeded shuffled order each epoch; parameters start at
// zero. A non-finite loss aborts with a diagnostic.
TrainResult train_head(const std::vector<SynthScene>& scenes, const TrainConfig& cfg);

}  // namespace wsseg
