#pragma once

#include "wsseg/fusion.hpp"
#include "wsseg/tensor.hpp"

namespace wsseg {

// Per-class activation maps, one channel per foreground class.
struct CamStack {
  Grid3 maps;
  int class_count() const { return maps.c; }
};

// Linear classifier weights: classes x units.
struct CamWeights {
  int classes = 0;
  int units = 0;
  std::vector<double> w;  // row-major, classes x units

  CamWeights() = default;
  CamWeights(int classes_, int units_, double fill = 0.0)
      : classes(classes_), units(units_) {
    if (classes_ <= 0 || units_ <= 0) throw DimensionError("CamWeights: dims must be positive");
    w.assign(static_cast<size_t>(classes_) * units_, fill);
  }
  double& at(int c, int k) { return w[static_cast<size_t>(c) * units + k]; }
  double at(int c, int k) const { return w[static_cast<size_t>(c) * units + k]; }
};

// Per-pixel label distributions, channel 0 = background. Each pixel sums to 1.
struct ProbMaps {
  Grid3 p;  // (classes + 1) x h x w
  int label_count() const { return p.c; }
};

// Floor applied to combined maps before per-pixel normalization.
inline constexpr double kProbFloor = 1e-12;

// Weighted sums of unit activations, one map per class. With rescale each map
// is independently brought to [0, 1]; raw sums are returned otherwise.
CamStack compute_cam(const Grid3& features, const CamWeights& w, bool rescale = true);

// 1 where the map exceeds rho times its max, else 0. Non-positive max gives
// an all-zero mask.
Grid2 binarize_cam(const Grid2& m, double rho = 0.2);

// Pre-normalization combined maps, channel 0 = background:
//   fg c:  alpha * (pf .* B_c) + (1 - alpha) * M_c
//   bg:    alpha * (1 - pf)    + (1 - alpha) * clamp(1 - mean_c M_c, 0, 1)
// where B_c thresholds M_c at rho of its max. Every entry is floored at
// kProbFloor. Raising pf at a pixel never lowers that pixel's foreground
// entries.
Grid3 combine_raw(const ForegroundMap& pf, const CamStack& cams, double alpha, double rho = 0.2);

// combine_raw followed by per-pixel normalization to the simplex.
ProbMaps combine_multiclass(const ForegroundMap& pf, const CamStack& cams, double alpha = 0.5,
                            double rho = 0.2);

// Two-channel maps (background, foreground) = (1 - pf, pf), floored and
// normalized per pixel, so fg/bg priors feed the same downstream interface.
ProbMaps fgbg_to_probmaps(const ForegroundMap& pf);

}  // namespace wsseg
